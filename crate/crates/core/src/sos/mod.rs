//! Parametrized sum-of-squares programs.
//!
//! A [`SosProgram`] owns a registry of scalar decision variables, a list of
//! SOS-matrix constraints `S(x) - εI ⪰ 0 (SOS)` whose entries are polynomials
//! with [`LinExpr`] coefficients, and linear equalities between the decision
//! variables. [`SosProgram::compile`] lowers it to an [`SdpProblem`](crate::sdp::SdpProblem)
//! with one Gram block per constraint; [`Compiled::recover`] maps a solver
//! point back to concrete polynomial matrices and Gram certificates.

mod certfile;
mod compile;
mod presolve;

pub use certfile::{CertificateFile, GramSection, CertFileError};
pub use compile::{BasisElem, CompileOptions, Compiled, GramCertificate, Recovered, DEFAULT_DEGREE_CAP};
pub use presolve::{BackMap, Presolved};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::poly::{Coefficient, Monomial, PolyError, PolyMatrix, Polynomial};

/// Handle to a scalar decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DecisionVar(pub usize);

/// Affine expression `constant + Σ coef·var`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinExpr {
    pub constant: f64,
    terms: BTreeMap<usize, f64>,
}

impl LinExpr {
    pub fn constant(value: f64) -> Self {
        LinExpr {
            constant: value,
            terms: BTreeMap::new(),
        }
    }

    pub fn var(v: DecisionVar) -> Self {
        let mut e = LinExpr::default();
        e.terms.insert(v.0, 1.0);
        e
    }

    pub fn terms(&self) -> impl Iterator<Item = (DecisionVar, f64)> + '_ {
        self.terms.iter().map(|(&k, &c)| (DecisionVar(k), c))
    }

    pub fn coeff(&self, v: DecisionVar) -> f64 {
        self.terms.get(&v.0).copied().unwrap_or(0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, v: DecisionVar, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(v.0).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&v.0);
        }
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(&k, &c)| c * values[k]).sum::<f64>()
    }

    /// Replaces every variable `v` by `map[v]`.
    pub fn substitute(&self, map: &[LinExpr]) -> LinExpr {
        let mut out = LinExpr::constant(self.constant);
        for (&k, &c) in &self.terms {
            out.add_assign_ref(&map[k].scale(c));
        }
        out.cleaned()
    }

    /// Drops terms that are roundoff relative to the largest magnitude present.
    pub fn cleaned(mut self) -> Self {
        let scale = self
            .terms
            .values()
            .fold(self.constant.abs(), |a, c| a.max(c.abs()))
            .max(1.0);
        let thresh = 1e-11 * scale;
        self.terms.retain(|_, c| c.abs() > thresh);
        if self.constant.abs() <= thresh {
            self.constant = 0.0;
        }
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(self.constant.abs(), |a, c| a.max(c.abs()))
    }
}

impl Coefficient for LinExpr {
    fn zero() -> Self {
        LinExpr::default()
    }

    fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    fn add_assign_ref(&mut self, other: &Self) {
        self.constant += other.constant;
        for (&k, &c) in &other.terms {
            self.add_term(DecisionVar(k), c);
        }
    }

    fn scale(&self, factor: f64) -> Self {
        if factor == 0.0 {
            return LinExpr::default();
        }
        LinExpr {
            constant: self.constant * factor,
            terms: self.terms.iter().map(|(&k, &c)| (k, c * factor)).collect(),
        }
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (&k, &c) in &self.terms {
            if c < 0.0 {
                write!(f, " - {}*v{}", -c, k)?;
            } else {
                write!(f, " + {}*v{}", c, k)?;
            }
        }
        Ok(())
    }
}

pub type ParamPoly = Polynomial<LinExpr>;
pub type ParamPolyMatrix = PolyMatrix<LinExpr>;

/// Lifts a real polynomial matrix to one with constant affine coefficients.
pub fn lift(m: &PolyMatrix<f64>) -> ParamPolyMatrix {
    m.map_coeffs(|&c| LinExpr::constant(c))
}

/// Substitutes decision-variable values into a parametrized matrix.
pub fn instantiate(m: &ParamPolyMatrix, values: &[f64]) -> PolyMatrix<f64> {
    m.map_coeffs(|e| e.eval(values))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SosError {
    #[error("template degree {0} is odd")]
    OddDegree(u32),
    #[error("constraint matrix is not symmetric")]
    NotSymmetric,
    #[error("x-degree {degree} exceeds the basis cap {cap}")]
    BasisOverflow { degree: u32, cap: u32 },
    #[error("equality constraints are inconsistent (residual {0:.3e})")]
    InfeasibleByPresolve(f64),
    #[error("solution status is {0}, expected feasible")]
    NotFeasible(crate::sdp::SdpStatus),
    #[error("unknown decision variable {0}")]
    UnknownVar(usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Sdp(#[from] crate::sdp::SdpError),
}

/// One registered `S - εI` SOS-matrix constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct SosConstraint {
    pub label: String,
    pub matrix: ParamPolyMatrix,
    pub eps: f64,
}

/// Handle returned by [`SosProgram::add_sos_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct SosProgram {
    nvars: usize,
    labels: Vec<String>,
    constraints: Vec<SosConstraint>,
    /// Each expression is constrained to equal zero.
    equalities: Vec<LinExpr>,
    objective: Option<LinExpr>,
}

impl SosProgram {
    /// Empty program over `nvars` indeterminates.
    pub fn new(nvars: usize) -> Self {
        SosProgram {
            nvars,
            labels: Vec::new(),
            constraints: Vec::new(),
            equalities: Vec::new(),
            objective: None,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn num_decision_vars(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, v: DecisionVar) -> &str {
        &self.labels[v.0]
    }

    pub fn constraints(&self) -> &[SosConstraint] {
        &self.constraints
    }

    pub fn equalities(&self) -> &[LinExpr] {
        &self.equalities
    }

    pub fn objective(&self) -> Option<&LinExpr> {
        self.objective.as_ref()
    }

    pub fn new_var(&mut self, label: impl Into<String>) -> DecisionVar {
        self.labels.push(label.into());
        DecisionVar(self.labels.len() - 1)
    }

    /// Symmetric `n×n` template whose distinct entries are dense polynomials of
    /// total degree `degree` in `structure_vars` (all variables when `None`),
    /// each coefficient a fresh decision variable.
    pub fn metric_template(
        &mut self,
        n: usize,
        degree: u32,
        structure_vars: Option<&[usize]>,
    ) -> Result<ParamPolyMatrix, SosError> {
        if degree % 2 == 1 {
            return Err(SosError::OddDegree(degree));
        }
        let vars: Vec<usize> = match structure_vars {
            Some(v) => {
                if let Some(&bad) = v.iter().find(|&&i| i >= self.nvars) {
                    return Err(PolyError::VarOutOfRange {
                        index: bad,
                        nvars: self.nvars,
                    }
                    .into());
                }
                v.to_vec()
            }
            None => (0..self.nvars).collect(),
        };
        let local = Monomial::all_up_to(vars.len(), degree);
        let monos: Vec<Monomial> = local
            .iter()
            .map(|m| {
                let mut e = vec![0u32; self.nvars];
                for (k, &v) in vars.iter().enumerate() {
                    e[v] = m.exponents()[k];
                }
                Monomial::new(e)
            })
            .collect();
        let mut entries = vec![vec![Polynomial::zero(self.nvars); n]; n];
        for i in 0..n {
            for j in i..n {
                let mut p = Polynomial::zero(self.nvars);
                for (k, m) in monos.iter().enumerate() {
                    let v = self.new_var(format!("m{}{}_{}", i + 1, j + 1, k));
                    p.add_term(m.clone(), &LinExpr::var(v));
                }
                entries[j][i] = p.clone();
                entries[i][j] = p;
            }
        }
        Ok(PolyMatrix::from_rows(entries)?)
    }

    /// Registers the constraint that `s - eps·I` is an SOS matrix.
    pub fn add_sos_matrix(
        &mut self,
        label: impl Into<String>,
        s: ParamPolyMatrix,
        eps: f64,
    ) -> Result<ConstraintId, SosError> {
        if !s.is_structurally_symmetric() {
            return Err(SosError::NotSymmetric);
        }
        if s.nvars() != self.nvars && !s.entries().is_empty() {
            return Err(PolyError::VarMismatch {
                left: self.nvars,
                right: s.nvars(),
            }
            .into());
        }
        self.check_vars_in(&s)?;
        self.constraints.push(SosConstraint {
            label: label.into(),
            matrix: s,
            eps,
        });
        Ok(ConstraintId(self.constraints.len() - 1))
    }

    fn check_vars_in(&self, s: &ParamPolyMatrix) -> Result<(), SosError> {
        for p in s.entries() {
            for (_, e) in p.terms() {
                self.check_expr(e)?;
            }
        }
        Ok(())
    }

    fn check_expr(&self, e: &LinExpr) -> Result<(), SosError> {
        match e.terms().find(|(v, _)| v.0 >= self.labels.len()) {
            Some((v, _)) => Err(SosError::UnknownVar(v.0)),
            None => Ok(()),
        }
    }

    /// Adds the equality `expr = 0`.
    pub fn add_equality(&mut self, expr: LinExpr) -> Result<(), SosError> {
        self.check_expr(&expr)?;
        if !expr.is_zero() {
            self.equalities.push(expr);
        }
        Ok(())
    }

    /// Forces every coefficient of entry `(i, j)` of `e` to zero.
    pub fn pin_zero(&mut self, e: &ParamPolyMatrix, i: usize, j: usize) -> Result<(), SosError> {
        if i >= e.rows() || j >= e.cols() {
            return Err(PolyError::Dimension(format!(
                "entry ({}, {}) outside {}x{}",
                i,
                j,
                e.rows(),
                e.cols()
            ))
            .into());
        }
        for (_, c) in e.get(i, j).terms() {
            self.add_equality(c.clone())?;
        }
        Ok(())
    }

    /// Objective to minimize; feasibility problems leave it unset.
    pub fn set_objective(&mut self, obj: LinExpr) -> Result<(), SosError> {
        self.check_expr(&obj)?;
        self.objective = Some(obj);
        Ok(())
    }

    /// Applies `map` (one expression per current variable, over the variables
    /// of `labels`) to every constraint and the objective.
    fn substituted(&self, labels: Vec<String>, map: &[LinExpr]) -> SosProgram {
        let sub = |e: &LinExpr| e.substitute(map);
        SosProgram {
            nvars: self.nvars,
            labels,
            constraints: self
                .constraints
                .iter()
                .map(|c| SosConstraint {
                    label: c.label.clone(),
                    matrix: c.matrix.map_coeffs(sub),
                    eps: c.eps,
                })
                .collect(),
            equalities: Vec::new(),
            objective: self.objective.as_ref().map(sub),
        }
    }
}
