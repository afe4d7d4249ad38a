//! Lowering of SOS programs to block SDPs and recovery of certificates.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

use super::{instantiate, LinExpr, SosError, SosProgram};
use crate::poly::{Coefficient, Monomial, PolyMatrix, Polynomial};
use crate::sdp::{SdpProblem, SdpSolution, SdpStatus, Var};

/// Largest x-degree accepted in a constraint matrix.
pub const DEFAULT_DEGREE_CAP: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions {
    pub degree_cap: u32,
    /// Drop basis elements whose Gram diagonal is forced to zero because the
    /// matching squared monomial is absent from the target.
    pub prune_basis: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            degree_cap: DEFAULT_DEGREE_CAP,
            prune_basis: false,
        }
    }
}

/// Basis element `y_aux · x^mono`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisElem {
    pub aux: usize,
    pub mono: Monomial,
}

/// Gram-matrix witness that `target - eps·I` is an SOS matrix:
/// `yᵀ(target - eps·I)y = Zᵀ Q Z` with `Z` the listed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GramCertificate {
    pub label: String,
    pub basis: Vec<BasisElem>,
    pub gram: DMatrix<f64>,
    pub target: PolyMatrix<f64>,
    pub eps: f64,
}

impl GramCertificate {
    /// The polynomial matrix `S̃` with `yᵀS̃y = ZᵀQZ`.
    pub fn reconstruct(&self) -> PolyMatrix<f64> {
        let m = self.target.rows();
        let nvars = self.target.nvars();
        let mut out = PolyMatrix::<f64>::zeros(m, m, nvars);
        let mut acc: BTreeMap<(usize, usize), Polynomial> = BTreeMap::new();
        for k1 in 0..self.basis.len() {
            for k2 in k1..self.basis.len() {
                let (a, b) = (&self.basis[k1], &self.basis[k2]);
                let (i, j) = (a.aux.min(b.aux), a.aux.max(b.aux));
                let mut c = self.gram[(k1, k2)];
                if k1 != k2 {
                    c *= 2.0;
                }
                if i != j {
                    c *= 0.5;
                }
                acc.entry((i, j))
                    .or_insert_with(|| Polynomial::zero(nvars))
                    .add_term(a.mono.mul(&b.mono), &c);
            }
        }
        for ((i, j), p) in acc {
            out.set(i, j, p.clone());
            out.set(j, i, p);
        }
        out
    }

    /// `target - eps·I`.
    pub fn shifted_target(&self) -> PolyMatrix<f64> {
        let m = self.target.rows();
        let nvars = self.target.nvars();
        let mut out = self.target.clone();
        for i in 0..m {
            let p = out.get(i, i).clone();
            let mut q = p;
            q.add_term(Monomial::one(nvars), &-self.eps);
            out.set(i, i, q);
        }
        out
    }

    /// Coefficientwise mismatch between `ZᵀQZ` and `yᵀ(target - εI)y`.
    pub fn reconstruction_error(&self) -> f64 {
        self.reconstruct().max_coeff_diff(&self.shifted_target())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.gram.nrows() == 0 {
            return 0.0;
        }
        let sym = (&self.gram + self.gram.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    /// Gram PSD within `1e-7·(1 + ‖Q‖)` and reconstruction within `1e-7`.
    pub fn is_valid(&self) -> bool {
        let norm = self.gram.amax();
        self.min_eigenvalue() >= -1e-7 * (1.0 + norm) && self.reconstruction_error() <= 1e-7
    }

    /// Certificate for `c·target` with margin `c·eps`.
    pub fn scaled(&self, c: f64) -> GramCertificate {
        GramCertificate {
            label: self.label.clone(),
            basis: self.basis.clone(),
            gram: &self.gram * c,
            target: self.target.scale(c),
            eps: self.eps * c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct BlockInfo {
    constraint: usize,
    block: Option<usize>,
    basis: Vec<BasisElem>,
}

/// SDP form of an [`SosProgram`] plus the bookkeeping needed for recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub sdp: SdpProblem,
    blocks: Vec<BlockInfo>,
    /// Decision variable behind each free SDP column.
    free_vars: Vec<usize>,
    n_decision: usize,
    pub objective_constant: f64,
}

/// Solved decision values and one Gram certificate per constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub values: Vec<f64>,
    pub grams: Vec<GramCertificate>,
}

type Key = (usize, usize, Monomial);

fn target_terms(s: &PolyMatrix<LinExpr>, eps: f64) -> BTreeMap<Key, LinExpr> {
    let m = s.rows();
    let mut out: BTreeMap<Key, LinExpr> = BTreeMap::new();
    for i in 0..m {
        for j in i..m {
            let factor = if i == j { 1.0 } else { 2.0 };
            for (mono, e) in s.get(i, j).terms() {
                out.entry((i, j, mono.clone()))
                    .or_default()
                    .add_assign_ref(&e.scale(factor));
            }
        }
        if eps != 0.0 {
            out.entry((i, i, Monomial::one(s.nvars())))
                .or_default()
                .add_assign_ref(&LinExpr::constant(-eps));
        }
    }
    out.retain(|_, e| !e.is_zero());
    out
}

fn pair_key(a: &BasisElem, b: &BasisElem) -> Key {
    (a.aux.min(b.aux), a.aux.max(b.aux), a.mono.mul(&b.mono))
}

/// Repeatedly removes `y_i x^α` when the target has no `y_i² x^{2α}` term and
/// no other pair of basis elements produces that monomial: the corresponding
/// Gram diagonal entry must vanish, hence its whole row and column.
fn prune(mut basis: Vec<BasisElem>, targets: &BTreeMap<Key, LinExpr>) -> Vec<BasisElem> {
    loop {
        let mut offdiag: BTreeSet<Key> = BTreeSet::new();
        for k1 in 0..basis.len() {
            for k2 in k1 + 1..basis.len() {
                offdiag.insert(pair_key(&basis[k1], &basis[k2]));
            }
        }
        let before = basis.len();
        basis.retain(|b| {
            let key = pair_key(b, b);
            targets.contains_key(&key) || offdiag.contains(&key)
        });
        if basis.len() == before {
            return basis;
        }
    }
}

impl SosProgram {
    pub fn compile(&self, opts: &CompileOptions) -> Result<Compiled, SosError> {
        // decision variables that actually occur become free SDP columns
        let mut used: BTreeSet<usize> = BTreeSet::new();
        let mut note = |e: &LinExpr| {
            for (v, _) in e.terms() {
                used.insert(v.0);
            }
        };
        for c in &self.constraints {
            for p in c.matrix.entries() {
                for (_, e) in p.terms() {
                    note(e);
                }
            }
        }
        for e in &self.equalities {
            note(e);
        }
        if let Some(o) = &self.objective {
            note(o);
        }
        let free_vars: Vec<usize> = used.into_iter().collect();
        let mut col_of = vec![usize::MAX; self.num_decision_vars()];
        for (k, &v) in free_vars.iter().enumerate() {
            col_of[v] = k;
        }

        let mut block_dims = Vec::new();
        let mut blocks = Vec::new();
        let mut rows: Vec<(Vec<(Var, f64)>, f64)> = Vec::new();
        let affine_row = |mut terms: Vec<(Var, f64)>, e: &LinExpr| -> (Vec<(Var, f64)>, f64) {
            for (v, c) in e.terms() {
                terms.push((Var::Free(col_of[v.0]), -c));
            }
            (terms, e.constant)
        };

        for (ci, con) in self.constraints.iter().enumerate() {
            let s = &con.matrix;
            let degree = s.max_degree();
            if degree > opts.degree_cap {
                return Err(SosError::BasisOverflow {
                    degree,
                    cap: opts.degree_cap,
                });
            }
            let half = degree.div_ceil(2);
            let monos = Monomial::all_up_to(self.nvars(), half);
            let mut basis: Vec<BasisElem> = (0..s.rows())
                .flat_map(|aux| {
                    monos.iter().map(move |m| BasisElem {
                        aux,
                        mono: m.clone(),
                    })
                })
                .collect();
            let targets = target_terms(s, con.eps);
            if opts.prune_basis {
                basis = prune(basis, &targets);
            }

            let block = if basis.is_empty() {
                None
            } else {
                block_dims.push(basis.len());
                Some(block_dims.len() - 1)
            };
            let mut gram_rows: BTreeMap<Key, Vec<(Var, f64)>> = BTreeMap::new();
            if let Some(b) = block {
                for k1 in 0..basis.len() {
                    for k2 in k1..basis.len() {
                        let coef = if k1 == k2 { 1.0 } else { 2.0 };
                        gram_rows
                            .entry(pair_key(&basis[k1], &basis[k2]))
                            .or_default()
                            .push((SdpProblem::block_var(b, k2, k1), coef));
                    }
                }
            }
            let mut keys: BTreeSet<Key> = gram_rows.keys().cloned().collect();
            keys.extend(targets.keys().cloned());
            let zero = LinExpr::default();
            for key in keys {
                let terms = gram_rows.remove(&key).unwrap_or_default();
                let target = targets.get(&key).unwrap_or(&zero);
                rows.push(affine_row(terms, target));
            }
            blocks.push(BlockInfo {
                constraint: ci,
                block,
                basis,
            });
        }
        for e in &self.equalities {
            // e = 0  ⇔  Σ c z = -constant
            let terms: Vec<(Var, f64)> = e.terms().map(|(v, c)| (Var::Free(col_of[v.0]), c)).collect();
            rows.push((terms, -e.constant));
        }

        let mut sdp = SdpProblem::new(block_dims, free_vars.len());
        for (terms, rhs) in rows {
            sdp.add_row(terms, rhs);
        }
        let mut objective_constant = 0.0;
        if let Some(o) = &self.objective {
            sdp.objective = o.terms().map(|(v, c)| (Var::Free(col_of[v.0]), c)).collect();
            objective_constant = o.constant;
        }
        Ok(Compiled {
            sdp,
            blocks,
            free_vars,
            n_decision: self.num_decision_vars(),
            objective_constant,
        })
    }
}

impl Compiled {
    /// Gram block sizes, one per constraint (0 when the basis was pruned away).
    pub fn gram_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.basis.len()).collect()
    }

    pub fn basis(&self, constraint: usize) -> &[BasisElem] {
        &self.blocks[constraint].basis
    }

    /// Decision-variable values carried by `sol` (variables absent from every
    /// constraint are reported as zero).
    pub fn decision_values(&self, sol: &SdpSolution) -> Vec<f64> {
        let mut values = vec![0.0; self.n_decision];
        for (k, &v) in self.free_vars.iter().enumerate() {
            values[v] = sol.x_free[k];
        }
        values
    }

    /// Concrete decision values and Gram certificates from a feasible solution.
    pub fn recover(&self, prog: &SosProgram, sol: &SdpSolution) -> Result<Recovered, SosError> {
        if !sol.leans_feasible() {
            return Err(SosError::NotFeasible(sol.status));
        }
        if sol.status != SdpStatus::Feasible && sol.status != SdpStatus::Inaccurate {
            return Err(SosError::NotFeasible(sol.status));
        }
        let values = self.decision_values(sol);
        let grams = self
            .blocks
            .iter()
            .map(|bi| {
                let con = &prog.constraints()[bi.constraint];
                let gram = match bi.block {
                    Some(b) => {
                        let x = &sol.x_blocks[b];
                        (x + x.transpose()) * 0.5
                    }
                    None => DMatrix::zeros(0, 0),
                };
                GramCertificate {
                    label: con.label.clone(),
                    basis: bi.basis.clone(),
                    gram,
                    target: instantiate(&con.matrix, &values),
                    eps: con.eps,
                }
            })
            .collect();
        Ok(Recovered { values, grams })
    }
}
