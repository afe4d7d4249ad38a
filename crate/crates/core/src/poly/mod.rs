//! Sparse multivariate polynomials and polynomial matrices.
//!
//! Polynomials live over a fixed number of variables that are referenced by
//! index; names only matter for parsing and printing. Terms are kept in a
//! `BTreeMap` keyed by [`Monomial`] in graded-lexicographic order, so two
//! polynomials with the same terms compare equal structurally.
//!
//! The coefficient type is generic so that the same machinery works for plain
//! real polynomials and for polynomials whose coefficients are affine
//! expressions in decision variables (see [`crate::sos::LinExpr`]).

mod matrix;
mod parse;

pub use matrix::{jacobian, lie_derivative_matrix, PolyMatrix};
pub use parse::{parse_polynomial, parse_with, ParseError, Symbol};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Errors raised by polynomial arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("variable count mismatch: {left} vs {right}")]
    VarMismatch { left: usize, right: usize },
    #[error("variable index {index} out of range for {nvars} variables")]
    VarOutOfRange { index: usize, nvars: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not symmetric")]
    NotSymmetric,
}

/// Scalar types usable as polynomial coefficients.
pub trait Coefficient: Clone + fmt::Debug + PartialEq {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign_ref(&mut self, other: &Self);
    fn scale(&self, factor: f64) -> Self;
}

impl Coefficient for f64 {
    fn zero() -> Self {
        0.0
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn add_assign_ref(&mut self, other: &Self) {
        *self += *other;
    }

    fn scale(&self, factor: f64) -> Self {
        *self * factor
    }
}

/// Exponent vector of a monomial, one entry per ambient variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    /// The monomial `x_index`.
    pub fn var(nvars: usize, index: usize) -> Self {
        let mut e = vec![0; nvars];
        e[index] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .filter(|(e, _)| **e > 0)
            .map(|(e, x)| x.powi(*e as i32))
            .product()
    }

    /// All monomials in `nvars` variables of total degree at most `max_degree`,
    /// in increasing graded-lex order.
    pub fn all_up_to(nvars: usize, max_degree: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        for d in 0..=max_degree {
            let mut exps = vec![0u32; nvars];
            collect_degree(nvars, d, 0, &mut exps, &mut out);
        }
        out.sort();
        out
    }
}

fn collect_degree(nvars: usize, remaining: u32, pos: usize, exps: &mut Vec<u32>, out: &mut Vec<Monomial>) {
    if nvars == 0 {
        if remaining == 0 {
            out.push(Monomial(Vec::new()));
        }
        return;
    }
    if pos == nvars - 1 {
        exps[pos] = remaining;
        out.push(Monomial(exps.clone()));
        return;
    }
    for e in 0..=remaining {
        exps[pos] = e;
        collect_degree(nvars, remaining - e, pos + 1, exps, out);
    }
    exps[pos] = 0;
}

impl Ord for Monomial {
    // graded lexicographic: total degree first, then exponents of x1, x2, ...
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial with coefficients of type `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<C = f64> {
    nvars: usize,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coefficient> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, value: C) -> Self {
        Self::from_term(Monomial::one(nvars), value)
    }

    pub fn from_term(mono: Monomial, coeff: C) -> Self {
        let mut p = Self::zero(mono.nvars());
        if !coeff.is_zero() {
            p.terms.insert(mono, coeff);
        }
        p
    }

    /// Builds a polynomial from (monomial, coefficient) pairs, merging duplicates.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            assert_eq!(m.nvars(), nvars, "monomial arity does not match");
            p.add_term(m, &c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in increasing graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &Monomial) -> Option<&C> {
        self.terms.get(mono)
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Highest exponent of one variable.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, mono: Monomial, coeff: &C) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(c) => {
                c.add_assign_ref(coeff);
                if c.is_zero() {
                    self.terms.remove(&mono);
                }
            }
            None => {
                self.terms.insert(mono, coeff.clone());
            }
        }
    }

    fn check_vars(&self, other_nvars: usize) -> Result<(), PolyError> {
        if self.nvars != other_nvars {
            return Err(PolyError::VarMismatch {
                left: self.nvars,
                right: other_nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_vars(other.nvars)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.checked_add(&other.scale(-1.0))
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        if factor == 0.0 {
            return out;
        }
        for (m, c) in &self.terms {
            let v = c.scale(factor);
            if !v.is_zero() {
                out.terms.insert(m.clone(), v);
            }
        }
        out
    }

    /// Product with a real polynomial.
    pub fn checked_mul_real(&self, other: &Polynomial<f64>) -> Result<Self, PolyError> {
        self.check_vars(other.nvars)?;
        let mut out = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), &ca.scale(*cb));
            }
        }
        Ok(out)
    }

    /// Formal partial derivative with respect to variable `var`.
    pub fn differentiate(&self, var: usize) -> Result<Self, PolyError> {
        if var >= self.nvars {
            return Err(PolyError::VarOutOfRange {
                index: var,
                nvars: self.nvars,
            });
        }
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[var] -= 1;
            out.add_term(Monomial(exps), &c.scale(e as f64));
        }
        Ok(out)
    }

    /// Applies `f` to every coefficient, dropping terms that become zero.
    pub fn map_coeffs<D: Coefficient>(&self, mut f: impl FnMut(&C) -> D) -> Polynomial<D> {
        let mut out = Polynomial::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), &f(c));
        }
        out
    }

    /// Re-expresses the polynomial over `new_nvars` variables, sending variable
    /// `i` to `mapping[i]`.
    pub fn remap_vars(&self, new_nvars: usize, mapping: &[usize]) -> Result<Self, PolyError> {
        if mapping.len() != self.nvars {
            return Err(PolyError::LengthMismatch {
                expected: self.nvars,
                got: mapping.len(),
            });
        }
        if let Some(&bad) = mapping.iter().find(|&&t| t >= new_nvars) {
            return Err(PolyError::VarOutOfRange {
                index: bad,
                nvars: new_nvars,
            });
        }
        let mut out = Self::zero(new_nvars);
        for (m, c) in &self.terms {
            let mut exps = vec![0; new_nvars];
            for (i, &e) in m.0.iter().enumerate() {
                exps[mapping[i]] += e;
            }
            out.add_term(Monomial(exps), c);
        }
        Ok(out)
    }

    /// Drops trailing variables, keeping the first `keep`. Fails if a dropped
    /// variable actually occurs.
    pub fn truncate_vars(&self, keep: usize) -> Result<Self, PolyError> {
        let mut out = Self::zero(keep);
        for (m, c) in &self.terms {
            if let Some(pos) = m.0[keep..].iter().position(|&e| e > 0) {
                return Err(PolyError::VarOutOfRange {
                    index: keep + pos,
                    nvars: keep,
                });
            }
            out.add_term(Monomial(m.0[..keep].to_vec()), c);
        }
        Ok(out)
    }

    /// Splits `p = p0 + x_var * p1` where neither part depends on `x_var`.
    /// Returns `None` when `x_var` occurs with degree above one.
    pub fn affine_split(&self, var: usize) -> Option<(Self, Self)> {
        let mut p0 = Self::zero(self.nvars);
        let mut p1 = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            match m.0[var] {
                0 => p0.add_term(m.clone(), c),
                1 => {
                    let mut exps = m.0.clone();
                    exps[var] = 0;
                    p1.add_term(Monomial(exps), c);
                }
                _ => return None,
            }
        }
        Some((p0, p1))
    }

    /// Substitutes a real value for one variable.
    pub fn substitute(&self, var: usize, value: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            let mut exps = m.0.clone();
            exps[var] = 0;
            out.add_term(Monomial(exps), &c.scale(value.powi(e as i32)));
        }
        out
    }

    /// Drops coefficients whose magnitude, as measured by `norm`, is below `tol`.
    pub fn prune(&self, tol: f64, norm: impl Fn(&C) -> f64) -> Self {
        let mut out = self.clone();
        out.terms.retain(|_, c| norm(c) > tol);
        out
    }
}

impl Polynomial<f64> {
    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, 1.0)
    }

    /// The polynomial `x_index`.
    pub fn var(nvars: usize, index: usize) -> Self {
        Self::from_term(Monomial::var(nvars, index), 1.0)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.checked_mul_real(other)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.nvars);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Numeric value at `point`. Powers of each variable are tabulated once so
    /// every term costs one product per variable.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::LengthMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        Ok(self.eval_unchecked(point))
    }

    pub(crate) fn eval_unchecked(&self, point: &[f64]) -> f64 {
        let mut powers: Vec<Vec<f64>> = Vec::with_capacity(self.nvars);
        for (v, &x) in point.iter().enumerate() {
            let top = self.degree_in(v) as usize;
            let mut row = Vec::with_capacity(top + 1);
            let mut acc = 1.0;
            for _ in 0..=top {
                row.push(acc);
                acc *= x;
            }
            powers.push(row);
        }
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut t = *c;
            for (v, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t *= powers[v][e as usize];
                }
            }
            total += t;
        }
        total
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    /// Coefficientwise distance `max |a_m - b_m|`.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        match self.checked_sub(other) {
            Ok(d) => d.max_abs_coeff(),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn display_with<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, names }
    }
}

macro_rules! impl_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<'a, C: Coefficient> $tr<&'a Polynomial<C>> for &'a Polynomial<C> {
            type Output = Polynomial<C>;

            /// Panics if the operands live over different variable counts; use
            /// the `checked_*` method to get an error instead.
            fn $method(self, rhs: &'a Polynomial<C>) -> Polynomial<C> {
                self.$checked(rhs).expect("polynomial variable mismatch")
            }
        }

        impl<C: Coefficient> $tr<Polynomial<C>> for Polynomial<C> {
            type Output = Polynomial<C>;

            fn $method(self, rhs: Polynomial<C>) -> Polynomial<C> {
                self.$checked(&rhs).expect("polynomial variable mismatch")
            }
        }
    };
}

impl_binop!(Add, add, checked_add);
impl_binop!(Sub, sub, checked_sub);

impl<'a> Mul<&'a Polynomial<f64>> for &'a Polynomial<f64> {
    type Output = Polynomial<f64>;

    fn mul(self, rhs: &'a Polynomial<f64>) -> Polynomial<f64> {
        self.checked_mul(rhs).expect("polynomial variable mismatch")
    }
}

impl Mul<Polynomial<f64>> for Polynomial<f64> {
    type Output = Polynomial<f64>;

    fn mul(self, rhs: Polynomial<f64>) -> Polynomial<f64> {
        &self * &rhs
    }
}

impl<C: Coefficient> Neg for Polynomial<C> {
    type Output = Polynomial<C>;

    fn neg(self) -> Polynomial<C> {
        self.scale(-1.0)
    }
}

impl<C: Coefficient> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;

    fn neg(self) -> Polynomial<C> {
        self.scale(-1.0)
    }
}

/// Printer for real polynomials in the textual grammar accepted by
/// [`parse_polynomial`]. Terms come out highest degree first.
pub struct PolyDisplay<'a> {
    poly: &'a Polynomial<f64>,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, &c)) in self.poly.terms.iter().rev().enumerate() {
            let neg = c < 0.0;
            let mag = c.abs();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mono = format_monomial(m, self.names);
            if mono.is_empty() {
                write!(f, "{}", mag)?;
            } else if mag == 1.0 {
                write!(f, "{}", mono)?;
            } else {
                write!(f, "{}*{}", mag, mono)?;
            }
        }
        Ok(())
    }
}

fn format_monomial(m: &Monomial, names: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.0.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let name = names
            .get(i)
            .cloned()
            .unwrap_or_else(|| format!("x{}", i + 1));
        if e == 1 {
            parts.push(name);
        } else {
            parts.push(format!("{}^{}", name, e));
        }
    }
    parts.join("*")
}

impl fmt::Display for Polynomial<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (1..=self.nvars).map(|i| format!("x{}", i)).collect();
        write!(f, "{}", self.display_with(&names))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    fn c(n: usize, v: f64) -> Polynomial {
        Polynomial::constant(n, v)
    }

    #[test]
    fn add_cancels_and_merges() {
        let x1 = x(2, 0);
        let p = &(&x1 * &x1) + &c(2, 1.0);
        let q = -(&x1 * &x1);
        assert_eq!(&p + &q, c(2, 1.0));
        assert_eq!(&p + &Polynomial::zero(2), p);
        let xy = &x1 * &x(2, 1);
        assert_eq!(&xy.scale(2.0) + &xy.scale(3.0), xy.scale(5.0));
    }

    #[test]
    fn add_rejects_mismatch() {
        let err = x(2, 0).checked_add(&x(3, 0)).unwrap_err();
        assert_eq!(err, PolyError::VarMismatch { left: 2, right: 3 });
        assert!(x(2, 0).checked_mul(&x(1, 0)).is_err());
    }

    #[test]
    fn multiply_examples() {
        let x1 = x(2, 0);
        let x2 = x(2, 1);
        let one = c(2, 1.0);
        let lhs = &(&x1 + &one) * &(&x1 - &one);
        assert_eq!(lhs, &(&x1 * &x1) - &one);
        assert_eq!(&lhs * &one, lhs);
        let s = &x1 + &x2;
        let sq = &s * &s;
        let expect = &(&(&x1 * &x1) + &(&x1 * &x2).scale(2.0)) + &(&x2 * &x2);
        assert_eq!(sq, expect);
        assert_eq!(sq.degree(), 2);
    }

    #[test]
    fn differentiate_examples() {
        let x1 = x(2, 0);
        assert_eq!(x1.pow(3).differentiate(0).unwrap(), x1.pow(2).scale(3.0));
        assert!(x1.pow(2).differentiate(1).unwrap().is_zero());
        assert!(x1.differentiate(2).is_err());

        // jet engine first component: -psi - 3/2 phi^2 - 1/2 phi^3
        let phi = x(2, 0);
        let psi = x(2, 1);
        let f1 = &(&(-&psi) - &phi.pow(2).scale(1.5)) - &phi.pow(3).scale(0.5);
        let d = f1.differentiate(0).unwrap();
        let expect = &phi.scale(-3.0) - &phi.pow(2).scale(1.5);
        assert_eq!(d, expect);
    }

    #[test]
    fn evaluate_examples() {
        let x1 = x(2, 0);
        let p = &x1.pow(2) + &x(2, 1);
        assert_eq!(p.evaluate(&[2.0, 1.0]).unwrap(), 5.0);
        assert_eq!(Polynomial::<f64>::zero(2).evaluate(&[3.0, 4.0]).unwrap(), 0.0);
        assert!(p.evaluate(&[1.0]).is_err());

        let phi = x(2, 0);
        let psi = x(2, 1);
        let f1 = &(&(-&psi) - &phi.pow(2).scale(1.5)) - &phi.pow(3).scale(0.5);
        assert_eq!(f1.evaluate(&[1.0, 0.0]).unwrap(), -2.0);
    }

    #[test]
    fn graded_lex_order() {
        let a = Monomial::new(vec![2, 0]);
        let b = Monomial::new(vec![0, 3]);
        let c = Monomial::new(vec![1, 2]);
        assert!(a < b);
        assert!(b < c);
        let all = Monomial::all_up_to(2, 2);
        assert_eq!(all.len(), 6);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Monomial::all_up_to(2, 3).len(), 10);
        assert_eq!(Monomial::all_up_to(1, 4).len(), 5);
        assert_eq!(Monomial::all_up_to(0, 4).len(), 1);
    }

    #[test]
    fn affine_split_and_substitute() {
        // x1^3 * d + x2 over (x1, x2, d)
        let p = &(&x(3, 0).pow(3) * &x(3, 2)) + &x(3, 1);
        let (p0, p1) = p.affine_split(2).unwrap();
        assert_eq!(p0, x(3, 1));
        assert_eq!(p1, x(3, 0).pow(3));
        assert!(x(3, 2).pow(2).affine_split(2).is_none());
        let s = p.substitute(2, 2.0);
        assert_eq!(s, &x(3, 0).pow(3).scale(2.0) + &x(3, 1));
        assert_eq!(s.truncate_vars(2).unwrap().nvars(), 2);
        assert!(p.truncate_vars(2).is_err());
    }

    #[test]
    fn display_uses_names() {
        let names = vec!["phi".to_string(), "psi".to_string()];
        let phi = x(2, 0);
        let psi = x(2, 1);
        let f1 = &(&(-&psi) - &phi.pow(2).scale(1.5)) - &phi.pow(3).scale(0.5);
        assert_eq!(
            f1.display_with(&names).to_string(),
            "-0.5*phi^3 - 1.5*phi^2 - psi"
        );
        assert_eq!(Polynomial::<f64>::zero(2).to_string(), "0");
    }
}
