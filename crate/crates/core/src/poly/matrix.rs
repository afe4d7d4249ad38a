use nalgebra::DMatrix;

use super::{Coefficient, PolyError, Polynomial};

/// Dense matrix of polynomials over a common variable set.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix<C = f64> {
    rows: usize,
    cols: usize,
    entries: Vec<Polynomial<C>>,
    symmetric: bool,
}

impl<C: Coefficient> PolyMatrix<C> {
    pub fn zeros(rows: usize, cols: usize, nvars: usize) -> Self {
        PolyMatrix {
            rows,
            cols,
            entries: vec![Polynomial::zero(nvars); rows * cols],
            symmetric: rows == cols,
        }
    }

    /// Row-major construction. The symmetric flag is set only if the entries
    /// actually are symmetric.
    pub fn from_rows(rows: Vec<Vec<Polynomial<C>>>) -> Result<Self, PolyError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let nvars = rows
            .first()
            .and_then(|r| r.first())
            .map_or(0, Polynomial::nvars);
        let mut entries = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(PolyError::Dimension("ragged rows".into()));
            }
            for p in row {
                if p.nvars() != nvars {
                    return Err(PolyError::VarMismatch {
                        left: nvars,
                        right: p.nvars(),
                    });
                }
                entries.push(p);
            }
        }
        let mut m = PolyMatrix {
            rows: nrows,
            cols: ncols,
            entries,
            symmetric: false,
        };
        m.symmetric = m.is_structurally_symmetric();
        Ok(m)
    }

    /// Builds a symmetric matrix from a generator called on the upper triangle.
    pub fn symmetric_from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Polynomial<C>) -> Self {
        let mut entries: Vec<Option<Polynomial<C>>> = vec![None; n * n];
        for i in 0..n {
            for j in i..n {
                let p = f(i, j);
                entries[j * n + i] = Some(p.clone());
                entries[i * n + j] = Some(p);
            }
        }
        PolyMatrix {
            rows: n,
            cols: n,
            entries: entries.into_iter().map(Option::unwrap).collect(),
            symmetric: true,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nvars(&self) -> usize {
        self.entries.first().map_or(0, Polynomial::nvars)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn get(&self, i: usize, j: usize) -> &Polynomial<C> {
        &self.entries[i * self.cols + j]
    }

    /// Replaces entry (i, j); for symmetric matrices the mirrored entry too.
    pub fn set(&mut self, i: usize, j: usize, p: Polynomial<C>) {
        if self.symmetric && i != j {
            self.entries[j * self.cols + i] = p.clone();
        }
        self.entries[i * self.cols + j] = p;
    }

    pub fn entries(&self) -> &[Polynomial<C>] {
        &self.entries
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn max_degree(&self) -> u32 {
        self.entries.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        PolyMatrix {
            rows: self.cols,
            cols: self.rows,
            entries,
            symmetric: self.symmetric,
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(PolyError::Dimension(format!(
                "{}x{} + {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.checked_add(b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
            symmetric: self.symmetric && other.symmetric,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|p| p.scale(factor)).collect(),
            symmetric: self.symmetric,
        }
    }

    /// `self * rhs` where `rhs` has real polynomial entries.
    pub fn mul_real(&self, rhs: &PolyMatrix<f64>) -> Result<Self, PolyError> {
        if self.cols != rhs.rows {
            return Err(PolyError::Dimension(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let nvars = self.nvars();
        let mut entries = Vec::with_capacity(self.rows * rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = Polynomial::zero(nvars);
                for k in 0..self.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    acc = acc.checked_add(&self.get(i, k).checked_mul_real(b)?)?;
                }
                entries.push(acc);
            }
        }
        Ok(PolyMatrix {
            rows: self.rows,
            cols: rhs.cols,
            entries,
            symmetric: false,
        })
    }

    /// `self + selfᵀ`, flagged symmetric.
    pub fn symmetrize_sum(&self) -> Result<Self, PolyError> {
        let mut out = self.checked_add(&self.transpose())?;
        out.symmetric = true;
        Ok(out)
    }

    pub fn map_coeffs<D: Coefficient>(&self, mut f: impl FnMut(&C) -> D) -> PolyMatrix<D> {
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|p| p.map_coeffs(&mut f)).collect(),
            symmetric: self.symmetric,
        }
    }

    pub fn map_entries(&self, mut f: impl FnMut(&Polynomial<C>) -> Polynomial<C>) -> Self {
        let mut out = PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(&mut f).collect(),
            symmetric: false,
        };
        out.symmetric = self.symmetric && out.is_structurally_symmetric();
        out
    }
}

impl PolyMatrix<f64> {
    pub fn identity(n: usize, nvars: usize) -> Self {
        Self::symmetric_from_fn(n, |i, j| {
            if i == j {
                Polynomial::one(nvars)
            } else {
                Polynomial::zero(nvars)
            }
        })
    }

    /// Numeric matrix at a point.
    pub fn evaluate(&self, point: &[f64]) -> Result<DMatrix<f64>, PolyError> {
        if point.len() != self.nvars() && !self.entries.is_empty() {
            return Err(PolyError::LengthMismatch {
                expected: self.nvars(),
                got: point.len(),
            });
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j).eval_unchecked(point)
        }))
    }

    /// Largest coefficientwise difference over all entries.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.max_coeff_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Jacobian `∂f_i/∂x_j` of a polynomial vector field.
pub fn jacobian(field: &[Polynomial<f64>]) -> Result<PolyMatrix<f64>, PolyError> {
    let n = field.len();
    let mut entries = Vec::with_capacity(n * n);
    for fi in field {
        if fi.nvars() != n {
            return Err(PolyError::LengthMismatch {
                expected: fi.nvars(),
                got: n,
            });
        }
        for j in 0..n {
            entries.push(fi.differentiate(j)?);
        }
    }
    Ok(PolyMatrix {
        rows: n,
        cols: n,
        entries,
        symmetric: false,
    })
}

/// Derivative of `m` along the flow of `field`:
/// `(dM/dt)_ij = Σ_k ∂M_ij/∂x_k · f_k`.
pub fn lie_derivative_matrix<C: Coefficient>(
    m: &PolyMatrix<C>,
    field: &[Polynomial<f64>],
) -> Result<PolyMatrix<C>, PolyError> {
    if !m.is_symmetric() {
        return Err(PolyError::NotSymmetric);
    }
    let nvars = m.nvars();
    if field.len() != nvars {
        return Err(PolyError::LengthMismatch {
            expected: nvars,
            got: field.len(),
        });
    }
    let n = m.rows();
    let mut err = None;
    let out = PolyMatrix::symmetric_from_fn(n, |i, j| {
        let mut acc = Polynomial::zero(nvars);
        for (k, fk) in field.iter().enumerate() {
            let step = m
                .get(i, j)
                .differentiate(k)
                .and_then(|d| d.checked_mul_real(fk))
                .and_then(|t| acc.checked_add(&t));
            match step {
                Ok(v) => acc = v,
                Err(e) => err = Some(e),
            }
        }
        acc
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
