//! Elimination of decision variables fixed by linear equalities.

use nalgebra::DMatrix;

use super::{DecisionVar, LinExpr, SosError, SosProgram};

/// Expresses every original decision variable as an affine function of the
/// reduced variables.
#[derive(Debug, Clone, PartialEq)]
pub struct BackMap {
    pub exprs: Vec<LinExpr>,
}

impl BackMap {
    pub fn identity(n: usize) -> Self {
        BackMap {
            exprs: (0..n).map(|i| LinExpr::var(DecisionVar(i))).collect(),
        }
    }

    /// Original variable values from reduced ones.
    pub fn apply(&self, reduced: &[f64]) -> Vec<f64> {
        self.exprs.iter().map(|e| e.eval(reduced)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Presolved {
    pub program: SosProgram,
    pub back_map: BackMap,
    /// Original indices of the variables that were eliminated.
    pub eliminated: Vec<usize>,
}

impl SosProgram {
    /// Gaussian elimination on the equalities. Pivot variables are substituted
    /// away everywhere; the remaining variables keep their labels and order.
    pub fn presolve(&self) -> Result<Presolved, SosError> {
        let n = self.num_decision_vars();
        if self.equalities.is_empty() {
            let mut program = self.clone();
            program.equalities.clear();
            return Ok(Presolved {
                program,
                back_map: BackMap::identity(n),
                eliminated: Vec::new(),
            });
        }
        let m = self.equalities.len();
        // [A | -c] for rows A v + c = 0
        let mut a = DMatrix::zeros(m, n + 1);
        for (i, e) in self.equalities.iter().enumerate() {
            for (v, c) in e.terms() {
                a[(i, v.0)] = c;
            }
            a[(i, n)] = -e.constant;
        }
        let scale = a.amax().max(1.0);
        let tol = 1e-10 * scale;

        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut row = 0;
        for col in 0..n {
            if row == m {
                break;
            }
            let (best, val) = (row..m)
                .map(|r| (r, a[(r, col)].abs()))
                .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if val <= tol {
                continue;
            }
            a.swap_rows(row, best);
            let p = a[(row, col)];
            for k in 0..=n {
                a[(row, k)] /= p;
            }
            for r in 0..m {
                if r != row {
                    let f = a[(r, col)];
                    if f != 0.0 {
                        for k in 0..=n {
                            a[(r, k)] -= f * a[(row, k)];
                        }
                    }
                }
            }
            pivots.push((row, col));
            row += 1;
        }
        for r in row..m {
            if a[(r, n)].abs() > tol {
                return Err(SosError::InfeasibleByPresolve(a[(r, n)].abs()));
            }
        }

        let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
        let mut new_index = vec![usize::MAX; n];
        let mut labels = Vec::new();
        for v in 0..n {
            if !pivot_cols.contains(&v) {
                new_index[v] = labels.len();
                labels.push(self.labels[v].clone());
            }
        }
        let mut exprs: Vec<LinExpr> = (0..n)
            .map(|v| {
                if new_index[v] == usize::MAX {
                    LinExpr::default()
                } else {
                    LinExpr::var(DecisionVar(new_index[v]))
                }
            })
            .collect();
        for &(r, c) in &pivots {
            // v_c = rhs - Σ_{free k} a[r,k] v_k
            let mut e = LinExpr::constant(a[(r, n)]);
            for k in 0..n {
                if new_index[k] != usize::MAX && a[(r, k)] != 0.0 {
                    e.add_term(DecisionVar(new_index[k]), -a[(r, k)]);
                }
            }
            exprs[c] = e.cleaned();
        }
        let program = self.substituted(labels, &exprs);
        Ok(Presolved {
            program,
            back_map: BackMap { exprs },
            eliminated: pivot_cols,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eliminates_determined_variables() {
        let mut p = SosProgram::new(1);
        let a = p.new_var("a");
        let b = p.new_var("b");
        let c = p.new_var("c");
        p.add_equality(LinExpr::var(a)).unwrap();
        let mut e = LinExpr::var(b);
        e.add_term(c, -1.0);
        p.add_equality(e).unwrap();
        let pre = p.presolve().unwrap();
        assert_eq!(pre.program.num_decision_vars(), 1);
        assert_eq!(pre.program.label(DecisionVar(0)), "c");
        assert_eq!(pre.back_map.apply(&[2.5]), vec![0.0, 2.5, 2.5]);
    }

    #[test]
    fn no_equalities_is_identity() {
        let mut p = SosProgram::new(1);
        p.new_var("a");
        p.new_var("b");
        let pre = p.presolve().unwrap();
        assert_eq!(pre.program, p);
        assert_eq!(pre.back_map.apply(&[1.0, 2.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn inconsistent_equalities_reported() {
        let mut p = SosProgram::new(1);
        let a = p.new_var("a");
        p.add_equality(LinExpr::var(a)).unwrap();
        let mut e = LinExpr::var(a);
        e.constant = -1.0;
        p.add_equality(e).unwrap();
        assert!(matches!(p.presolve(), Err(SosError::InfeasibleByPresolve(_))));
    }
}
