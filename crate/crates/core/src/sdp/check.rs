//! Independent re-check of solver output. Works straight from the sparse rows
//! of [`SdpProblem`] and shares no code with the solver.

use nalgebra::DMatrix;

use super::problem::{SdpProblem, Var};
use super::{InfeasibilityCertificate, SdpSolution};

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `‖A x - b‖∞`.
    pub equality: f64,
    /// Smallest eigenvalue of each primal block.
    pub block_min_eig: Vec<f64>,
    /// `|cᵀx - bᵀy|`.
    pub duality_gap: f64,
    /// `|⟨X_k, S_k⟩|` per block.
    pub complementarity: Vec<f64>,
    pub objective: f64,
}

impl ResidualReport {
    pub fn min_eig(&self) -> f64 {
        self.block_min_eig.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn value(v: &Var, x_blocks: &[DMatrix<f64>], x_free: &[f64]) -> f64 {
    match *v {
        Var::Block { block, row, col } => x_blocks[block][(row, col)],
        Var::Free(k) => x_free[k],
    }
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Recomputes residuals of `sol` against `prob`.
pub fn check_solution(prob: &SdpProblem, sol: &SdpSolution) -> ResidualReport {
    let equality = prob
        .rows
        .iter()
        .zip(&prob.rhs)
        .map(|(row, b)| {
            let ax: f64 = row.iter().map(|(v, a)| a * value(v, &sol.x_blocks, &sol.x_free)).sum();
            (ax - b).abs()
        })
        .fold(0.0, f64::max);
    let objective: f64 = prob
        .objective
        .iter()
        .map(|(v, c)| c * value(v, &sol.x_blocks, &sol.x_free))
        .sum();
    let by: f64 = prob.rhs.iter().zip(&sol.y).map(|(b, y)| b * y).sum();
    let complementarity = sol
        .x_blocks
        .iter()
        .zip(&sol.s_blocks)
        .map(|(x, s)| x.dot(s).abs())
        .collect();
    ResidualReport {
        equality,
        block_min_eig: sol.x_blocks.iter().map(min_eig).collect(),
        duality_gap: (objective - by).abs(),
        complementarity,
        objective,
    }
}

/// Checks a primal infeasibility ray: `bᵀy > 0`, `-Aᵀy ⪰ -tol·I` on every
/// block and `|Fᵀy| ≤ tol`, all after scaling to `bᵀy = 1`.
pub fn verify_infeasibility(prob: &SdpProblem, cert: &InfeasibilityCertificate, tol: f64) -> bool {
    if cert.y.len() != prob.rows.len() {
        return false;
    }
    let by: f64 = prob.rhs.iter().zip(&cert.y).map(|(b, y)| b * y).sum();
    if !(by > 0.0) {
        return false;
    }
    let mut aty: Vec<DMatrix<f64>> = prob.block_dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
    let mut fty = vec![0.0; prob.n_free];
    for (row, &yi) in prob.rows.iter().zip(&cert.y) {
        let yi = yi / by;
        for &(v, a) in row {
            match v {
                Var::Block { block, row, col } => {
                    if row == col {
                        aty[block][(row, row)] += a * yi;
                    } else {
                        aty[block][(row, col)] += 0.5 * a * yi;
                        aty[block][(col, row)] += 0.5 * a * yi;
                    }
                }
                Var::Free(k) => fty[k] += a * yi,
            }
        }
    }
    let blocks_ok = aty.iter().all(|m| min_eig(&(-m)) >= -tol);
    let free_ok = fty.iter().all(|v| v.abs() <= tol);
    blocks_ok && free_ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{SdpStatus, Residuals};

    fn two_by_two() -> SdpProblem {
        let mut p = SdpProblem::new(vec![2], 0);
        p.add_row(vec![(SdpProblem::block_var(0, 0, 0), 1.0)], 1.0);
        p.add_row(vec![(SdpProblem::block_var(0, 1, 1), 1.0)], 1.0);
        p.add_row(vec![(SdpProblem::block_var(0, 1, 0), 1.0)], 0.5);
        p
    }

    fn hand_solution(x: DMatrix<f64>) -> SdpSolution {
        SdpSolution {
            status: SdpStatus::Feasible,
            inaccurate_hint: None,
            feasibility_ratio: 1.0,
            x_blocks: vec![x],
            x_free: vec![],
            y: vec![0.0; 3],
            s_blocks: vec![DMatrix::zeros(2, 2)],
            residuals: Residuals::default(),
            primal_objective: 0.0,
            dual_objective: 0.0,
            tau: 1.0,
            kappa: 0.0,
            iterations: 0,
            solve_time: 0.0,
            mu_history: vec![],
            certificate: None,
        }
    }

    #[test]
    fn exact_solution_has_zero_residual() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let r = check_solution(&two_by_two(), &hand_solution(x));
        assert!(r.equality < 1e-12);
        assert!((r.min_eig() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn perturbation_is_detected() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0 + 1e-3, 0.5, 0.5, 1.0]);
        let r = check_solution(&two_by_two(), &hand_solution(x));
        assert!((r.equality - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn bogus_certificate_rejected() {
        let mut p = SdpProblem::new(vec![1], 0);
        p.add_row(vec![(SdpProblem::block_var(0, 0, 0), 1.0)], 1.0);
        let cert = InfeasibilityCertificate {
            y: vec![1.0],
            s_blocks: vec![],
        };
        assert!(!verify_infeasibility(&p, &cert, 1e-9));
    }
}
