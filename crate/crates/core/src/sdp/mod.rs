//! Small dense block-diagonal semidefinite programs.
//!
//! [`SdpProblem`] holds the equality-form problem, [`solve`] runs the
//! interior-point method and [`check_solution`] re-verifies a returned point
//! through an independent code path.

mod check;
mod problem;
mod solver;

pub use check::{check_solution, verify_infeasibility, ResidualReport};
pub use problem::{SdpProblem, Var};
pub use solver::solve;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
}

/// Solver outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SdpStatus {
    Feasible,
    PrimalInfeasible,
    DualInfeasible,
    /// Converged only to the loose tolerance; see [`SdpSolution::inaccurate_hint`].
    Inaccurate,
    Failed,
}

impl SdpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SdpStatus::Feasible => "feasible",
            SdpStatus::PrimalInfeasible => "primal-infeasible",
            SdpStatus::DualInfeasible => "dual-infeasible",
            SdpStatus::Inaccurate => "inaccurate",
            SdpStatus::Failed => "failed",
        }
    }
}

impl std::str::FromStr for SdpStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "feasible" => SdpStatus::Feasible,
            "primal-infeasible" => SdpStatus::PrimalInfeasible,
            "dual-infeasible" => SdpStatus::DualInfeasible,
            "inaccurate" => SdpStatus::Inaccurate,
            "failed" => SdpStatus::Failed,
            _ => return Err(format!("unknown status `{}`", s)),
        })
    }
}

impl std::fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Dual ray proving primal infeasibility, normalized so that `bᵀy = 1`:
/// `Aᵀy + S = 0` on the blocks, `Fᵀy = 0` on the free columns, `S ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityCertificate {
    pub y: Vec<f64>,
    pub s_blocks: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// For `Inaccurate` exits, the status the iterates were leaning towards.
    pub inaccurate_hint: Option<SdpStatus>,
    /// `(τ - κ) / (τ + κ)`: near 1 for solvable problems, near -1 for
    /// strongly infeasible ones.
    pub feasibility_ratio: f64,
    pub x_blocks: Vec<DMatrix<f64>>,
    pub x_free: Vec<f64>,
    pub y: Vec<f64>,
    pub s_blocks: Vec<DMatrix<f64>>,
    pub residuals: Residuals,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub tau: f64,
    pub kappa: f64,
    pub iterations: usize,
    pub solve_time: f64,
    /// Complementarity measure at the start of every iteration.
    pub mu_history: Vec<f64>,
    pub certificate: Option<InfeasibilityCertificate>,
}

impl SdpSolution {
    pub fn is_feasible(&self) -> bool {
        self.status == SdpStatus::Feasible
    }

    /// Leans feasible: either converged or converged loosely towards a solution.
    pub fn leans_feasible(&self) -> bool {
        self.status == SdpStatus::Feasible
            || (self.status == SdpStatus::Inaccurate && self.inaccurate_hint == Some(SdpStatus::Feasible))
    }
}
