//! Contraction metrics for polynomial systems via sum-of-squares programming.
//!
//! A metric `M(x)` certifies contraction of `ẋ = f(x)` when `M ≻ 0` and
//! `JᵀM + MJ + Ṁ ≺ 0`. Both conditions are imposed as SOS-matrix constraints,
//! compiled to a semidefinite program and solved by the interior-point
//! method in [`sdp`]. On top of the basic search sit the rate, uncertainty
//! and semi-contraction workflows in [`contraction`], the samplers in
//! [`verify`] and the RK4 integrator in [`simulate`].
//!
//! ```no_run
//! use contraction_sos::cli::load_system;
//! use contraction_sos::contraction::{find_metric, MetricOptions};
//!
//! let sys = load_system("systems/jet.sys").unwrap();
//! let outcome = find_metric(&sys, &MetricOptions::with_degree(4)).unwrap();
//! assert!(outcome.is_found());
//! ```

pub mod cli;
pub mod contraction;
pub mod poly;
pub mod sdp;
pub mod simulate;
pub mod sos;
pub mod verify;

use thiserror::Error;

/// Any error raised by the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Contraction(#[from] contraction::ContractionError),
    #[error(transparent)]
    Sos(#[from] sos::SosError),
    #[error(transparent)]
    Poly(#[from] poly::PolyError),
    #[error(transparent)]
    Simulate(#[from] simulate::SimError),
    #[error(transparent)]
    Verify(#[from] verify::VerifyError),
    #[error(transparent)]
    SystemFile(#[from] cli::SystemFileError),
    #[error(transparent)]
    CertFile(#[from] sos::CertFileError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
