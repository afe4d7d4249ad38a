//! Independent checks of a jet-engine certificate: eigenvalue sampling, the
//! Lyapunov function `V = f'Mf`, and the rate-of-change identity replayed
//! along a simulated pair of nearby trajectories.
//!
//!     cargo run --release --example verify_certificate

use contraction_sos::cli::load_system;
use contraction_sos::contraction::{find_metric, MetricOptions};
use contraction_sos::verify::{
    lyapunov_check, rate_of_change_check, sample_eigen_bounds, symmetric_part_max_eig, DisplacementPair, Region,
};

fn main() -> Result<(), contraction_sos::Error> {
    let sys = load_system(concat!(env!("CARGO_MANIFEST_DIR"), "/systems/jet.sys"))?;
    let cert = find_metric(&sys, &MetricOptions::with_degree(4))?
        .certificate()
        .cloned()
        .expect("degree-4 metric exists");
    let region = Region::default_for(2);

    let (lam, at) = symmetric_part_max_eig(&sys, &region)?;
    println!("identity metric: max eig of sym(J) = {lam:.4} at {at:?}");

    let b = sample_eigen_bounds(&cert, &region)?;
    println!(
        "{} points: min eig M = {:.4e}, max eig R = {:.4e}, accepted = {}",
        b.points,
        b.min_m,
        b.max_r,
        b.passes(&cert)
    );

    let l = lyapunov_check(&sys, &cert, &region)?;
    println!("V = f'Mf: min {:.4e} (away from equilibria), max dV/dt + beta V = {:.4e}", l.min_v, l.max_decrease);

    let pair = DisplacementPair {
        base: vec![0.5, 0.5],
        displacement: vec![1e-4, -1e-4],
    };
    let rc = rate_of_change_check(&sys, &cert, &pair, 5.0, 1e-3)?;
    println!(
        "rate identity over {} samples: max relative error {:.2e}, decreasing = {}",
        rc.compared, rc.max_rel_error, rc.decreasing
    );
    Ok(())
}
