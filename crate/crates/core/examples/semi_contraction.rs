//! Input-independent metric for the driven oscillator. A strict search with
//! the metric restricted to `y1` finds nothing; pinning `R12 = R22 = 0` and
//! asking only for `R <= 0` recovers a multiple of the analytic metric.
//!
//!     cargo run --release --example semi_contraction

use contraction_sos::cli::load_system;
use contraction_sos::contraction::{find_metric, MetricOptions};
use contraction_sos::verify::{sample_eigen_bounds, Region};

fn main() -> Result<(), contraction_sos::Error> {
    let sys = load_system(concat!(env!("CARGO_MANIFEST_DIR"), "/systems/coupled_vdp_driven.sys"))?;
    let strict = MetricOptions {
        structure_vars: Some(vec![0]),
        ..MetricOptions::with_degree(4)
    };
    let outcome = find_metric(&sys, &strict)?;
    println!("strict, M = M(y1):        {}", outcome.summary().status);

    let semi = MetricOptions {
        semi: true,
        zero_entries: vec![(0, 1), (1, 1)],
        ..strict
    };
    let outcome = find_metric(&sys, &semi)?;
    println!("semi with R12 = R22 = 0:  {}", outcome.summary().status);
    if let Some(cert) = outcome.certificate() {
        let names = &cert.var_names;
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            println!("  M{}{} = {}", i + 1, j + 1, cert.m.get(i, j).display_with(names));
        }
        println!("  R11 = {}", cert.r.get(0, 0).display_with(names));
        let b = sample_eigen_bounds(cert, &Region::default_for(2))?;
        println!("  on [-2, 2]^2: min eig M = {:.4e}, max eig R = {:.4e}", b.min_m, b.max_r);
    }
    Ok(())
}
