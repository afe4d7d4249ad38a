//! Uncertainty ranges for the jet engine with one uncertain parameter:
//! the range a fixed nominal metric tolerates, and the widest symmetric
//! interval over which some metric of a given degree exists.
//!
//!     cargo run --release --example uncertainty_range

use contraction_sos::cli::load_system;
use contraction_sos::contraction::{
    find_metric, nominal_uncertainty_range, optimize_symmetric_range, MetricOptions, UncertaintyValues,
    CLASSICAL_ADDITIVE_BOUND, DEFAULT_BISECTION_TOL,
};

fn show(values: &UncertaintyValues) -> String {
    match values {
        UncertaintyValues::Range { min, max } => format!("({min:.4}, {max:.4})"),
        UncertaintyValues::Symmetric { nominal, gamma } => format!("{nominal} +/- {gamma:.4}"),
        other => format!("{other:?}"),
    }
}

fn main() -> Result<(), contraction_sos::Error> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/systems");
    let tol = DEFAULT_BISECTION_TOL;
    for (file, label) in [("jet_additive.sys", "additive"), ("jet_mult.sys", "multiplicative")] {
        let sys = load_system(format!("{dir}/{file}"))?;
        println!("{label} uncertainty");
        for degree in [4, 6] {
            let opts = MetricOptions::with_degree(degree);
            let Some(cert) = find_metric(&sys, &opts)?.certificate().cloned() else {
                println!("  degree {degree}: no nominal metric");
                continue;
            };
            let fixed = nominal_uncertainty_range(&sys, &cert, "delta", &opts, tol)?;
            let joint = optimize_symmetric_range(&sys, &opts, "delta", tol)?;
            println!(
                "  degree {degree}: nominal metric {}   optimized {}   ({} + {} probes)",
                show(&fixed.values),
                show(&joint.values),
                fixed.trace.len(),
                joint.trace.len()
            );
        }
    }
    println!("classical perturbation bound for comparison: |delta| <= {CLASSICAL_ADDITIVE_BOUND}");
    Ok(())
}
