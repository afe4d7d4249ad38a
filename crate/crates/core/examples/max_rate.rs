//! Largest exponential convergence rate certified by a degree-4 metric.
//!
//!     cargo run --release --example max_rate

use contraction_sos::cli::load_system;
use contraction_sos::contraction::{max_rate, MetricOptions, DEFAULT_BISECTION_TOL};

fn main() -> Result<(), contraction_sos::Error> {
    let sys = load_system(concat!(env!("CARGO_MANIFEST_DIR"), "/systems/jet.sys"))?;
    let res = max_rate(&sys, &MetricOptions::with_degree(4), DEFAULT_BISECTION_TOL)?;
    println!("{:>10} {:>10} {:>20}", "beta", "feasible", "status");
    for p in &res.trace {
        println!("{:>10.6} {:>10} {:>20}", p.value, p.feasible, p.status.to_string());
    }
    println!("beta* = {:.4}{}", res.beta, if res.capped { " (bracket cap reached)" } else { "" });
    Ok(())
}
