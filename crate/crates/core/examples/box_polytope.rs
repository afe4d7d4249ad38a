//! Two simultaneous additive uncertainties: the polytope tolerated by the
//! nominal metric and the largest square over which one metric exists.
//!
//!     cargo run --release --example box_polytope

use contraction_sos::cli::load_system;
use contraction_sos::contraction::{
    find_metric, optimize_box, polytope_inner_approx, MetricOptions, UncertaintyValues, DEFAULT_BISECTION_TOL,
};

fn main() -> Result<(), contraction_sos::Error> {
    let sys = load_system(concat!(env!("CARGO_MANIFEST_DIR"), "/systems/jet_two_param.sys"))?;
    let opts = MetricOptions::with_degree(4);
    let cert = find_metric(&sys, &opts)?
        .certificate()
        .cloned()
        .expect("the nominal jet model admits a degree-4 metric");

    let poly = polytope_inner_approx(&sys, &cert, ("d1", "d2"), &opts, DEFAULT_BISECTION_TOL)?;
    if let UncertaintyValues::Polytope { vertices } = &poly.values {
        println!("polytope vertices (d1, d2):");
        for (a, b) in vertices {
            println!("  ({a:+.4}, {b:+.4})");
        }
    }

    for degree in [4, 6] {
        let res = optimize_box(&sys, &MetricOptions::with_degree(degree), ("d1", "d2"), DEFAULT_BISECTION_TOL)?;
        if let UncertaintyValues::Box { gamma, .. } = res.values {
            println!("degree {degree}: |d1|, |d2| <= {gamma:.4}");
        }
    }
    Ok(())
}
