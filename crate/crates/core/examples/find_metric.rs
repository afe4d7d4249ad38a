//! Searches for contraction metrics of increasing degree on the jet engine
//! model and writes the first certificate found.
//!
//!     cargo run --release --example find_metric

use contraction_sos::cli::load_system;
use contraction_sos::contraction::{find_metric, MetricOptions, SearchOutcome};

fn main() -> Result<(), contraction_sos::Error> {
    let sys = load_system(concat!(env!("CARGO_MANIFEST_DIR"), "/systems/jet.sys"))?;
    let mut written = false;
    for degree in [0, 2, 4, 6] {
        let outcome = find_metric(&sys, &MetricOptions::with_degree(degree))?;
        let s = outcome.summary();
        let verdict = match &outcome {
            SearchOutcome::Found(_) => "feasible",
            SearchOutcome::Infeasible(_) => "infeasible",
            SearchOutcome::Numerical(_) => "numerical failure",
        };
        println!(
            "degree {degree}: {verdict:<18} status {:<18} ratio {:+.4} iterations {}",
            s.status.to_string(),
            s.feasibility_ratio,
            s.iterations
        );
        if let (Some(cert), false) = (outcome.certificate(), written) {
            let path = std::env::temp_dir().join("jet-metric.cert");
            std::fs::write(&path, cert.to_file().to_text()).expect("writable temp dir");
            println!("  M11(x) = {}", cert.m.get(0, 0).display_with(&cert.var_names));
            println!("  certificate written to {}", path.display());
            written = true;
        }
    }
    Ok(())
}
