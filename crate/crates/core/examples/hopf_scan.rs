//! Phase portraits of the perturbed jet engine on both sides of the Hopf
//! bifurcation. Writes one SVG per perturbation to the temp directory.
//!
//!     cargo run --release --example hopf_scan

use contraction_sos::cli::load_system;
use contraction_sos::simulate::{settle_check, simulate, trajectory_svg, DEFAULT_DT, DEFAULT_T_END};
use rayon::prelude::*;

fn main() -> Result<(), contraction_sos::Error> {
    let sys = load_system(concat!(env!("CARGO_MANIFEST_DIR"), "/systems/jet_additive.sys"))?;
    let deltas = [-0.5, -1.01, -1.1];
    let runs = deltas
        .par_iter()
        .map(|&d| simulate(&sys, &[("delta".into(), d)], &[0.5, 0.5], DEFAULT_T_END, DEFAULT_DT).map(|t| (d, t)))
        .collect::<Result<Vec<_>, _>>()?;
    for (d, traj) in &runs {
        let s = settle_check(traj, 20.0, 1e-3)?;
        let path = std::env::temp_dir().join(format!("hopf{d}.svg"));
        let meta = vec![("delta".to_string(), d.to_string())];
        std::fs::write(&path, trajectory_svg(traj, 0, 1, ("x1", "x2"), &meta)).expect("writable temp dir");
        println!(
            "delta = {d:+.2}: settled = {:<5} drift over last 20 s = {:.3e}  ({})",
            s.settled,
            s.drift,
            path.display()
        );
    }
    Ok(())
}
