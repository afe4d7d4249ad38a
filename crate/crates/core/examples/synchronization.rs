//! A copy of the oscillator driven by the original synchronizes with it;
//! without coupling the two limit cycles keep their phase offset.
//!
//!     cargo run --release --example synchronization

use contraction_sos::simulate::{build_unidirectional_coupling, integrate, sync_distance, Oscillator};

fn main() -> Result<(), contraction_sos::Error> {
    let osc = Oscillator {
        alpha: 1.0,
        omega: 1.0,
        k: -1.0,
    };
    for eta in [1.5, 0.0] {
        let sys = build_unidirectional_coupling(osc, eta)?;
        let traj = integrate(&sys.field, &[1.0, 0.0, -1.0, 0.5], 100.0, 1e-3)?;
        let d = sync_distance(&traj)?;
        let at = |t: f64| d[(t / 1e-3).round() as usize];
        let tail_min = d[50_000..].iter().cloned().fold(f64::INFINITY, f64::min);
        println!(
            "eta = {eta}: distance at t=0 {:.3}, t=10 {:.3e}, t=50 {:.3e}; min over [50, 100] {:.3e}",
            at(0.0),
            at(10.0),
            at(50.0),
            tail_min
        );
    }
    Ok(())
}
