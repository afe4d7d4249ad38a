//! Integrator accuracy and the oscillator scenarios.

use contraction_sos::cli::load_system;
use contraction_sos::poly::parse_polynomial;
use contraction_sos::simulate::{
    build_unidirectional_coupling, integrate, settle_check, simulate, sync_distance, trajectory_csv, trajectory_svg,
    Oscillator, SimError,
};

fn sys_path(name: &str) -> String {
    format!("{}/systems/{}", env!("CARGO_MANIFEST_DIR"), name)
}

fn harmonic() -> Vec<contraction_sos::poly::Polynomial> {
    let n = vec!["x1".to_string(), "x2".to_string()];
    vec![parse_polynomial("x2", &n).unwrap(), parse_polynomial("-x1", &n).unwrap()]
}

#[test]
fn harmonic_period() {
    let t = 2.0 * std::f64::consts::PI;
    let dt = t / 6283.0;
    let tr = integrate(&harmonic(), &[1.0, 0.0], t, dt).unwrap();
    assert!((tr.last()[0] - 1.0).abs() < 1e-4);
    assert!(tr.last()[1].abs() < 1e-4);
}

#[test]
fn rk4_is_fourth_order() {
    let err = |dt: f64| {
        let tr = integrate(&harmonic(), &[1.0, 0.0], 2.0, dt).unwrap();
        let x = tr.last();
        ((x[0] - 2f64.cos()).powi(2) + (x[1] + 2f64.sin()).powi(2)).sqrt()
    };
    let (e1, e2) = (err(0.04), err(0.02));
    let order = (e1 / e2).log2();
    assert!((order - 4.0).abs() < 0.3, "observed order {order}");
}

#[test]
fn rk4_error_drops_sixteenfold_on_decay() {
    let f = vec![parse_polynomial("-x", &["x".to_string()]).unwrap()];
    let err = |dt: f64| (integrate(&f, &[1.0], 1.0, dt).unwrap().last()[0] - (-1f64).exp()).abs();
    let e: Vec<f64> = [1e-2, 5e-3, 2.5e-3].iter().map(|&dt| err(dt)).collect();
    assert!(e[0] / e[1] >= 8.0 && e[1] / e[2] >= 8.0, "errors {e:?}");
}

#[test]
fn harmonic_time_reversal() {
    let fwd = integrate(&harmonic(), &[1.0, 0.0], 10.0, 1e-3).unwrap();
    let back = integrate(&harmonic(), fwd.last(), -10.0, -1e-3).unwrap();
    let d = (back.last()[0] - 1.0).abs().max(back.last()[1].abs());
    assert!(d <= 1e-6, "reversal error {d}");
}

#[test]
fn identical_starts_stay_synchronized() {
    let osc = Oscillator {
        alpha: 1.0,
        omega: 1.0,
        k: -1.0,
    };
    let sys = build_unidirectional_coupling(osc, 1.5).unwrap();
    let tr = integrate(&sys.field, &[1.0, 0.5, 1.0, 0.5], 20.0, 1e-3).unwrap();
    let worst = sync_distance(&tr).unwrap().into_iter().fold(0.0, f64::max);
    assert!(worst <= 1e-12, "distance {worst}");
}

#[test]
fn time_reversal_returns_to_start() {
    let sys = load_system(sys_path("jet.sys")).unwrap();
    let fwd = integrate(&sys.field, &[0.5, 0.5], 2.0, 1e-3).unwrap();
    let back = integrate(&sys.field, fwd.last(), -2.0, -1e-3).unwrap();
    let d: f64 = back.last().iter().zip([0.5, 0.5]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(d < 1e-9, "reversal error {d}");
}

#[test]
fn rejects_bad_steps() {
    assert!(matches!(integrate(&harmonic(), &[1.0, 0.0], 1.0, 0.0), Err(SimError::BadStep { .. })));
    assert!(matches!(integrate(&harmonic(), &[1.0, 0.0], 1.0, -0.1), Err(SimError::BadStep { .. })));
    assert!(matches!(integrate(&harmonic(), &[1.0], 1.0, 0.1), Err(SimError::Dimension { .. })));
}

#[test]
fn van_der_pol_limit_cycle_amplitude() {
    let sys = load_system(sys_path("vdp.sys")).unwrap();
    let osc = contraction_sos::cli::load_system_with(sys_path("vdp.sys"), &[("k".into(), -0.5)]).unwrap();
    assert_ne!(sys, osc);
    let tr = integrate(&osc.field, &[0.1, 0.0], 100.0, 1e-3).unwrap();
    let amp = tr.states[50_000..].iter().map(|s| s[0].abs()).fold(0.0, f64::max);
    assert!((0.5..=4.0).contains(&amp), "amplitude {amp}");
    // the same oscillator built directly
    let direct = Oscillator {
        alpha: 1.0,
        omega: 1.0,
        k: -0.5,
    }
    .system();
    for (a, b) in direct.field.iter().zip(&osc.field) {
        assert!(a.max_coeff_diff(b) < 1e-15);
    }
}

#[test]
fn decoupled_oscillators_keep_their_distance() {
    let osc = Oscillator {
        alpha: 1.0,
        omega: 1.0,
        k: -1.0,
    };
    let sys = build_unidirectional_coupling(osc, 0.0).unwrap();
    let tr = integrate(&sys.field, &[1.0, 0.0, -1.0, 0.5], 100.0, 1e-3).unwrap();
    let d = sync_distance(&tr).unwrap();
    assert!(d[50_000..].iter().all(|&v| v >= 0.1));
}

#[test]
fn coupling_matches_definition_file() {
    let file = load_system(sys_path("coupled_vdp.sys")).unwrap();
    let built = build_unidirectional_coupling(
        Oscillator {
            alpha: 1.0,
            omega: 1.0,
            k: -1.0,
        },
        1.5,
    )
    .unwrap();
    for (a, b) in file.field.iter().zip(&built.field) {
        assert!(a.max_coeff_diff(b) < 1e-15);
    }
}

#[test]
fn coupling_rejects_nonpositive_constants() {
    let bad = Oscillator {
        alpha: 0.0,
        omega: 1.0,
        k: 1.0,
    };
    assert!(build_unidirectional_coupling(bad, 1.0).is_err());
}

#[test]
fn settle_window_longer_than_run_is_an_error() {
    let tr = integrate(&harmonic(), &[1.0, 0.0], 1.0, 0.01).unwrap();
    assert!(matches!(settle_check(&tr, 2.0, 1e-3), Err(SimError::Window { .. })));
}

#[test]
fn csv_and_svg_are_versioned_and_deterministic() {
    let sys = load_system(sys_path("jet_additive.sys")).unwrap();
    let run = || simulate(&sys, &[("delta".into(), -0.5)], &[0.5, 0.5], 5.0, 1e-3).unwrap();
    let (a, b) = (run(), run());
    let meta = vec![("seed".to_string(), "1".to_string())];
    let csv = trajectory_csv(&a, &meta, 10);
    assert_eq!(csv, trajectory_csv(&b, &meta, 10));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# format = 1"));
    assert_eq!(lines.next(), Some("# seed = 1"));
    assert_eq!(lines.next(), Some("t,x1,x2"));
    // every 10th of 5001 samples plus the last
    assert_eq!(lines.count(), 501);
    let svg = trajectory_svg(&a, 0, 1, ("x1", "x2"), &meta);
    assert!(svg.starts_with("<!-- format = 1 -->\n<!-- seed = 1 -->\n<svg"));
    assert!(svg.contains("<polyline"));
}
