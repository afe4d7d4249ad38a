//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.
//!
//!     cargo test --release --test acceptance

mod common;

use std::time::Instant;

use contraction_sos::cli::load_system;
use contraction_sos::contraction::{
    field_at, find_metric, lyapunov_from_metric, max_rate, nominal_uncertainty_range, optimize_box,
    optimize_symmetric_range, rate_matrix, DynSystem, MetricCertificate, MetricOptions, SearchOutcome,
    UncertaintyValues, DEFAULT_BISECTION_TOL,
};
use contraction_sos::poly::{parse_polynomial, PolyMatrix};
use contraction_sos::sdp::{check_solution, solve, verify_infeasibility, SdpStatus, Settings};
use contraction_sos::simulate::{
    build_unidirectional_coupling, integrate, settle_check, simulate, sync_distance, Oscillator, BLOW_UP,
};
use contraction_sos::verify::{lyapunov_check, rate_of_change_check, sample_eigen_bounds, DisplacementPair, Region};

type Outcome = Result<(bool, String), String>;

fn sys(name: &str) -> DynSystem {
    load_system(format!("{}/systems/{}", env!("CARGO_MANIFEST_DIR"), name)).expect("bundled system file")
}

fn metric(s: &DynSystem, degree: u32) -> Result<MetricCertificate, String> {
    let out = find_metric(s, &MetricOptions::with_degree(degree)).map_err(|e| e.to_string())?;
    out.certificate()
        .cloned()
        .ok_or_else(|| format!("no degree-{degree} metric: {}", out.summary().status))
}

fn err<E: ToString>(e: E) -> String {
    e.to_string()
}

fn symmetric_gamma(file: &str, degree: u32) -> Result<f64, String> {
    let res = optimize_symmetric_range(&sys(file), &MetricOptions::with_degree(degree), "delta", DEFAULT_BISECTION_TOL)
        .map_err(err)?;
    match res.values {
        UncertaintyValues::Symmetric { gamma, .. } => Ok(gamma),
        other => Err(format!("unexpected result {other:?}")),
    }
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let s = sys("jet.sys");
    let mut ok = true;
    let mut parts = Vec::new();
    for (degree, want_found) in [(0, false), (2, false), (4, true), (6, true)] {
        let out = find_metric(&s, &MetricOptions::with_degree(degree)).map_err(err)?;
        let good = if want_found {
            out.is_found()
        } else {
            matches!(out, SearchOutcome::Infeasible(_))
        };
        ok &= good;
        parts.push(format!("deg {degree} {}", out.summary().status));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 60.0;
    Ok((ok, format!("{} in {secs:.1} s (limit 60 s)", parts.join(", "))))
}

fn criterion_2() -> Outcome {
    let res = max_rate(&sys("jet.sys"), &MetricOptions::with_degree(4), DEFAULT_BISECTION_TOL).map_err(err)?;
    Ok((
        in_range(res.beta, 0.80, 0.84),
        format!("beta* = {:.4}, want [0.80, 0.84]", res.beta),
    ))
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let osc = |k: f64| {
        Oscillator {
            alpha: 1.0,
            omega: 1.0,
            k,
        }
        .system()
    };
    for k in [0.001, 0.01, 0.1, 1.0, 10.0, -10.0, -1.0, -0.1, -0.01, -0.001] {
        let out = find_metric(&osc(k), &MetricOptions::with_degree(4)).map_err(err)?;
        ok &= out.is_found() == (k > 0.0);
        parts.push(format!("k={k} {}", out.summary().status));
    }
    let out = find_metric(&osc(1.0), &MetricOptions::with_degree(0)).map_err(err)?;
    ok &= matches!(out, SearchOutcome::Infeasible(_));
    parts.push(format!("deg 0 at k=1 {}", out.summary().status));
    Ok((ok, parts.join(", ")))
}

fn criterion_4() -> Outcome {
    let g4 = symmetric_gamma("jet_additive.sys", 4)?;
    let g6 = symmetric_gamma("jet_additive.sys", 6)?;
    let g8 = symmetric_gamma("jet_additive.sys", 8)?;
    Ok((
        in_range(g4, 0.89, 0.99) && in_range(g6, 0.97, 1.08) && g8 >= g6 - 1e-2,
        format!("gamma deg4 = {g4:.4} [0.89, 0.99], deg6 = {g6:.4} [0.97, 1.08], deg8 = {g8:.4} (>= deg6 - 0.01)"),
    ))
}

fn criterion_5() -> Outcome {
    let h4 = symmetric_gamma("jet_mult.sys", 4)?;
    let h6 = symmetric_gamma("jet_mult.sys", 6)?;
    Ok((
        in_range(h4, 0.22, 0.28) && in_range(h6, 0.32, 0.39),
        format!("half-width deg4 = {h4:.4} [0.22, 0.28], deg6 = {h6:.4} [0.32, 0.39]"),
    ))
}

fn criterion_6() -> Outcome {
    let s = sys("jet_two_param.sys");
    let gamma = |degree| -> Result<f64, String> {
        let res = optimize_box(&s, &MetricOptions::with_degree(degree), ("d1", "d2"), DEFAULT_BISECTION_TOL)
            .map_err(err)?;
        match res.values {
            UncertaintyValues::Box { gamma, .. } => Ok(gamma),
            other => Err(format!("unexpected result {other:?}")),
        }
    };
    let (g4, g6) = (gamma(4)?, gamma(6)?);
    Ok((
        in_range(g4, 0.67, 0.75) && g6 >= g4 - 1e-2,
        format!("box gamma deg4 = {g4:.4} [0.67, 0.75], deg6 = {g6:.4} (>= deg4 - 0.01)"),
    ))
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (file, additive) in [("jet_additive.sys", true), ("jet_mult.sys", false)] {
        let s = sys(file);
        let opts = MetricOptions::with_degree(4);
        let cert = metric(&s, 4)?;
        let res = nominal_uncertainty_range(&s, &cert, "delta", &opts, DEFAULT_BISECTION_TOL).map_err(err)?;
        let UncertaintyValues::Range { min, max } = res.values else {
            return Err(format!("unexpected result {:?}", res.values));
        };
        let nominal = s.nominal_values()[s.param_index("delta").map_err(err)?];
        let mut good = min < nominal && nominal < max;
        if additive {
            good &= min > -1.08;
        }
        let mut sampled = 0;
        for t in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
            let d = min + (max - min) * t;
            let field = field_at(&s, &[("delta", d)]).map_err(err)?;
            let r = rate_matrix(&cert.m, &field)
                .and_then(|r| r.checked_add(&cert.m.scale(cert.beta)))
                .map_err(err)?;
            let at = MetricCertificate { r, ..cert.clone() };
            let b = sample_eigen_bounds(&at, &Region::default_for(s.n())).map_err(err)?;
            good &= b.passes(&at);
            sampled += 1;
        }
        ok &= good;
        parts.push(format!(
            "{} ({min:.4}, {max:.4}) around {nominal}, {sampled} samples {}",
            if additive { "additive" } else { "multiplicative" },
            if good { "ok" } else { "bad" }
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn criterion_8() -> Outcome {
    let s = sys("jet_additive.sys");
    let run = |d: f64| -> Result<_, String> {
        let traj = simulate(&s, &[("delta".into(), d)], &[0.5, 0.5], 100.0, 1e-3).map_err(err)?;
        let settle = settle_check(&traj, 20.0, 1e-3).map_err(err)?;
        let peak = traj.states.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        Ok((traj.blew_up, settle, peak))
    };
    let (_, s05, _) = run(-0.5)?;
    let (_, s101, _) = run(-1.01)?;
    let (blew, s11, peak) = run(-1.1)?;
    let ok = s05.settled && !s11.settled && !blew && peak.is_finite() && peak < BLOW_UP && s11.drift > 1e-3;
    Ok((
        ok,
        format!(
            "delta=-0.5 settled={} drift {:.2e}; delta=-1.1 settled={} drift {:.3} peak {:.3}; delta=-1.01 settled={} drift {:.3} (not asserted)",
            s05.settled, s05.drift, s11.settled, s11.drift, peak, s101.settled, s101.drift
        ),
    ))
}

fn criterion_9() -> Outcome {
    let s = sys("coupled_vdp_driven.sys");
    let strict = MetricOptions {
        structure_vars: Some(vec![0]),
        ..MetricOptions::with_degree(4)
    };
    let out = find_metric(&s, &strict).map_err(err)?;
    let strict_found = out.is_found();
    let semi = MetricOptions {
        semi: true,
        zero_entries: vec![(0, 1), (1, 1)],
        ..strict
    };
    let c = metric_with(&s, &semi)?;
    let b = sample_eigen_bounds(&c, &Region::default_for(2)).map_err(err)?;
    Ok((
        !strict_found && b.min_m > 0.0 && b.max_r <= 1e-7,
        format!(
            "strict {}; semi found, min eig M = {:.4e} (> 0), max eig R = {:.2e} (<= 1e-7)",
            out.summary().status,
            b.min_m,
            b.max_r
        ),
    ))
}

fn metric_with(s: &DynSystem, opts: &MetricOptions) -> Result<MetricCertificate, String> {
    let out = find_metric(s, opts).map_err(err)?;
    out.certificate()
        .cloned()
        .ok_or_else(|| format!("no metric: {}", out.summary().status))
}

fn criterion_10() -> Outcome {
    let names = vec!["y1".to_string(), "y2".to_string()];
    let q = |s: &str| parse_polynomial(s, &names).map_err(err);
    let mut worst: f64 = 0.0;
    for (alpha, omega, ke) in [(1.0, 1.0, 0.5), (2.0, 3.0, 1.0)] {
        let g = format!("{alpha}*(y1^2 + {ke})");
        let m = PolyMatrix::from_rows(vec![
            vec![q(&format!("{} + ({g})^2", omega * omega))?, q(&g)?],
            vec![q(&g)?, q("1")?],
        ])
        .map_err(err)?;
        let osc = Oscillator {
            alpha,
            omega,
            k: ke - 1.0,
        }
        .driven(1.0);
        let r = rate_matrix(&m, &osc.nominal_field()).map_err(err)?;
        let c = 2.0 * alpha * omega * omega;
        let expect = PolyMatrix::from_rows(vec![
            vec![q(&format!("-{c}*y1^2 - {}", c * ke))?, q("0")?],
            vec![q("0")?, q("0")?],
        ])
        .map_err(err)?;
        worst = worst.max(r.max_coeff_diff(&expect));
    }
    Ok((worst <= 1e-12, format!("max coefficient difference {worst:.1e} (<= 1e-12)")))
}

fn criterion_11() -> Outcome {
    let osc = Oscillator {
        alpha: 1.0,
        omega: 1.0,
        k: -1.0,
    };
    let x0 = [1.0, 0.0, -1.0, 0.5];
    let dt = 1e-3;
    let run = |eta: f64| -> Result<Vec<f64>, String> {
        let s = build_unidirectional_coupling(osc, eta).map_err(err)?;
        let traj = integrate(&s.field, &x0, 100.0, dt).map_err(err)?;
        sync_distance(&traj).map_err(err)
    };
    let coupled = run(1.5)?;
    let at50 = coupled[(50.0 / dt).round() as usize];
    let free = run(0.0)?;
    let tail = free[(50.0 / dt).round() as usize..]
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    Ok((
        at50 <= 1e-3 && tail >= 0.1,
        format!("eta=1.5 distance at t=50 {at50:.2e} (<= 1e-3); eta=0 min over [50, 100] {tail:.3} (>= 0.1)"),
    ))
}

fn criterion_12() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;

    let jet = sys("jet.sys");
    let cert = metric(&jet, 4)?;
    let recon = cert.grams.iter().map(|g| g.reconstruction_error()).fold(0.0, f64::max);
    ok &= recon <= 1e-7;
    parts.push(format!("reconstruction {recon:.1e}"));

    let mut sdp_ok = 0;
    let set = common::regression_set();
    for inst in &set {
        let sol = solve(&inst.prob, &Settings::default()).map_err(err)?;
        let good = if inst.feasible {
            let r = check_solution(&inst.prob, &sol);
            let scale = 1.0 + r.objective.abs();
            sol.status == SdpStatus::Feasible && r.complementarity.iter().all(|c| *c <= 1e-6 * scale)
        } else {
            sol.status == SdpStatus::PrimalInfeasible
                && sol
                    .certificate
                    .as_ref()
                    .is_some_and(|c| verify_infeasibility(&inst.prob, c, 1e-6))
        };
        sdp_ok += good as usize;
    }
    ok &= sdp_ok == set.len();
    parts.push(format!("sdp set {sdp_ok}/{}", set.len()));

    let decay = vec![parse_polynomial("-x", &["x".to_string()]).map_err(err)?];
    let errs = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&dt| integrate(&decay, &[1.0], 1.0, dt).map(|t| (t.last()[0] - (-1f64).exp()).abs()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    ok &= ratios.iter().all(|&r| r >= 8.0);
    parts.push(format!("rk4 ratios {:.1}, {:.1}", ratios[0], ratios[1]));

    let pair = DisplacementPair {
        base: vec![0.5, 0.5],
        displacement: vec![1e-4, -1e-4],
    };
    let rc = rate_of_change_check(&jet, &cert, &pair, 5.0, 1e-3).map_err(err)?;
    ok &= rc.max_rel_error <= 1e-2;
    parts.push(format!("rate of change {:.1e}", rc.max_rel_error));

    let scaled = cert.scaled(2.0);
    let cone = scaled.grams.iter().all(|g| g.is_valid())
        && sample_eigen_bounds(&scaled, &Region::default_for(2))
            .map_err(err)?
            .passes(&scaled);
    ok &= cone;
    parts.push(format!("cone scaling {}", if cone { "ok" } else { "bad" }));

    let rate = max_rate(&jet, &MetricOptions::with_degree(4), DEFAULT_BISECTION_TOL).map_err(err)?;
    lyapunov_from_metric(&jet, &rate.certificate).map_err(err)?;
    let lyap = lyapunov_check(&jet, &rate.certificate, &Region::cube(2, -1.0, 1.0)).map_err(err)?;
    ok &= lyap.max_decrease <= 1e-9;
    parts.push(format!(
        "lyapunov max(Vdot + {:.4} V) {:.1e}",
        rate.certificate.beta, lyap.max_decrease
    ));

    Ok((ok, parts.join(", ")))
}

fn main() {
    let criteria: [fn() -> Outcome; 12] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
        criterion_12,
    ];
    // the timed criterion runs alone, the rest side by side
    let first = criteria[0]();
    let rest: Vec<Outcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = criteria[1..].iter().map(|f| scope.spawn(f)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err("panicked".into())))
            .collect()
    });
    let mut failed = 0;
    for (i, outcome) in std::iter::once(first).chain(rest).enumerate() {
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += !pass as usize;
        println!("criterion {}: {}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} of 12 criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
