//! Certificates: self-consistency, file round trip, cone scaling, the
//! analytic oscillator metric and the independent verifiers.

use contraction_sos::cli::load_system;
use contraction_sos::contraction::{
    find_metric, lyapunov_from_metric, max_rate, optimize_symmetric_range, rate_matrix, DynSystem, MetricCertificate,
    MetricOptions, SearchOutcome,
};
use contraction_sos::poly::{parse_polynomial, PolyMatrix};
use contraction_sos::sdp::SdpStatus;
use contraction_sos::simulate::Oscillator;
use contraction_sos::sos::CertificateFile;
use contraction_sos::verify::{
    lyapunov_check, rate_of_change_check, sample_eigen_bounds, symmetric_part_max_eig, DisplacementPair, Region,
};

fn sys(name: &str) -> DynSystem {
    load_system(format!("{}/systems/{}", env!("CARGO_MANIFEST_DIR"), name)).unwrap()
}

fn jet_cert() -> MetricCertificate {
    find_metric(&sys("jet.sys"), &MetricOptions::with_degree(4))
        .unwrap()
        .certificate()
        .cloned()
        .expect("degree-4 jet metric")
}

#[test]
fn stored_rate_matrix_is_reproducible() {
    let s = sys("jet.sys");
    let c = jet_cert();
    let scale = 1.0 + c.m.entries().iter().map(|p| p.max_abs_coeff()).fold(0.0, f64::max);
    assert!(c.rate_mismatch(&s.field).unwrap() <= 1e-7 * scale);
    for g in &c.grams {
        assert!(g.is_valid(), "gram {} invalid", g.label);
    }
}

#[test]
fn certificate_file_round_trip() {
    let c = jet_cert();
    let text = c.to_file().to_text();
    assert!(text.starts_with("format = 1\n"));
    let back = MetricCertificate::from_file(&CertificateFile::parse(&text).unwrap()).unwrap();
    assert_eq!(back.m.max_coeff_diff(&c.m), 0.0);
    assert_eq!(back.r.max_coeff_diff(&c.r), 0.0);
    assert_eq!(back.grams.len(), c.grams.len());
    for (a, b) in back.grams.iter().zip(&c.grams) {
        assert_eq!(a.gram, b.gram);
        assert_eq!(a.basis, b.basis);
    }
    assert_eq!((back.eps, back.beta, back.degree, back.semi), (c.eps, c.beta, c.degree, c.semi));
    assert_eq!(back.to_file().to_text(), text);
}

#[test]
fn eigen_sampling_accepts_strict_certificate() {
    let c = jet_cert();
    let b = sample_eigen_bounds(&c, &Region::default_for(2)).unwrap();
    assert!(b.min_m >= c.eps / 2.0);
    assert!(b.max_r <= -c.eps / 2.0);
    assert!(b.passes(&c));
}

#[test]
fn cone_scaling_preserves_every_check() {
    let s = sys("jet.sys");
    let c = jet_cert().scaled(2.0);
    assert_eq!(c.eps, 2.0 * 1e-4);
    for g in &c.grams {
        assert!(g.is_valid());
    }
    let scale = 1.0 + c.m.entries().iter().map(|p| p.max_abs_coeff()).fold(0.0, f64::max);
    assert!(c.rate_mismatch(&s.field).unwrap() <= 1e-7 * scale);
    assert!(sample_eigen_bounds(&c, &Region::default_for(2)).unwrap().passes(&c));
    assert!(lyapunov_check(&s, &c, &Region::default_for(2)).unwrap().max_decrease <= 1e-9);
}

#[test]
fn lyapunov_function_decreases() {
    let s = sys("jet.sys");
    let c = jet_cert();
    let v = lyapunov_from_metric(&s, &c).unwrap();
    assert_eq!(v.evaluate(&[0.0, 0.0]).unwrap(), 0.0);
    let rep = lyapunov_check(&s, &c, &Region::default_for(2)).unwrap();
    assert!(rep.min_v > 0.0);
    assert!(rep.max_decrease <= 1e-9, "max decrease {}", rep.max_decrease);
}

#[test]
fn rate_identity_along_trajectories() {
    let s = sys("jet.sys");
    let c = jet_cert();
    for (base, disp) in [([0.5, 0.5], [1e-4, -1e-4]), ([-1.0, 1.5], [0.0, 1e-4])] {
        let pair = DisplacementPair {
            base: base.to_vec(),
            displacement: disp.to_vec(),
        };
        let rc = rate_of_change_check(&s, &c, &pair, 5.0, 1e-3).unwrap();
        assert!(rc.max_rel_error <= 1e-2, "relative error {}", rc.max_rel_error);
        assert!(rc.decreasing);
    }
}

#[test]
fn identity_metric_fails_for_jet() {
    let (lam, _) = symmetric_part_max_eig(&sys("jet.sys"), &Region::default_for(2)).unwrap();
    assert!(lam > 0.0);
}

fn analytic_metric(alpha: f64, omega: f64, ke: f64) -> (PolyMatrix<f64>, DynSystem) {
    let names = vec!["y1".to_string(), "y2".to_string()];
    let g = format!("{alpha}*(y1^2 + {ke})");
    let q = |s: &str| parse_polynomial(s, &names).unwrap();
    let m = PolyMatrix::from_rows(vec![
        vec![q(&format!("{} + ({g})^2", omega * omega)), q(&g)],
        vec![q(&g), q("1")],
    ])
    .unwrap();
    let osc = Oscillator { alpha, omega, k: ke - 1.0 }.driven(1.0);
    (m, osc)
}

#[test]
fn analytic_oscillator_metric_reproduces_its_rate_matrix() {
    let names = vec!["y1".to_string(), "y2".to_string()];
    for (alpha, omega, ke) in [(1.0, 1.0, 0.5), (2.0, 3.0, 1.0)] {
        let (m, osc) = analytic_metric(alpha, omega, ke);
        let r = rate_matrix(&m, &osc.nominal_field()).unwrap();
        let c = 2.0 * alpha * omega * omega;
        let expect = PolyMatrix::from_rows(vec![
            vec![parse_polynomial(&format!("-{c}*y1^2 - {}", c * ke), &names).unwrap(), parse_polynomial("0", &names).unwrap()],
            vec![parse_polynomial("0", &names).unwrap(), parse_polynomial("0", &names).unwrap()],
        ])
        .unwrap();
        assert!(r.max_coeff_diff(&expect) <= 1e-12, "mismatch {}", r.max_coeff_diff(&expect));
    }
}

#[test]
fn semi_search_recovers_a_multiple_of_the_analytic_metric() {
    let s = sys("coupled_vdp_driven.sys");
    let opts = MetricOptions {
        semi: true,
        structure_vars: Some(vec![0]),
        zero_entries: vec![(0, 1), (1, 1)],
        ..MetricOptions::with_degree(4)
    };
    let c = find_metric(&s, &opts).unwrap().certificate().cloned().expect("semi metric");
    let (m, _) = analytic_metric(1.0, 1.0, 0.5);
    let scale = c.m.get(1, 1).evaluate(&[0.0, 0.0]).unwrap();
    assert!(scale > 0.0);
    assert!(c.m.max_coeff_diff(&m.scale(scale)) <= 1e-6);
    let b = sample_eigen_bounds(&c, &Region::default_for(2)).unwrap();
    assert!(b.min_m > 0.0 && b.max_r <= 1e-7);
}

#[test]
fn constant_metric_cannot_certify_van_der_pol() {
    let vdp = Oscillator {
        alpha: 1.0,
        omega: 1.0,
        k: 1.0,
    }
    .system();
    let out = find_metric(&vdp, &MetricOptions::with_degree(0)).unwrap();
    assert!(matches!(out, SearchOutcome::Infeasible(_)), "status {}", out.summary().status);
}

#[test]
fn rate_bisection_trace_is_consistent() {
    let res = max_rate(&sys("jet.sys"), &MetricOptions::with_degree(4), 1e-2).unwrap();
    let best_infeasible = res
        .trace
        .iter()
        .filter(|p| !p.feasible)
        .map(|p| p.value)
        .fold(f64::INFINITY, f64::min);
    assert!(res.beta < best_infeasible);
    assert!(best_infeasible - res.beta <= 1e-2 + 1e-12);
    for p in res.trace.iter().filter(|p| !p.feasible) {
        assert!(p.status != SdpStatus::Feasible);
    }
    // the returned certificate is for the reported rate and verifies
    assert!((res.certificate.beta - res.beta).abs() < 1e-12);
    assert!(sample_eigen_bounds(&res.certificate, &Region::default_for(2))
        .unwrap()
        .passes(&res.certificate));
}

#[test]
fn symmetric_range_trace_is_monotone() {
    let res = optimize_symmetric_range(&sys("jet_additive.sys"), &MetricOptions::with_degree(4), "delta", 1e-2).unwrap();
    for p in res.trace.iter().filter(|p| p.feasible) {
        for q in res.trace.iter().filter(|q| q.value < p.value) {
            assert!(q.feasible, "gamma {} feasible but {} not", p.value, q.value);
        }
    }
}
