//! Randomized properties of the polynomial algebra, SOS compilation and
//! the system-file parser.

use contraction_sos::cli::parse_system;
use contraction_sos::poly::{parse_polynomial, Monomial, PolyMatrix, Polynomial};
use contraction_sos::sdp::{solve, SdpStatus, Settings};
use contraction_sos::sos::{lift, CompileOptions, SosProgram};
use contraction_sos::verify::Region;
use proptest::prelude::*;

fn names() -> Vec<String> {
    vec!["x".into(), "y".into()]
}

/// Polynomial in two variables of degree at most 3 with small integer
/// coefficients.
fn poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((0u32..=3, 0u32..=3, -5i32..=5), 0..6).prop_map(|terms| {
        Polynomial::from_terms(
            2,
            terms
                .into_iter()
                .filter(|(a, b, _)| a + b <= 3)
                .map(|(a, b, c)| (Monomial::new(vec![a, b]), c as f64)),
        )
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn display_parses_back(p in poly()) {
        let text = p.display_with(&names()).to_string();
        let q = parse_polynomial(&text, &names()).unwrap();
        prop_assert!(p.max_coeff_diff(&q) == 0.0, "{} != {}", text, q.display_with(&names()));
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(p in poly(), q in poly(), x in point()) {
        let pv = p.evaluate(&x).unwrap();
        let qv = q.evaluate(&x).unwrap();
        let sum = p.checked_add(&q).unwrap().evaluate(&x).unwrap();
        let prod = p.checked_mul(&q).unwrap().evaluate(&x).unwrap();
        prop_assert!((sum - (pv + qv)).abs() <= 1e-9 * (1.0 + pv.abs() + qv.abs()));
        prop_assert!((prod - pv * qv).abs() <= 1e-9 * (1.0 + (pv * qv).abs()));
    }

    #[test]
    fn multiplication_distributes(p in poly(), q in poly(), r in poly()) {
        let lhs = p.checked_mul(&q.checked_add(&r).unwrap()).unwrap();
        let rhs = p.checked_mul(&q).unwrap().checked_add(&p.checked_mul(&r).unwrap()).unwrap();
        prop_assert!(lhs.max_coeff_diff(&rhs) == 0.0);
    }

    #[test]
    fn derivative_matches_central_difference(p in poly(), x in point(), var in 0usize..2) {
        let d = p.differentiate(var).unwrap().evaluate(&x).unwrap();
        let h = 1e-5;
        let mut a = x.clone();
        let mut b = x.clone();
        a[var] += h;
        b[var] -= h;
        let fd = (p.evaluate(&a).unwrap() - p.evaluate(&b).unwrap()) / (2.0 * h);
        prop_assert!((d - fd).abs() <= 1e-5 * (1.0 + d.abs()));
    }

    #[test]
    fn definition_file_matches_direct_parse(p in poly(), q in poly()) {
        let n = names();
        let text = format!(
            "format = 1\n[states]\nx, y\n[dynamics]\nx' = {}\ny' = {}\n",
            p.display_with(&n), q.display_with(&n)
        );
        let sys = parse_system(&text, &[]).unwrap();
        prop_assert!(sys.field[0].max_coeff_diff(&p) == 0.0);
        prop_assert!(sys.field[1].max_coeff_diff(&q) == 0.0);
    }

    #[test]
    fn region_points_stay_inside(seed in any::<u64>(), lo in -3.0f64..0.0, w in 0.1f64..3.0) {
        let mut r = Region::cube(2, lo, lo + w);
        r.grid = vec![3, 4];
        r.samples = 20;
        r.seed = seed;
        let pts = r.points().unwrap();
        prop_assert_eq!(pts.len(), 32);
        prop_assert!(pts.iter().flatten().all(|&v| v >= lo && v <= lo + w));
        prop_assert_eq!(pts, r.points().unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// `TᵀT` for a random affine `T` is an SOS matrix; the recovered Gram
    /// matrix must reproduce it.
    #[test]
    fn sos_round_trip_reconstruction(coeffs in prop::collection::vec(-3i32..=3, 12)) {
        let c = |k: usize| coeffs[k] as f64;
        let affine = |k: usize| {
            Polynomial::from_terms(
                2,
                [
                    (Monomial::one(2), c(k)),
                    (Monomial::var(2, 0), c(k + 1)),
                    (Monomial::var(2, 1), c(k + 2)),
                ],
            )
        };
        let t = PolyMatrix::from_rows(vec![vec![affine(0), affine(3)], vec![affine(6), affine(9)]]).unwrap();
        let s = t.transpose().mul_real(&t).unwrap();
        let mut prog = SosProgram::new(2);
        prog.add_sos_matrix("s", lift(&s), 0.0).unwrap();
        let compiled = prog.compile(&CompileOptions::default()).unwrap();
        let sol = solve(&compiled.sdp, &Settings::default()).unwrap();
        prop_assert!(
            matches!(sol.status, SdpStatus::Feasible | SdpStatus::Inaccurate),
            "status {}", sol.status
        );
        if sol.status == SdpStatus::Feasible {
            let rec = compiled.recover(&prog, &sol).unwrap();
            let g = &rec.grams[0];
            prop_assert!(g.reconstruction_error() <= 1e-7, "error {}", g.reconstruction_error());
            prop_assert!(g.min_eigenvalue() >= -1e-7 * (1.0 + g.gram.amax()));
        }
    }
}
