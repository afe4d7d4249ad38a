//! Regression set of 20 random block SDPs with known outcome. Feasible
//! instances are built around a strictly feasible primal-dual pair; the
//! infeasible ones around a planted Farkas ray.

mod common;

use common::{infeasible_instance, regression_set};
use contraction_sos::sdp::{check_solution, solve, verify_infeasibility, SdpProblem, SdpStatus, Settings};
use nalgebra::DMatrix;

#[test]
fn regression_set_statuses_and_certificates() {
    let set = regression_set();
    assert_eq!(set.len(), 20);
    for (k, inst) in set.iter().enumerate() {
        let sol = solve(&inst.prob, &Settings::default()).unwrap();
        if inst.feasible {
            assert_eq!(sol.status, SdpStatus::Feasible, "instance {k}");
            let r = check_solution(&inst.prob, &sol);
            let bscale = 1.0 + inst.prob.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            assert!(r.equality <= 1e-6 * bscale, "instance {k}: equality residual {}", r.equality);
            assert!(r.min_eig() >= -1e-8, "instance {k}: min eig {}", r.min_eig());
            let scale = 1.0 + r.objective.abs();
            assert!(r.duality_gap <= 1e-6 * scale, "instance {k}: gap {}", r.duality_gap);
            for c in &r.complementarity {
                assert!(*c <= 1e-6 * scale, "instance {k}: complementarity {c}");
            }
        } else {
            assert_eq!(sol.status, SdpStatus::PrimalInfeasible, "instance {k}");
            assert!(sol.feasibility_ratio < 0.0, "instance {k}");
            let cert = sol.certificate.as_ref().expect("infeasibility ray");
            assert!(verify_infeasibility(&inst.prob, cert, 1e-6), "instance {k}");
        }
    }
}

#[test]
fn planted_rays_pass_the_checker() {
    for s in 0..6 {
        let inst = infeasible_instance(2000 + s);
        let cert = contraction_sos::sdp::InfeasibilityCertificate {
            y: inst.ray.clone().unwrap(),
            s_blocks: inst.prob.block_dims.iter().map(|&d| DMatrix::zeros(d, d)).collect(),
        };
        assert!(verify_infeasibility(&inst.prob, &cert, 1e-9));
    }
}

#[test]
fn triplet_format_round_trip() {
    for inst in regression_set() {
        let text = inst.prob.to_triplets();
        assert!(text.starts_with("format = 1"));
        let back = SdpProblem::from_triplets(&text).unwrap();
        assert_eq!(back.block_dims, inst.prob.block_dims);
        assert_eq!(back.rhs.len(), inst.prob.rhs.len());
        let a = solve(&inst.prob, &Settings::default()).unwrap();
        let b = solve(&back, &Settings::default()).unwrap();
        assert_eq!(a.status, b.status);
    }
}

