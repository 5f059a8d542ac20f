mod support {
    pub mod first_order;
    pub mod to_conic;
}

use conic::{solve, Settings, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use support::first_order::{dual_projected_gradient, random_qcqp, random_sdp, sdp_admm};
use support::to_conic::{qcqp_problem, sdp_problem};

#[test]
fn random_qcqps_match_dual_gradient_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..10 {
        let n = 3 + trial % 8;
        let p = random_qcqp(&mut rng, n, 1 + trial % 4);
        let sol = solve(&qcqp_problem(&p), &Settings::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal, "trial {trial}: {}", sol.message);
        let (_, reference) = dual_projected_gradient(&p);
        let rel = (sol.objective_value - reference).abs() / (1.0 + reference.abs());
        assert!(rel < 1e-4, "trial {trial}: ipm {} vs oracle {reference}", sol.objective_value);
    }
}

#[test]
fn random_sdps_match_admm() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..6 {
        let n = 2 + trial % 4;
        let p = random_sdp(&mut rng, n, 1 + trial % 3);
        let (cp, _) = sdp_problem(&p);
        let sol = solve(&cp, &Settings::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal, "trial {trial}: {}", sol.message);
        let (_, reference) = sdp_admm(&p, 20000);
        let rel = (sol.objective_value - reference).abs() / (1.0 + reference.abs());
        assert!(rel < 1e-4, "trial {trial}: ipm {} vs oracle {reference}", sol.objective_value);
    }
}

#[test]
fn returned_points_pass_independent_feasibility_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..5 {
        let p = random_qcqp(&mut rng, 6, 3);
        let sol = solve(&qcqp_problem(&p), &Settings::default()).unwrap();
        for c in &p.constraints {
            assert!(c.eval(&sol.x) <= 1e-6);
        }
    }
}
