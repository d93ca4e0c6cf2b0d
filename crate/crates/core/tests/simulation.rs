mod common;

use markov_track::{
    evaluate_policy, frp_with_initial_belief, myopic_policy, simulate, solve_frp, special_case_policy, Anchor, Belief,
    CostModel, ObservationAnchor, TransitionMatrix, DEFAULT_RESOLUTION,
};

use common::*;

#[test]
fn standard_error_shrinks_like_inverse_root() {
    let p = mixing3();
    let model = CostModel::new(1.0, 1.0, 1.0, 7).unwrap();
    let (_, frp) = solve_frp(&model, &p, DEFAULT_RESOLUTION).unwrap();
    let start = ObservationAnchor::Observed(Anchor::new(1, 0));
    let se: Vec<f64> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&n| simulate(&model, &p, &frp, &start, n, 3, 0).unwrap().std_error)
        .collect();
    for w in se.windows(2) {
        let ratio = w[0] / w[1];
        let ideal = 10f64.sqrt();
        assert!((ratio / ideal - 1.0).abs() < 0.2, "se ratio {ratio}");
    }
}

#[test]
fn prior_start_matches_analytic_cost() {
    let p = sticky3();
    let model = CostModel::new(2.0, 1.0, 0.9, 6).unwrap();
    let b0 = Belief::new(vec![0.2, 0.5, 0.3]).unwrap();
    let (_, policy, init) = frp_with_initial_belief(&model, &p, &b0, DEFAULT_RESOLUTION).unwrap();
    let report = simulate(&model, &p, &policy, &ObservationAnchor::InitialBelief(b0), 50_000, 8, 0).unwrap();
    assert!((report.mean - init.cost).abs() <= 3.0 * report.std_error, "{} vs {}", report.mean, init.cost);
}

#[test]
fn later_anchor_start_matches_analytic_cost() {
    let p = mixing3();
    let model = CostModel::new(3.0, 1.0, 0.8, 7).unwrap();
    let myo = myopic_policy(&model, &p).unwrap();
    let w = evaluate_policy(&model, &p, &myo).unwrap();
    let report = simulate(&model, &p, &myo, &ObservationAnchor::Observed(Anchor::new(2, 3)), 50_000, 9, 0).unwrap();
    assert!((report.mean - w.get(2, 3)).abs() <= 3.0 * report.std_error);
}

#[test]
fn traces_replay_exactly() {
    let p = mixing3();
    let model = CostModel::new(3.0, 1.0, 0.95, 7).unwrap();
    let (_, frp) = solve_frp(&model, &p, DEFAULT_RESOLUTION).unwrap();
    let report = simulate(&model, &p, &frp, &ObservationAnchor::Observed(Anchor::new(0, 0)), 300, 5, 300).unwrap();
    for path in &report.traces {
        assert_eq!(path.recompute_cost(&model), path.total_cost);
        for anchor in path.renewals() {
            assert!(anchor.time <= model.horizon);
        }
    }
}

#[test]
fn trivial_instances_cost_nothing() {
    let shift = TransitionMatrix::new(vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]]).unwrap();
    let model = CostModel::new(1.0, 1.0, 1.0, 6).unwrap();
    let policy = special_case_policy(&model, &shift).unwrap();
    let r = simulate(&model, &shift, &policy, &ObservationAnchor::Observed(Anchor::new(0, 0)), 1_000, 1, 0).unwrap();
    assert_eq!(r.mean, 0.0);

    let zero = CostModel::zero_cost(1.0, 6).unwrap();
    let myo = myopic_policy(&zero, &mixing3()).unwrap();
    let r = simulate(&zero, &mixing3(), &myo, &ObservationAnchor::Observed(Anchor::new(1, 0)), 1_000, 1, 0).unwrap();
    assert_eq!((r.mean, r.std_error), (0.0, 0.0));
}
