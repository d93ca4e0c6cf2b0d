//! Full-observation genie lower bound and optimality-gap ratios.
//!
//! The genie sees the true state with one step of delay, so before every
//! decision its belief is a row of `P` and its best action is the myopic
//! one. Its cost can only be lower than that of any policy that has to
//! live with censored observations.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TrackError};
use crate::model::{
    myopic_threshold_or_zero, percentile_index, weighted_cost, Belief, CostModel, ObservationAnchor, PolicyTable,
    TransitionMatrix, ValueTable,
};

/// Costs at or below this magnitude count as zero when forming ratios.
pub const ZERO_COST: f64 = 1e-12;

fn myopic_cost(model: &CostModel, weights: &[f64], h: f64, max_state: usize) -> f64 {
    let r = percentile_index(weights, h).unwrap_or(max_state);
    weighted_cost(model, weights, r)
}

/// `W^FO_t(s)` for every anchor.
pub fn fo_lower_bound(model: &CostModel, p: &TransitionMatrix) -> ValueTable {
    let n = p.n_states();
    let h = myopic_threshold_or_zero(model);
    let immediate: Vec<f64> = (0..n).map(|s| myopic_cost(model, p.row(s), h, p.max_state())).collect();
    let mut w = ValueTable::zeros(n, model.horizon);
    for t in (0..model.horizon).rev() {
        for (s, &now) in immediate.iter().enumerate() {
            let future = if t + 1 < model.horizon {
                let next = w.at_time(t + 1);
                model.beta * p.row(s).iter().zip(next).map(|(pi, wi)| pi * wi).sum::<f64>()
            } else {
                0.0
            };
            w.set(s, t, now + future);
        }
    }
    w
}

/// Genie cost from an unobserved prior `b0` on `B_0`: the first decision
/// faces `b0 P`, after which the genie is anchored at each observed state.
pub fn fo_initial_belief(model: &CostModel, p: &TransitionMatrix, fo: &ValueTable, b0: &Belief) -> Result<f64> {
    if b0.len() != p.n_states() {
        return Err(TrackError::ShapeMismatch("initial belief size differs from state count".into()));
    }
    let h = myopic_threshold_or_zero(model);
    let b1 = p.propagate(b0.probs());
    let mut cost = myopic_cost(model, &b1, h, p.max_state());
    if model.horizon > 1 {
        cost += model.beta * b1.iter().zip(fo.at_time(1)).map(|(b, w)| b * w).sum::<f64>();
    }
    Ok(cost)
}

/// `W^policy / W^FO` with the conventions `0/0 = 1` and `x/0 = inf`.
pub fn cost_ratio(policy_cost: f64, fo_cost: f64) -> f64 {
    let policy_zero = policy_cost.abs() <= ZERO_COST;
    let fo_zero = fo_cost.abs() <= ZERO_COST;
    match (policy_zero, fo_zero) {
        (true, true) => 1.0,
        (false, true) => f64::INFINITY,
        _ => policy_cost / fo_cost,
    }
}

/// Policy cost, genie cost and their ratio at a starting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub policy_cost: f64,
    pub fo_cost: f64,
    pub ratio: f64,
}

/// Ratio of a policy's cost to the genie bound at `start`. For a belief
/// start the policy must carry an initial sequence for that belief.
pub fn gap_report(
    model: &CostModel,
    p: &TransitionMatrix,
    policy: &PolicyTable,
    fo: &ValueTable,
    start: &ObservationAnchor,
) -> Result<GapReport> {
    let (policy_cost, fo_cost) = match start {
        ObservationAnchor::Observed(anchor) => {
            anchor.validate(p.max_state(), model.horizon)?;
            (policy.cost(anchor.state, anchor.time)?, fo.get(anchor.state, anchor.time))
        }
        ObservationAnchor::InitialBelief(b0) => {
            let init = policy.initial().ok_or(TrackError::MissingInitialSequence)?;
            if &init.belief != b0 {
                return Err(TrackError::MissingInitialSequence);
            }
            (init.cost, fo_initial_belief(model, p, fo, b0)?)
        }
    };
    Ok(GapReport { policy_cost, fo_cost, ratio: cost_ratio(policy_cost, fo_cost) })
}
