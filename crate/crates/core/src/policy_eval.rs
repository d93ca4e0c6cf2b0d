//! Exact expected cost of anchor-indexed policies.
//!
//! A full observation at time `t` restarts the process, so the cost-to-go of
//! a policy splits into the censored cost paid until the next full
//! observation plus the cost-to-go of the anchor reached there:
//!
//! ```text
//! W_{T-1}(s) = Gamma(s, T-1)
//! W_t(s)     = Gamma(s, t) + sum_{tau=1}^{T-t-1} beta^tau sum_{s' < a_tau} u_tau(s') W_{t+tau}(s')
//! ```
//!
//! An observation on the final step has no decisions left, so the renewal
//! sum stops at `tau = T - t - 1`.

use crate::error::{Result, TrackError};
use crate::model::{
    ActionSequence, Belief, CostModel, PolicyEntry, PolicyFamily, PolicyTable, State, TransitionMatrix,
    ValueTable,
};
use crate::taboo::{segment_cost, Censored, SegmentCost};

pub(crate) fn anchor_value(
    model: &CostModel,
    p: &TransitionMatrix,
    state: State,
    time: usize,
    actions: &[State],
    later: &ValueTable,
) -> SegmentCost {
    segment_cost(model, Censored::from_state(p, state), actions, Some((later, time)))
}

pub(crate) fn initial_value(
    model: &CostModel,
    p: &TransitionMatrix,
    b0: &Belief,
    actions: &[State],
    later: &ValueTable,
) -> SegmentCost {
    segment_cost(model, Censored::from_distribution(p, b0.probs()), actions, Some((later, 0)))
}

fn check_shape(model: &CostModel, p: &TransitionMatrix, policy: &PolicyTable) -> Result<()> {
    if policy.n_states() != p.n_states() {
        return Err(TrackError::ShapeMismatch(format!(
            "policy covers {} states, matrix has {}",
            policy.n_states(),
            p.n_states()
        )));
    }
    if policy.horizon() != model.horizon {
        return Err(TrackError::ShapeMismatch(format!(
            "policy horizon {} differs from model horizon {}",
            policy.horizon(),
            model.horizon
        )));
    }
    Ok(())
}

fn backward(
    model: &CostModel,
    p: &TransitionMatrix,
    mut sequence: impl FnMut(State, usize) -> Result<ActionSequence>,
) -> Result<(ValueTable, Vec<ActionSequence>)> {
    let n = p.n_states();
    let horizon = model.horizon;
    let mut w = ValueTable::zeros(n, horizon);
    let mut seqs = vec![ActionSequence::default(); n * horizon];
    for t in (0..horizon).rev() {
        for s in 0..n {
            let seq = sequence(s, t)?;
            if seq.len() != horizon - t {
                return Err(TrackError::LengthMismatch { expected: horizon - t, actual: seq.len() });
            }
            if let Some(&bad) = seq.as_slice().iter().find(|&&a| a >= n) {
                return Err(TrackError::StateOutOfRange { state: bad, max: n - 1 });
            }
            let value = anchor_value(model, p, s, t, seq.as_slice(), &w).total();
            w.set(s, t, value);
            seqs[t * n + s] = seq;
        }
    }
    Ok((w, seqs))
}

/// Cost-to-go `W_t(s)` of every anchor under the policy's sequences.
pub fn evaluate_policy(model: &CostModel, p: &TransitionMatrix, policy: &PolicyTable) -> Result<ValueTable> {
    check_shape(model, p, policy)?;
    backward(model, p, |s, t| policy.sequence(s, t).cloned()).map(|(w, _)| w)
}

/// Builds a policy table from time-major sequences (`seqs[t * (M+1) + s]`)
/// and fills in the exact cost-to-go of every anchor.
pub fn policy_from_sequences(
    model: &CostModel,
    p: &TransitionMatrix,
    family: PolicyFamily,
    seqs: Vec<ActionSequence>,
) -> Result<PolicyTable> {
    let n = p.n_states();
    if seqs.len() != n * model.horizon {
        return Err(TrackError::ShapeMismatch(format!(
            "expected {} sequences, got {}",
            n * model.horizon,
            seqs.len()
        )));
    }
    let (w, seqs) = backward(model, p, |s, t| Ok(seqs[t * n + s].clone()))?;
    let entries = seqs
        .into_iter()
        .enumerate()
        .map(|(k, actions)| PolicyEntry { actions, cost_to_go: w.get(k % n, k / n) })
        .collect();
    PolicyTable::new(family, n, model.horizon, entries)
}

/// Expected cost when `B_0 ~ b0` is unobserved: `init_seq` is played until
/// the first full observation, after which the policy's anchors take over.
pub fn evaluate_with_initial_belief(
    model: &CostModel,
    p: &TransitionMatrix,
    policy: &PolicyTable,
    b0: &Belief,
    init_seq: &ActionSequence,
) -> Result<f64> {
    check_shape(model, p, policy)?;
    if init_seq.len() != model.horizon {
        return Err(TrackError::LengthMismatch { expected: model.horizon, actual: init_seq.len() });
    }
    if b0.len() != p.n_states() {
        return Err(TrackError::ShapeMismatch("initial belief size differs from state count".into()));
    }
    if let Some(&bad) = init_seq.as_slice().iter().find(|&&a| a > p.max_state()) {
        return Err(TrackError::StateOutOfRange { state: bad, max: p.max_state() });
    }
    let w = evaluate_policy(model, p, policy)?;
    Ok(initial_value(model, p, b0, init_seq.as_slice(), &w).total())
}
