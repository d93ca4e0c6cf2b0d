//! Belief-based dynamic program.
//!
//! Time indices here are decision steps `t = 1..=T`: `V_t(b)` is the
//! optimal expected cost of decisions `t..=T` when the belief about `B_t`
//! is `b`. A full observation of `i` at time `t - 1` leaves the belief
//! `P[i, .]` for `B_t`, so `V_t(P[i, .]) = W_{t-1}(i)` links this program
//! to the anchor-indexed one.

use std::collections::HashMap;

use crate::error::{Result, TrackError};
use crate::model::{weighted_cost, Belief, CostModel, State, TransitionMatrix};
use crate::TIE_TOLERANCE;

/// What the decision-maker learns after playing an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    /// The action overshot and revealed the state `i < action`.
    Full(State),
    /// The state is at least the action.
    Partial,
}

/// Belief about the next state after playing `action` under `b` and seeing
/// `observation`.
pub fn belief_update(p: &TransitionMatrix, b: &Belief, action: State, observation: Observation) -> Result<Belief> {
    let max = p.max_state();
    if b.len() != p.n_states() {
        return Err(TrackError::ShapeMismatch("belief size differs from state count".into()));
    }
    if action > max {
        return Err(TrackError::StateOutOfRange { state: action, max });
    }
    match observation {
        Observation::Full(i) => {
            if i >= action {
                return Err(TrackError::InvalidBelief(format!(
                    "full observation of {i} requires an action above it, got {action}"
                )));
            }
            Belief::new(p.row(i).to_vec())
        }
        Observation::Partial => {
            let next = partial_update(p, b.probs(), action).ok_or(TrackError::ZeroProbabilityBranch)?;
            Belief::new(next)
        }
    }
}

/// `T_r[b] P`: drop mass below `r`, renormalize, step forward.
fn partial_update(p: &TransitionMatrix, b: &[f64], action: State) -> Option<Vec<f64>> {
    let survive: f64 = b[action..].iter().sum();
    if !(survive > 0.0) {
        return None;
    }
    let mut restricted = vec![0.0; b.len()];
    for (r, &x) in restricted[action..].iter_mut().zip(&b[action..]) {
        *r = x / survive;
    }
    Some(p.propagate(&restricted))
}

type MemoKey = (Vec<i64>, usize);

fn memo_key(b: &[f64], t: usize) -> MemoKey {
    (b.iter().map(|x| (x * 1e12).round() as i64).collect(), t)
}

/// Memoized solver for `V_t(b)`. The memo is keyed by the belief rounded
/// to 12 decimals and the decision time.
pub struct BeliefSolver<'a> {
    model: &'a CostModel,
    p: &'a TransitionMatrix,
    memo: HashMap<MemoKey, (f64, State)>,
}

impl<'a> BeliefSolver<'a> {
    pub fn new(model: &'a CostModel, p: &'a TransitionMatrix) -> Self {
        Self { model, p, memo: HashMap::new() }
    }

    fn check(&self, b: &Belief, t: usize) -> Result<()> {
        if b.len() != self.p.n_states() {
            return Err(TrackError::ShapeMismatch("belief size differs from state count".into()));
        }
        if t == 0 || t > self.model.horizon {
            return Err(TrackError::TimeOutOfRange { time: t, horizon: self.model.horizon + 1 });
        }
        Ok(())
    }

    /// `V_t(b)` and the minimizing action (smallest on ties).
    pub fn value(&mut self, b: &Belief, t: usize) -> Result<(f64, State)> {
        self.check(b, t)?;
        Ok(self.value_raw(b.probs(), t))
    }

    /// `V_t(b; r)`: play `r` now, act optimally afterwards.
    pub fn action_value(&mut self, b: &Belief, t: usize, action: State) -> Result<f64> {
        self.check(b, t)?;
        if action > self.p.max_state() {
            return Err(TrackError::StateOutOfRange { state: action, max: self.p.max_state() });
        }
        Ok(self.action_value_raw(b.probs(), t, action))
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    fn value_raw(&mut self, b: &[f64], t: usize) -> (f64, State) {
        let key = memo_key(b, t);
        if let Some(&hit) = self.memo.get(&key) {
            return hit;
        }
        let mut best = (f64::INFINITY, 0);
        for r in 0..self.p.n_states() {
            let v = self.action_value_raw(b, t, r);
            if best.0.is_infinite() || v < best.0 - TIE_TOLERANCE * best.0.abs().max(1.0) {
                best = (v, r);
            }
        }
        self.memo.insert(key, best);
        best
    }

    fn action_value_raw(&mut self, b: &[f64], t: usize, r: State) -> f64 {
        let immediate = weighted_cost(self.model, b, r);
        if t == self.model.horizon || self.model.beta == 0.0 {
            return immediate;
        }
        let p = self.p;
        let mut future = 0.0;
        for (i, &bi) in b[..r].iter().enumerate() {
            if bi > 0.0 {
                future += bi * self.value_raw(p.row(i), t + 1).0;
            }
        }
        let survive: f64 = b[r..].iter().sum();
        if let Some(next) = partial_update(p, b, r) {
            future += survive * self.value_raw(&next, t + 1).0;
        }
        immediate + self.model.beta * future
    }
}

/// `V_t(b)` and the optimal action, with a fresh memo.
pub fn belief_value(model: &CostModel, p: &TransitionMatrix, b: &Belief, t: usize) -> Result<(f64, State)> {
    BeliefSolver::new(model, p).value(b, t)
}
