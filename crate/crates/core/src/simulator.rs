//! Monte Carlo simulation of the censored tracking process.
//!
//! Path `k` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `k`, so every path owns an independent, reproducible random stream and
//! the results do not depend on how paths are scheduled across threads.
//! Costs are reduced in path order.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TrackError};
use crate::model::{immediate_cost, Anchor, CostModel, ObservationAnchor, PolicyTable, State, TransitionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationKind {
    Full,
    Partial,
}

/// One decision step of a sample path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub t: usize,
    pub state: State,
    pub action: State,
    pub observation_kind: ObservationKind,
    /// Discounted immediate cost of this step.
    pub cost: f64,
    /// Anchor whose sequence produced `action`. `None` while still playing
    /// the initial-belief sequence.
    pub anchor: Option<Anchor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub path_id: u64,
    pub steps: Vec<Step>,
    pub total_cost: f64,
}

impl SamplePath {
    /// Re-derives the total from the recorded states and actions.
    pub fn recompute_cost(&self, model: &CostModel) -> f64 {
        let t0 = self.steps.first().map_or(0, |s| s.t - 1);
        self.steps
            .iter()
            .map(|s| model.discount(s.t - t0 - 1) * immediate_cost(model, s.state, s.action))
            .sum()
    }

    /// Anchors `(B_t, t)` created by full observations, in order.
    pub fn renewals(&self) -> Vec<Anchor> {
        self.steps
            .iter()
            .filter(|s| s.observation_kind == ObservationKind::Full)
            .map(|s| Anchor::new(s.state, s.t))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
    /// The first `n_traces` paths in full.
    pub traces: Vec<SamplePath>,
}

fn sample(rng: &mut ChaCha8Rng, probs: &[f64]) -> State {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `u` past the cumulative sum: take the last state with mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

fn run_path(
    model: &CostModel,
    p: &TransitionMatrix,
    policy: &PolicyTable,
    start: &ObservationAnchor,
    path_id: u64,
    seed: u64,
    record: bool,
) -> Result<SamplePath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_id);
    let (t0, mut anchor, mut seq, mut state) = match start {
        ObservationAnchor::Observed(a) => {
            let seq = policy.sequence(a.state, a.time)?.as_slice();
            (a.time, Some(*a), seq, sample(&mut rng, p.row(a.state)))
        }
        ObservationAnchor::InitialBelief(b0) => {
            let init = policy.initial().ok_or(TrackError::MissingInitialSequence)?;
            let b1 = p.propagate(b0.probs());
            (0, None, init.actions.as_slice(), sample(&mut rng, &b1))
        }
    };
    let mut seq_start = t0;
    let mut steps = Vec::new();
    let mut total = 0.0;
    for t in t0 + 1..=model.horizon {
        if t > t0 + 1 {
            state = sample(&mut rng, p.row(state));
        }
        let action = seq[t - seq_start - 1];
        let cost = model.discount(t - t0 - 1) * immediate_cost(model, state, action);
        total += cost;
        let full = action > state;
        if record {
            let observation_kind = if full { ObservationKind::Full } else { ObservationKind::Partial };
            steps.push(Step { t, state, action, observation_kind, cost, anchor });
        }
        if full && t < model.horizon {
            anchor = Some(Anchor::new(state, t));
            seq = policy.sequence(state, t)?.as_slice();
            seq_start = t;
        }
    }
    Ok(SamplePath { path_id, steps, total_cost: total })
}

/// Simulates `n_paths` independent paths of `policy` from `start`.
pub fn simulate(
    model: &CostModel,
    p: &TransitionMatrix,
    policy: &PolicyTable,
    start: &ObservationAnchor,
    n_paths: u64,
    seed: u64,
    n_traces: usize,
) -> Result<SimReport> {
    if n_paths == 0 {
        return Err(TrackError::NoPaths);
    }
    if policy.n_states() != p.n_states() || policy.horizon() != model.horizon {
        return Err(TrackError::ShapeMismatch("policy does not match the model".into()));
    }
    match start {
        ObservationAnchor::Observed(a) => a.validate(p.max_state(), model.horizon)?,
        ObservationAnchor::InitialBelief(b0) if b0.len() != p.n_states() => {
            return Err(TrackError::ShapeMismatch("initial belief size differs from state count".into()))
        }
        ObservationAnchor::InitialBelief(_) => {}
    }
    let paths: Vec<SamplePath> = (0..n_paths)
        .into_par_iter()
        .map(|k| run_path(model, p, policy, start, k, seed, (k as usize) < n_traces))
        .collect::<Result<_>>()?;
    let n = n_paths as f64;
    let mean = paths.iter().map(|x| x.total_cost).sum::<f64>() / n;
    let var = if n_paths > 1 {
        paths.iter().map(|x| (x.total_cost - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let traces = paths.into_iter().take(n_traces).collect();
    Ok(SimReport { mean, std_error: (var / n).sqrt(), n_paths, traces })
}

#[derive(Serialize)]
struct TraceRow {
    path_id: u64,
    t: usize,
    state: State,
    action: State,
    observation_kind: ObservationKind,
    cost: f64,
    anchor_state: Option<State>,
    anchor_time: Option<usize>,
}

/// Writes traces as CSV with one row per step.
pub fn write_traces<W: Write>(out: W, traces: &[SamplePath]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for path in traces {
        for s in &path.steps {
            w.serialize(TraceRow {
                path_id: path.path_id,
                t: s.t,
                state: s.state,
                action: s.action,
                observation_kind: s.observation_kind,
                cost: s.cost,
                anchor_state: s.anchor.map(|a| a.state),
                anchor_time: s.anchor.map(|a| a.time),
            })
            .map_err(|e| TrackError::Io(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| TrackError::Io(e.to_string()))
}
