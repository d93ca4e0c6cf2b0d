//! Percentile policies.
//!
//! A percentile policy fixes one threshold `h` per anchor. After a full
//! observation it propagates the censored belief and, at every step, plays
//! the smallest state whose normalized cumulative mass reaches `h`. The
//! myopic policy is the member with `h = c_l / (c_l + c_u)`; the finite
//! resolution percentile (FRP) policy picks, anchor by anchor and backward
//! in time, the threshold from a finite grid with the lowest cost-to-go.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TrackError};
use crate::model::{
    myopic_threshold_or_zero, percentile_index, weighted_cost, ActionSequence, Anchor, Belief, CostModel,
    InitialEntry, PolicyEntry, PolicyFamily, PolicyTable, State, TransitionMatrix, ValueTable,
};
use crate::taboo::{Censored, SegmentCost};
use crate::TIE_TOLERANCE;

/// Default grid spacing for the FRP threshold search.
pub const DEFAULT_RESOLUTION: f64 = 0.01;

/// Threshold used before the first full observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialThreshold {
    pub belief: Belief,
    pub threshold: f64,
}

/// Per-anchor thresholds `h_{s,t}` and the grid they were drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    n_states: usize,
    horizon: usize,
    /// Time-major: `thresholds[t * n_states + s]`.
    thresholds: Vec<f64>,
    pub initial: Option<InitialThreshold>,
    /// Candidate grid; empty when the thresholds were supplied directly.
    pub resolution: Vec<f64>,
}

impl ThresholdTable {
    /// Same threshold at every anchor.
    pub fn uniform(n_states: usize, horizon: usize, h: f64) -> Result<Self> {
        Self::from_fn(n_states, horizon, |_, _| h)
    }

    /// Threshold for anchor `(s, t)` given by `f(s, t)`.
    pub fn from_fn(n_states: usize, horizon: usize, f: impl Fn(State, usize) -> f64) -> Result<Self> {
        let mut thresholds = Vec::with_capacity(n_states * horizon);
        for t in 0..horizon {
            for s in 0..n_states {
                let h = f(s, t);
                check_threshold(h)?;
                thresholds.push(h);
            }
        }
        Ok(Self { n_states, horizon, thresholds, initial: None, resolution: Vec::new() })
    }

    pub fn with_initial(mut self, belief: Belief, threshold: f64) -> Result<Self> {
        check_threshold(threshold)?;
        self.initial = Some(InitialThreshold { belief, threshold });
        Ok(self)
    }

    #[inline]
    pub fn get(&self, state: State, time: usize) -> f64 {
        self.thresholds[time * self.n_states + state]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn iter(&self) -> impl Iterator<Item = (Anchor, f64)> + '_ {
        self.thresholds
            .iter()
            .enumerate()
            .map(move |(k, &h)| (Anchor::new(k % self.n_states, k / self.n_states), h))
    }
}

fn check_threshold(h: f64) -> Result<()> {
    if (0.0..=1.0).contains(&h) {
        Ok(())
    } else {
        Err(TrackError::InvalidThreshold(h))
    }
}

/// The grid `{0, delta, 2 delta, ..., 1}` followed by the myopic threshold,
/// in scan order. Its size is `1/delta + 2` when `1/delta` is an integer.
pub fn resolution_set(model: &CostModel, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(TrackError::InvalidResolution(delta));
    }
    let steps = (1.0 / delta).round();
    let mut grid = Vec::new();
    if (steps * delta - 1.0).abs() < 1e-9 {
        let steps = steps as usize;
        grid.extend((0..steps).map(|k| k as f64 / steps as f64));
    } else {
        let mut k = 0usize;
        while (k as f64) * delta < 1.0 - 1e-12 {
            grid.push(k as f64 * delta);
            k += 1;
        }
    }
    grid.push(1.0);
    if let Ok(h_m) = model.myopic_threshold() {
        grid.push(h_m);
    }
    Ok(grid)
}

/// One percentile sequence with its cost and a count of elementary
/// multiply-adds spent producing it.
#[derive(Debug, Clone)]
pub(crate) struct PercentileRun {
    pub actions: Vec<State>,
    pub cost: SegmentCost,
    pub work: u64,
}

/// Generates `len` actions from the survivor vector `walk` with threshold
/// `h`, accumulating the same cost terms as `segment_cost`. Once no mass
/// survives, the remaining actions are filled with `M`.
pub(crate) fn run_percentile(
    model: &CostModel,
    mut walk: Censored<'_>,
    max_state: State,
    len: usize,
    h: f64,
    later: Option<(&ValueTable, usize)>,
) -> PercentileRun {
    let n = (max_state + 1) as u64;
    let mut actions = Vec::with_capacity(len);
    let mut cost = SegmentCost::default();
    let mut work = 0u64;
    for k in 0..len {
        let tau = k + 1;
        let u = walk.vector();
        let Some(r) = percentile_index(u, h) else {
            actions.resize(len, max_state);
            break;
        };
        actions.push(r);
        cost.gamma += model.discount(tau - 1) * weighted_cost(model, u, r);
        work += n;
        if tau < len {
            if let Some((table, start)) = later {
                let w = table.at_time(start + tau);
                let observed: f64 = u[..r].iter().zip(w).map(|(x, w)| x * w).sum();
                cost.renewal += model.discount(tau) * observed;
            }
            walk.advance(r);
            work += n * n;
        }
    }
    PercentileRun { actions, cost, work }
}

/// Action sequence generated by threshold `h` after observing `anchor`.
pub fn sequence_from_threshold(
    model: &CostModel,
    p: &TransitionMatrix,
    anchor: Anchor,
    h: f64,
) -> Result<ActionSequence> {
    anchor.validate(p.max_state(), model.horizon)?;
    check_threshold(h)?;
    let run = run_percentile(
        model,
        Censored::from_state(p, anchor.state),
        p.max_state(),
        model.horizon - anchor.time,
        h,
        None,
    );
    Ok(ActionSequence::new(run.actions))
}

/// Initial-phase sequence generated by threshold `h` from a belief over `B_0`.
pub fn initial_sequence_from_threshold(
    model: &CostModel,
    p: &TransitionMatrix,
    b0: &Belief,
    h: f64,
) -> Result<ActionSequence> {
    check_threshold(h)?;
    check_belief(p, b0)?;
    let run = run_percentile(model, Censored::from_distribution(p, b0.probs()), p.max_state(), model.horizon, h, None);
    Ok(ActionSequence::new(run.actions))
}

fn check_belief(p: &TransitionMatrix, b0: &Belief) -> Result<()> {
    if b0.len() != p.n_states() {
        return Err(TrackError::ShapeMismatch("initial belief size differs from state count".into()));
    }
    Ok(())
}

/// Result of scanning a candidate list at one anchor.
struct Choice {
    threshold: f64,
    run: PercentileRun,
    work: u64,
}

/// Scans thresholds in order and keeps the last one whose cost is within
/// the tie tolerance of the running minimum.
fn scan(candidates: &[f64], mut run: impl FnMut(f64) -> PercentileRun) -> Choice {
    let mut best: Option<(f64, PercentileRun)> = None;
    let mut minimum = f64::INFINITY;
    let mut work = 0;
    for &h in candidates {
        let r = run(h);
        work += r.work;
        let w = r.cost.total();
        minimum = minimum.min(w);
        let keep = match &best {
            None => true,
            Some(_) => w <= minimum + TIE_TOLERANCE * minimum.abs().max(1.0),
        };
        if keep {
            best = Some((h, r));
        }
    }
    let (threshold, run) = best.expect("candidate list is never empty");
    Choice { threshold, run, work }
}

/// Backward pass shared by fixed-threshold evaluation and the FRP search.
fn backward(
    model: &CostModel,
    p: &TransitionMatrix,
    candidates: impl Fn(State, usize) -> Vec<f64> + Sync,
) -> (Vec<f64>, Vec<ActionSequence>, ValueTable, u64) {
    let n = p.n_states();
    let horizon = model.horizon;
    let mut w = ValueTable::zeros(n, horizon);
    let mut thresholds = vec![0.0; n * horizon];
    let mut seqs = vec![ActionSequence::default(); n * horizon];
    let mut work = 0;
    for t in (0..horizon).rev() {
        let choices: Vec<Choice> = (0..n)
            .into_par_iter()
            .map(|s| {
                let later = &w;
                scan(&candidates(s, t), |h| {
                    run_percentile(model, Censored::from_state(p, s), p.max_state(), horizon - t, h, Some((later, t)))
                })
            })
            .collect();
        for (s, choice) in choices.into_iter().enumerate() {
            w.set(s, t, choice.run.cost.total());
            thresholds[t * n + s] = choice.threshold;
            seqs[t * n + s] = ActionSequence::new(choice.run.actions);
            work += choice.work;
        }
    }
    (thresholds, seqs, w, work)
}

fn assemble(
    family: PolicyFamily,
    n: usize,
    horizon: usize,
    seqs: Vec<ActionSequence>,
    w: &ValueTable,
) -> Result<PolicyTable> {
    let entries = seqs
        .into_iter()
        .enumerate()
        .map(|(k, actions)| PolicyEntry { actions, cost_to_go: w.get(k % n, k / n) })
        .collect();
    PolicyTable::new(family, n, horizon, entries)
}

fn check_table(model: &CostModel, p: &TransitionMatrix, thresholds: &ThresholdTable) -> Result<()> {
    if thresholds.n_states() != p.n_states() || thresholds.horizon() != model.horizon {
        return Err(TrackError::ShapeMismatch(format!(
            "threshold table is {}x{}, problem is {}x{}",
            thresholds.n_states(),
            thresholds.horizon(),
            p.n_states(),
            model.horizon
        )));
    }
    Ok(())
}

/// Sequences and exact cost-to-go of the percentile policy with the given
/// thresholds. An initial threshold, when present, adds the initial-belief
/// sequence and its total cost.
pub fn evaluate_percentile(model: &CostModel, p: &TransitionMatrix, thresholds: &ThresholdTable) -> Result<PolicyTable> {
    check_table(model, p, thresholds)?;
    let (_, seqs, w, _) = backward(model, p, |s, t| vec![thresholds.get(s, t)]);
    let table = assemble(PolicyFamily::Percentile, p.n_states(), model.horizon, seqs, &w)?;
    match &thresholds.initial {
        None => Ok(table),
        Some(init) => {
            check_belief(p, &init.belief)?;
            let choice = scan(&[init.threshold], |h| initial_run(model, p, &init.belief, h, &w));
            table.with_initial(InitialEntry {
                belief: init.belief.clone(),
                actions: ActionSequence::new(choice.run.actions),
                cost: choice.run.cost.total(),
            })
        }
    }
}

fn initial_run(model: &CostModel, p: &TransitionMatrix, b0: &Belief, h: f64, w: &ValueTable) -> PercentileRun {
    run_percentile(model, Censored::from_distribution(p, b0.probs()), p.max_state(), model.horizon, h, Some((w, 0)))
}

/// The myopic policy: every anchor uses `h = c_l / (c_l + c_u)`.
pub fn myopic_policy(model: &CostModel, p: &TransitionMatrix) -> Result<PolicyTable> {
    let h = myopic_threshold_or_zero(model);
    let (_, seqs, w, _) = backward(model, p, |_, _| vec![h]);
    assemble(PolicyFamily::Myopic, p.n_states(), model.horizon, seqs, &w)
}

/// FRP search over the grid of [`resolution_set`].
pub fn solve_frp(model: &CostModel, p: &TransitionMatrix, delta: f64) -> Result<(ThresholdTable, PolicyTable)> {
    solve_frp_counted(model, p, delta).map(|(t, pol, _)| (t, pol))
}

/// [`solve_frp`] that also returns the number of elementary multiply-adds.
pub fn solve_frp_counted(
    model: &CostModel,
    p: &TransitionMatrix,
    delta: f64,
) -> Result<(ThresholdTable, PolicyTable, u64)> {
    let grid = resolution_set(model, delta)?;
    let (thresholds, seqs, w, work) = backward(model, p, |_, _| grid.clone());
    let policy = assemble(PolicyFamily::Frp, p.n_states(), model.horizon, seqs, &w)?;
    let table = ThresholdTable {
        n_states: p.n_states(),
        horizon: model.horizon,
        thresholds,
        initial: None,
        resolution: grid,
    };
    Ok((table, policy, work))
}

/// Best initial-phase threshold for a prior belief, given solved anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialFrp {
    pub threshold: f64,
    pub actions: ActionSequence,
    pub cost: f64,
}

/// Scans `candidates` for the initial sequence minimizing the total cost
/// from `b0`, with the anchors of `policy` used after the first full
/// observation.
pub fn best_initial_threshold(
    model: &CostModel,
    p: &TransitionMatrix,
    policy: &PolicyTable,
    b0: &Belief,
    candidates: &[f64],
) -> Result<InitialFrp> {
    check_belief(p, b0)?;
    if candidates.is_empty() {
        return Err(TrackError::InvalidResolution(0.0));
    }
    for &h in candidates {
        check_threshold(h)?;
    }
    let w = policy.costs();
    if w.n_states() != p.n_states() || w.horizon() != model.horizon {
        return Err(TrackError::ShapeMismatch("policy does not match the problem".into()));
    }
    let choice = scan(candidates, |h| initial_run(model, p, b0, h, &w));
    Ok(InitialFrp {
        threshold: choice.threshold,
        actions: ActionSequence::new(choice.run.actions),
        cost: choice.run.cost.total(),
    })
}

/// FRP including the initial-belief phase: solves the anchors, then picks
/// the initial threshold from the same grid.
pub fn frp_with_initial_belief(
    model: &CostModel,
    p: &TransitionMatrix,
    b0: &Belief,
    delta: f64,
) -> Result<(ThresholdTable, PolicyTable, InitialFrp)> {
    let (mut thresholds, policy) = solve_frp(model, p, delta)?;
    let init = best_initial_threshold(model, p, &policy, b0, &thresholds.resolution)?;
    thresholds.initial = Some(InitialThreshold { belief: b0.clone(), threshold: init.threshold });
    let policy = policy.with_initial(InitialEntry {
        belief: b0.clone(),
        actions: init.actions.clone(),
        cost: init.cost,
    })?;
    Ok((thresholds, policy, init))
}
