//! Exhaustive sequence-space dynamic program.
//!
//! Anchors are solved backward in time. At anchor `(s, t)` every sequence
//! in `{0..=M}^(T-t)` is scored against the already-solved later anchors,
//! walking the sequences depth-first in lexicographic order so that the
//! censored survivor vectors of shared prefixes are computed once. The
//! first sequence reaching the minimum (within [`TIE_TOLERANCE`]) wins.
//!
//! Total work is `(M+1) * sum_t (M+1)^(T-t)` sequence evaluations, i.e.
//! `Theta((M+1)^(T+1))`, so a budget guard refuses instances that are too
//! large instead of truncating the search.

use rayon::prelude::*;

use crate::error::{Result, TrackError};
use crate::model::{
    myopic_threshold_or_zero, percentile_index, weighted_cost, ActionSequence, CostModel, PolicyFamily,
    PolicyTable, State, TransitionMatrix, ValueTable,
};
use crate::percentile::myopic_policy;
use crate::policy_eval::policy_from_sequences;
use crate::TIE_TOLERANCE;

/// Default cap on sequence evaluations.
pub const DEFAULT_BUDGET: f64 = 1e8;

/// Number of sequence evaluations the exhaustive search performs.
pub fn required_evaluations(n_states: usize, horizon: usize) -> f64 {
    let n = n_states as f64;
    (0..horizon).map(|t| n * n.powi((horizon - t) as i32)).sum()
}

struct AnchorSearch<'a> {
    model: &'a CostModel,
    p: &'a TransitionMatrix,
    later: &'a ValueTable,
    time: usize,
    len: usize,
    n: usize,
    /// Survivor vector at each depth, `len * n` entries.
    vectors: Vec<f64>,
    current: Vec<State>,
    best: Vec<State>,
    best_cost: f64,
    leaves: u64,
}

impl<'a> AnchorSearch<'a> {
    fn new(model: &'a CostModel, p: &'a TransitionMatrix, later: &'a ValueTable, state: State, time: usize) -> Self {
        let n = p.n_states();
        let len = model.horizon - time;
        let mut vectors = vec![0.0; len * n];
        vectors[..n].copy_from_slice(p.row(state));
        Self {
            model,
            p,
            later,
            time,
            len,
            n,
            vectors,
            current: vec![0; len],
            best: vec![0; len],
            best_cost: f64::INFINITY,
            leaves: 0,
        }
    }

    fn descend(&mut self, depth: usize, acc: f64) {
        let n = self.n;
        let tau = depth + 1;
        let last = tau == self.len;
        for a in 0..n {
            self.current[depth] = a;
            let (head, tail) = self.vectors.split_at_mut((depth + 1) * n);
            let u = &head[depth * n..];
            let mut cost = acc + self.model.discount(tau - 1) * weighted_cost(self.model, u, a);
            if last {
                self.leaves += 1;
                if cost < self.best_cost - TIE_TOLERANCE * self.best_cost.abs().max(1.0) || self.best_cost.is_infinite() {
                    self.best_cost = cost;
                    self.best.copy_from_slice(&self.current);
                }
                continue;
            }
            let w = self.later.at_time(self.time + tau);
            let observed: f64 = u[..a].iter().zip(w).map(|(x, w)| x * w).sum();
            cost += self.model.discount(tau) * observed;
            let child = &mut tail[..n];
            child.iter_mut().for_each(|x| *x = 0.0);
            for (i, &ui) in u.iter().enumerate().skip(a) {
                if ui == 0.0 {
                    continue;
                }
                for (c, &pij) in child.iter_mut().zip(self.p.row(i)) {
                    *c += ui * pij;
                }
            }
            self.descend(depth + 1, cost);
        }
    }
}

/// Optimal policy table for small horizons.
pub fn solve_optimal(model: &CostModel, p: &TransitionMatrix, budget: f64) -> Result<PolicyTable> {
    solve_optimal_counted(model, p, budget).map(|(policy, _)| policy)
}

/// [`solve_optimal`] that also returns the number of sequences scored.
pub fn solve_optimal_counted(model: &CostModel, p: &TransitionMatrix, budget: f64) -> Result<(PolicyTable, u64)> {
    let n = p.n_states();
    let required = required_evaluations(n, model.horizon);
    if !(required <= budget) {
        return Err(TrackError::BudgetExceeded { required, budget });
    }
    let horizon = model.horizon;
    let mut w = ValueTable::zeros(n, horizon);
    let mut seqs = vec![ActionSequence::default(); n * horizon];
    let mut leaves = 0u64;
    for t in (0..horizon).rev() {
        let solved: Vec<(Vec<State>, f64, u64)> = (0..n)
            .into_par_iter()
            .map(|s| {
                let mut search = AnchorSearch::new(model, p, &w, s, t);
                search.descend(0, 0.0);
                (search.best, search.best_cost, search.leaves)
            })
            .collect();
        for (s, (best, cost, count)) in solved.into_iter().enumerate() {
            w.set(s, t, cost);
            seqs[t * n + s] = ActionSequence::new(best);
            leaves += count;
        }
    }
    let policy = policy_from_sequences(model, p, PolicyFamily::Optimal, seqs)?;
    Ok((policy, leaves))
}

/// Closed-form optimal table when the instance is one of the trivial
/// cases: free under-shooting (`c_l = 0`), free over-shooting (`c_u = 0`),
/// deterministic transitions, i.i.d. rows, or no discounting (`beta = 0`).
/// Returns `None` otherwise.
pub fn special_case_policy(model: &CostModel, p: &TransitionMatrix) -> Option<PolicyTable> {
    let n = p.n_states();
    let horizon = model.horizon;
    let build = |f: &dyn Fn(State, usize) -> Vec<State>| -> Option<PolicyTable> {
        let seqs = (0..horizon)
            .flat_map(|t| (0..n).map(move |s| (s, t)))
            .map(|(s, t)| ActionSequence::new(f(s, t)))
            .collect();
        policy_from_sequences(model, p, PolicyFamily::Optimal, seqs).ok()
    };

    if model.c_l == 0.0 {
        return build(&|_, t| vec![0; horizon - t]);
    }
    if model.c_u == 0.0 {
        return build(&|_, t| vec![p.max_state(); horizon - t]);
    }
    if let Some(next) = p.deterministic_successors() {
        return build(&|s, t| {
            let mut state = s;
            (0..horizon - t)
                .map(|_| {
                    state = next[state];
                    state
                })
                .collect()
        });
    }
    let h_m = myopic_threshold_or_zero(model);
    if p.has_identical_rows() {
        let r = percentile_index(p.row(0), h_m).unwrap_or(p.max_state());
        return build(&|_, t| vec![r; horizon - t]);
    }
    if model.beta == 0.0 {
        let myopic = myopic_policy(model, p).ok()?;
        let seqs = myopic.sequences().map(|(_, s)| s.clone()).collect();
        return policy_from_sequences(model, p, PolicyFamily::Optimal, seqs).ok();
    }
    None
}
