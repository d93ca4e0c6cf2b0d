//! Brute-force oracles shared by the integration suites. None of them touch
//! the library's censored-vector code: they enumerate state paths or
//! recurse on unnormalized joint weights directly.
#![allow(dead_code)]

use markov_track::{
    immediate_cost, ActionSequence, Belief, CostModel, PolicyFamily, PolicyTable, State, TransitionMatrix,
};
use rand::rngs::StdRng;
use rand::Rng;

pub fn mixing3() -> TransitionMatrix {
    TransitionMatrix::new(vec![vec![0.8, 0.2, 0.0], vec![0.1, 0.6, 0.3], vec![0.0, 0.4, 0.6]]).unwrap()
}

pub fn sticky3() -> TransitionMatrix {
    TransitionMatrix::new(vec![vec![0.9, 0.1, 0.0], vec![0.1, 0.8, 0.1], vec![0.0, 0.1, 0.9]]).unwrap()
}

/// Expected discounted cost of `policy` from anchor `(s0, t0)` by walking
/// every state path and replaying the censoring/renewal dynamics.
pub fn enumerate_anchor(model: &CostModel, p: &TransitionMatrix, policy: &PolicyTable, s0: State, t0: usize) -> f64 {
    let seq = policy.sequence(s0, t0).unwrap().as_slice().to_vec();
    let first = p.row(s0).to_vec();
    enumerate_from(model, p, policy, t0, &first, seq)
}

/// Same as [`enumerate_anchor`] for an unobserved `B_0 ~ b0` played with `init`.
pub fn enumerate_belief(
    model: &CostModel,
    p: &TransitionMatrix,
    policy: &PolicyTable,
    b0: &[f64],
    init: &[State],
) -> f64 {
    let first: Vec<f64> = (0..p.n_states()).map(|j| (0..b0.len()).map(|i| b0[i] * p.get(i, j)).sum()).collect();
    enumerate_from(model, p, policy, 0, &first, init.to_vec())
}

fn enumerate_from(
    model: &CostModel,
    p: &TransitionMatrix,
    policy: &PolicyTable,
    t0: usize,
    first: &[f64],
    seq: Vec<State>,
) -> f64 {
    let mut total = 0.0;
    for (j, &pj) in first.iter().enumerate() {
        if pj > 0.0 {
            total += step(model, p, policy, t0, t0 + 1, j, &seq, t0, pj);
        }
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn step(
    model: &CostModel,
    p: &TransitionMatrix,
    policy: &PolicyTable,
    t0: usize,
    t: usize,
    state: State,
    seq: &[State],
    seq_start: usize,
    prob: f64,
) -> f64 {
    let action = seq[t - seq_start - 1];
    let mut cost = prob * model.beta.powi((t - t0 - 1) as i32) * immediate_cost(model, state, action);
    if t == model.horizon {
        return cost;
    }
    let (next_seq, next_start) = if action > state {
        (policy.sequence(state, t).unwrap().as_slice(), t)
    } else {
        (seq, seq_start)
    };
    for k in 0..p.n_states() {
        let q = p.get(state, k);
        if q > 0.0 {
            cost += step(model, p, policy, t0, t + 1, k, next_seq, next_start, prob * q);
        }
    }
    cost
}

/// Optimal expected cost of decisions `t..=T` given joint weights `w` over
/// `B_t`, recursing on every action and every observation outcome without
/// normalizing or memoizing.
pub fn belief_oracle(model: &CostModel, p: &TransitionMatrix, w: &[f64], t: usize) -> f64 {
    let n = w.len();
    if w.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for r in 0..n {
        let mut v: f64 = w.iter().enumerate().map(|(j, &x)| x * immediate_cost(model, j, r)).sum();
        if t < model.horizon {
            let mut future = 0.0;
            for i in 0..r {
                if w[i] > 0.0 {
                    let next: Vec<f64> = p.row(i).iter().map(|x| x * w[i]).collect();
                    future += belief_oracle(model, p, &next, t + 1);
                }
            }
            let next: Vec<f64> = (0..n).map(|k| (r..n).map(|i| w[i] * p.get(i, k)).sum()).collect();
            future += belief_oracle(model, p, &next, t + 1);
            v += model.beta * future;
        }
        best = best.min(v);
    }
    best
}

/// Distribution of `B_{t+tau}` given `B_t = s` and `B_{t+k} >= floor[k-1]`
/// for `k < tau`, as unnormalized path weights.
pub fn censored_by_paths(p: &TransitionMatrix, s: State, floor: &[State], tau: usize) -> Vec<f64> {
    let n = p.n_states();
    let mut out = vec![0.0; n];
    fn walk(p: &TransitionMatrix, state: State, depth: usize, tau: usize, floor: &[State], prob: f64, out: &mut [f64]) {
        for k in 0..p.n_states() {
            let q = prob * p.get(state, k);
            if q == 0.0 {
                continue;
            }
            if depth == tau {
                out[k] += q;
            } else if k >= floor[depth - 1] {
                walk(p, k, depth + 1, tau, floor, q, out);
            }
        }
    }
    walk(p, s, 1, tau, floor, 1.0, &mut out);
    out
}

/// Percentile sequence at anchor `(s, t)` rebuilt from path-enumerated
/// censored distributions. Zero surviving mass fills with `M`.
pub fn percentile_by_paths(p: &TransitionMatrix, s: State, len: usize, h: f64) -> Vec<State> {
    let mut actions = Vec::new();
    for tau in 1..=len {
        let u = censored_by_paths(p, s, &actions, tau);
        let total: f64 = u.iter().sum();
        if total <= 0.0 {
            actions.resize(len, p.max_state());
            break;
        }
        let mut acc = 0.0;
        let mut pick = p.max_state();
        for (r, x) in u.iter().enumerate() {
            acc += x;
            if acc / total >= h {
                pick = r;
                break;
            }
        }
        actions.push(pick);
    }
    actions
}

pub fn random_matrix(rng: &mut StdRng, n: usize) -> TransitionMatrix {
    let rows = (0..n)
        .map(|_| {
            let w: Vec<f64> = (0..n)
                .map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random::<f64>() })
                .collect();
            let w = if w.iter().all(|&x| x == 0.0) { vec![1.0; n] } else { w };
            let total: f64 = w.iter().sum();
            w.iter().map(|x| x / total).collect()
        })
        .collect();
    TransitionMatrix::new(rows).unwrap()
}

pub fn random_belief(rng: &mut StdRng, n: usize) -> Belief {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    Belief::from_weights(&w).unwrap()
}

pub fn random_policy(rng: &mut StdRng, model: &CostModel, p: &TransitionMatrix) -> PolicyTable {
    let n = p.n_states();
    let seqs = (0..model.horizon)
        .flat_map(|t| (0..n).map(move |_| t))
        .map(|t| ActionSequence::new((0..model.horizon - t).map(|_| rng.random_range(0..n)).collect()))
        .collect();
    markov_track::policy_from_sequences(model, p, PolicyFamily::Custom, seqs).unwrap()
}

/// Cost settings swept by the oracle suites: `(c_u, c_l, beta)`.
pub const COST_GRID: [(f64, f64, f64); 6] =
    [(1.0, 1.0, 1.0), (5.0, 1.0, 1.0), (1.0, 3.0, 0.9), (2.0, 1.0, 0.5), (1.0, 0.0, 1.0), (0.0, 2.0, 0.7)];
