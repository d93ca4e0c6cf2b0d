//! Taboo (censored-path) transition probabilities and the censored
//! cost-to-go accumulated between two full observations.
//!
//! After a full observation of state `s` the chain is only followed along
//! paths on which every action so far was at or below the state (otherwise
//! the state would have been revealed). The vector
//!
//! ```text
//! u_1 = P[s, .]
//! u_{tau+1}(j) = sum_{i >= a_tau} u_tau(i) P[i, j]
//! ```
//!
//! holds the taboo probabilities of reaching each state at step `tau`
//! without an intermediate full observation. Entries of `u_tau` below
//! `a_tau` are exactly the probabilities of the next full observation
//! happening at step `tau` in that state.

use crate::error::{Result, TrackError};
use crate::model::{weighted_cost, ActionSequence, Anchor, CostModel, State, TransitionMatrix, ValueTable};

/// Probability of going from `origin` to `destination` in `steps` steps
/// without dropping below the floor at any intermediate step.
#[derive(Debug, Clone, Copy)]
pub struct TabooQuery<'a> {
    pub origin: State,
    pub destination: State,
    pub steps: usize,
    /// Actions `a_1, a_2, ...`; step `n < steps` survives only in states `>= a_n`.
    pub floor: &'a [State],
}

/// Unnormalized survivor vector propagated one step at a time.
#[derive(Debug, Clone)]
pub(crate) struct Censored<'a> {
    p: &'a TransitionMatrix,
    current: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Censored<'a> {
    /// Starts from a full observation of `state`: `u_1 = P[state, .]`.
    pub(crate) fn from_state(p: &'a TransitionMatrix, state: State) -> Self {
        Self { p, current: p.row(state).to_vec(), scratch: vec![0.0; p.n_states()] }
    }

    /// Starts from a distribution over `B_0`: `u_1 = b0 P`.
    pub(crate) fn from_distribution(p: &'a TransitionMatrix, b0: &[f64]) -> Self {
        Self { p, current: p.propagate(b0), scratch: vec![0.0; p.n_states()] }
    }

    #[inline]
    pub(crate) fn vector(&self) -> &[f64] {
        &self.current
    }

    /// Drops the mass below `floor` and moves one step forward.
    /// Returns `false` once no mass survives.
    pub(crate) fn advance(&mut self, floor: State) -> bool {
        self.current[..floor].iter_mut().for_each(|x| *x = 0.0);
        if self.current.iter().all(|&x| x == 0.0) {
            return false;
        }
        self.p.propagate_into(&self.current, &mut self.scratch);
        std::mem::swap(&mut self.current, &mut self.scratch);
        true
    }
}

/// Survivor vector `u_tau` for an origin state and floor.
pub fn taboo_vector(p: &TransitionMatrix, origin: State, floor: &[State], steps: usize) -> Result<Vec<f64>> {
    let max = p.max_state();
    if origin > max {
        return Err(TrackError::StateOutOfRange { state: origin, max });
    }
    if steps == 0 {
        return Err(TrackError::InvalidModel("taboo query needs at least one step".into()));
    }
    if steps > floor.len().max(1) {
        return Err(TrackError::StepsExceedFloor { steps, floor_len: floor.len() });
    }
    if let Some(&bad) = floor.iter().find(|&&a| a > max) {
        return Err(TrackError::StateOutOfRange { state: bad, max });
    }
    let mut walk = Censored::from_state(p, origin);
    for &a in &floor[..steps - 1] {
        if !walk.advance(a) {
            return Ok(vec![0.0; p.n_states()]);
        }
    }
    Ok(walk.current)
}

/// Taboo probability of the query; `steps = 1` is the plain transition
/// probability.
pub fn taboo_prob(p: &TransitionMatrix, q: &TabooQuery<'_>) -> Result<f64> {
    if q.destination > p.max_state() {
        return Err(TrackError::StateOutOfRange { state: q.destination, max: p.max_state() });
    }
    taboo_vector(p, q.origin, q.floor, q.steps).map(|v| v[q.destination])
}

/// Costs accumulated by one action sequence from its anchor until the next
/// full observation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct SegmentCost {
    /// Discounted immediate costs paid before the next full observation.
    pub gamma: f64,
    /// Discounted continuation values at the next full observation.
    pub renewal: f64,
}

impl SegmentCost {
    pub(crate) fn total(&self) -> f64 {
        self.gamma + self.renewal
    }
}

/// Walks `actions` from the survivor vector `walk`, adding immediate costs
/// and (when `later` is given) the continuation values `W_{start + tau}(i)`
/// for full observations at steps `tau < actions.len()`.
pub(crate) fn segment_cost(
    model: &CostModel,
    mut walk: Censored<'_>,
    actions: &[State],
    later: Option<(&ValueTable, usize)>,
) -> SegmentCost {
    let mut out = SegmentCost::default();
    let len = actions.len();
    for (k, &a) in actions.iter().enumerate() {
        let tau = k + 1;
        let u = walk.vector();
        out.gamma += model.discount(tau - 1) * weighted_cost(model, u, a);
        if tau < len {
            if let Some((table, start)) = later {
                let w = table.at_time(start + tau);
                let observed: f64 = u[..a].iter().zip(w).map(|(x, w)| x * w).sum();
                out.renewal += model.discount(tau) * observed;
            }
            if !walk.advance(a) {
                break;
            }
        }
    }
    out
}

/// Expected discounted cost paid between a full observation at `anchor`
/// and the next one, for the given action sequence of length `T - t`.
pub fn gamma_cost(model: &CostModel, p: &TransitionMatrix, anchor: Anchor, seq: &ActionSequence) -> Result<f64> {
    anchor.validate(p.max_state(), model.horizon)?;
    let expected = model.horizon - anchor.time;
    if seq.len() != expected {
        return Err(TrackError::LengthMismatch { expected, actual: seq.len() });
    }
    if let Some(&bad) = seq.as_slice().iter().find(|&&a| a > p.max_state()) {
        return Err(TrackError::StateOutOfRange { state: bad, max: p.max_state() });
    }
    Ok(segment_cost(model, Censored::from_state(p, anchor.state), seq.as_slice(), None).gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{expected_immediate_cost, immediate_cost, Belief};
    use proptest::prelude::*;

    fn mixing3() -> TransitionMatrix {
        TransitionMatrix::new(vec![vec![0.8, 0.2, 0.0], vec![0.1, 0.6, 0.3], vec![0.0, 0.4, 0.6]]).unwrap()
    }

    fn mat_pow_entry(p: &TransitionMatrix, s1: usize, s2: usize, k: usize) -> f64 {
        let mut v = vec![0.0; p.n_states()];
        v[s1] = 1.0;
        for _ in 0..k {
            v = p.propagate(&v);
        }
        v[s2]
    }

    // Literal nested sum over intermediate states j_1..j_{tau-1} with j_n >= a_n.
    fn nested_sum(p: &TransitionMatrix, s1: usize, s2: usize, floor: &[usize], tau: usize) -> f64 {
        fn rec(p: &TransitionMatrix, prev: usize, n: usize, tau: usize, floor: &[usize], s2: usize) -> f64 {
            if n == tau {
                return p.get(prev, s2);
            }
            (floor[n - 1]..p.n_states()).map(|j| p.get(prev, j) * rec(p, j, n + 1, tau, floor, s2)).sum()
        }
        rec(p, s1, 1, tau, floor, s2)
    }

    #[test]
    fn one_step_is_transition_probability() {
        let p = mixing3();
        for s1 in 0..3 {
            for s2 in 0..3 {
                let q = TabooQuery { origin: s1, destination: s2, steps: 1, floor: &[2] };
                assert_eq!(taboo_prob(&p, &q).unwrap(), p.get(s1, s2));
            }
        }
    }

    #[test]
    fn zero_floor_is_matrix_power() {
        let p = mixing3();
        let floor = [0; 5];
        for tau in 1..=5 {
            for s2 in 0..3 {
                let q = TabooQuery { origin: 1, destination: s2, steps: tau, floor: &floor };
                assert!((taboo_prob(&p, &q).unwrap() - mat_pow_entry(&p, 1, s2, tau)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn floor_two_from_state_zero_is_blocked() {
        let p = mixing3();
        for s2 in 0..3 {
            let q = TabooQuery { origin: 0, destination: s2, steps: 2, floor: &[2, 0] };
            assert_eq!(taboo_prob(&p, &q).unwrap(), 0.0);
        }
    }

    #[test]
    fn steps_beyond_floor_rejected() {
        let q = TabooQuery { origin: 0, destination: 0, steps: 3, floor: &[0, 0] };
        assert_eq!(taboo_prob(&mixing3(), &q), Err(TrackError::StepsExceedFloor { steps: 3, floor_len: 2 }));
    }

    #[test]
    fn gamma_single_step_is_expected_cost() {
        let p = mixing3();
        let model = CostModel::new(2.0, 1.0, 0.7, 4).unwrap();
        for s in 0..3 {
            for r in 0..3 {
                let g = gamma_cost(&model, &p, Anchor::new(s, 3), &ActionSequence::new(vec![r])).unwrap();
                let b = Belief::new(p.row(s).to_vec()).unwrap();
                assert!((g - expected_immediate_cost(&model, &b, r).unwrap()).abs() < 1e-15);
            }
        }
        let z = CostModel::zero_cost(1.0, 4).unwrap();
        assert_eq!(gamma_cost(&z, &p, Anchor::new(1, 0), &ActionSequence::new(vec![2, 0, 1, 2])).unwrap(), 0.0);
        assert!(gamma_cost(&model, &p, Anchor::new(1, 0), &ActionSequence::new(vec![2])).is_err());
    }

    #[test]
    fn gamma_two_steps_matches_path_enumeration() {
        // All 9 paths (B_1, B_2) from s = 0 under seq (0, 0): action 0 never
        // overshoots, so both steps are always paid.
        let p = mixing3();
        let model = CostModel::new(1.0, 1.0, 1.0, 2).unwrap();
        let mut brute = 0.0;
        for b1 in 0..3 {
            for b2 in 0..3 {
                let prob = p.get(0, b1) * p.get(b1, b2);
                brute += prob * (immediate_cost(&model, b1, 0) + immediate_cost(&model, b2, 0));
            }
        }
        let g = gamma_cost(&model, &p, Anchor::new(0, 0), &ActionSequence::new(vec![0, 0])).unwrap();
        assert!((g - brute).abs() < 1e-14, "{g} vs {brute}");
    }

    #[test]
    fn censored_vector_equals_nested_sum_exhaustively() {
        let mats = [
            mixing3(),
            TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap(),
            TransitionMatrix::new(vec![
                vec![0.1, 0.2, 0.3, 0.4],
                vec![0.4, 0.3, 0.2, 0.1],
                vec![0.25, 0.25, 0.25, 0.25],
                vec![0.0, 0.5, 0.0, 0.5],
            ])
            .unwrap(),
        ];
        for p in &mats {
            let n = p.n_states();
            for tau in 1..=4usize {
                let total = n.pow(tau as u32);
                for code in 0..total {
                    let floor: Vec<usize> = (0..tau).map(|k| (code / n.pow(k as u32)) % n).collect();
                    for s1 in 0..n {
                        let v = taboo_vector(p, s1, &floor, tau).unwrap();
                        for s2 in 0..n {
                            assert!((v[s2] - nested_sum(p, s1, s2, &floor, tau)).abs() < 1e-10);
                        }
                    }
                }
            }
        }
    }

    fn random_matrix(n: usize, seeds: &[u32]) -> TransitionMatrix {
        let rows = (0..n)
            .map(|i| {
                let w: Vec<f64> = (0..n).map(|j| (seeds[(i * n + j) % seeds.len()] % 5) as f64).collect();
                let s: f64 = w.iter().sum();
                if s == 0.0 {
                    (0..n).map(|j| if j == i { 1.0 } else { 0.0 }).collect()
                } else {
                    w.iter().map(|x| x / s).collect()
                }
            })
            .collect();
        TransitionMatrix::new(rows).unwrap()
    }

    proptest! {
        #[test]
        fn mass_bounded_and_floor_monotone(
            n in 2usize..5, seeds in prop::collection::vec(0u32..100, 25),
            floor_seed in prop::collection::vec(0usize..5, 6), tau in 1usize..6,
            origin in 0usize..5, bump in 0usize..5,
        ) {
            let p = random_matrix(n, &seeds);
            let origin = origin % n;
            let floor: Vec<usize> = floor_seed.iter().map(|a| a % n).collect();
            let v = taboo_vector(&p, origin, &floor, tau).unwrap();
            prop_assert!(v.iter().sum::<f64>() <= 1.0 + 1e-9);
            let zero = vec![0; 6];
            let z = taboo_vector(&p, origin, &zero, tau).unwrap();
            prop_assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let mut raised = floor.clone();
            let idx = bump % raised.len();
            raised[idx] = (raised[idx] + 1).min(n - 1);
            let w = taboo_vector(&p, origin, &raised, tau).unwrap();
            for (a, b) in w.iter().zip(&v) {
                prop_assert!(*a <= *b + 1e-12);
            }
        }
    }
}
