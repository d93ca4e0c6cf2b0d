//! Domain types shared by every solver: the cost model, the transition
//! matrix, beliefs, action sequences and anchor-indexed policy tables, plus
//! the immediate cost functions and the myopic decision rule.
//!
//! States are the ordered integers `0..=M`. An action is also a state: the
//! decision-maker's guess of the hidden value. Guessing above the true state
//! costs `c_u` per unit and reveals the state; guessing at or below it costs
//! `c_l` per unit and only reveals that the state is at least the guess.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TrackError};

/// A value of the hidden chain or an action, in `0..=M`.
pub type State = usize;

/// Tolerance for probability vectors summing to one.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Cost coefficients, discount and horizon of a tracking problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Over-utilization cost per unit (action above the state).
    pub c_u: f64,
    /// Under-utilization cost per unit (action at or below the state).
    pub c_l: f64,
    pub beta: f64,
    /// Number of decision steps `T`.
    pub horizon: usize,
}

impl CostModel {
    /// Builds a model; at least one of the cost coefficients must be positive.
    pub fn new(c_u: f64, c_l: f64, beta: f64, horizon: usize) -> Result<Self> {
        let model = Self::checked(c_u, c_l, beta, horizon)?;
        if model.is_degenerate() {
            return Err(TrackError::DegenerateModel);
        }
        Ok(model)
    }

    /// Builds the degenerate model where every action is free.
    pub fn zero_cost(beta: f64, horizon: usize) -> Result<Self> {
        Self::checked(0.0, 0.0, beta, horizon)
    }

    fn checked(c_u: f64, c_l: f64, beta: f64, horizon: usize) -> Result<Self> {
        if !(c_u >= 0.0 && c_u.is_finite()) {
            return Err(TrackError::InvalidModel(format!("c_u = {c_u} must be finite and >= 0")));
        }
        if !(c_l >= 0.0 && c_l.is_finite()) {
            return Err(TrackError::InvalidModel(format!("c_l = {c_l} must be finite and >= 0")));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(TrackError::InvalidModel(format!("beta = {beta} must lie in [0, 1]")));
        }
        if horizon == 0 {
            return Err(TrackError::InvalidModel("horizon must be at least 1".into()));
        }
        Ok(Self { c_u, c_l, beta, horizon })
    }

    pub fn is_degenerate(&self) -> bool {
        self.c_u == 0.0 && self.c_l == 0.0
    }

    /// The myopic percentile `c_l / (c_l + c_u)`.
    pub fn myopic_threshold(&self) -> Result<f64> {
        if self.is_degenerate() {
            return Err(TrackError::DegenerateModel);
        }
        Ok(self.c_l / (self.c_l + self.c_u))
    }

    /// `beta^k`, with `0^0 = 1`.
    #[inline]
    pub fn discount(&self, k: usize) -> f64 {
        self.beta.powi(k as i32)
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::checked(self.c_u, self.c_l, self.beta, horizon)
    }
}

/// Row-stochastic matrix over the ordered states `0..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Validates squareness, entry range and row sums (within `1e-9`).
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(TrackError::InvalidMatrix(format!(
                "matrix must have at least 2 states, got {n}"
            )));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(TrackError::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(TrackError::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {p} is outside [0, 1]"
                    )));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOLERANCE {
                return Err(TrackError::InvalidMatrix(format!("row {i} sums to {sum}, expected 1")));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    /// Number of states, `M + 1`.
    #[inline]
    pub fn n_states(&self) -> usize {
        self.n
    }

    /// Largest state `M`.
    #[inline]
    pub fn max_state(&self) -> State {
        self.n - 1
    }

    #[inline]
    pub fn row(&self, i: State) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, i: State, j: State) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// `out = v * P` for a row vector `v`.
    pub fn propagate_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += vi * p;
            }
        }
    }

    pub fn propagate(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.propagate_into(v, &mut out);
        out
    }

    /// For a matrix whose rows are all unit vectors, the successor of each state.
    pub fn deterministic_successors(&self) -> Option<Vec<State>> {
        (0..self.n)
            .map(|i| {
                let row = self.row(i);
                let hot = row.iter().position(|&p| p == 1.0)?;
                row.iter()
                    .enumerate()
                    .all(|(j, &p)| j == hot || p == 0.0)
                    .then_some(hot)
            })
            .collect()
    }

    /// True when every row is identical (i.i.d. process).
    pub fn has_identical_rows(&self) -> bool {
        let first = self.row(0);
        (1..self.n).all(|i| self.row(i) == first)
    }
}

/// Probability vector over the hidden state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    /// Accepts a nonnegative vector summing to one within `1e-9` and
    /// renormalizes it; anything else is rejected.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(TrackError::InvalidBelief(format!(
                "belief needs at least 2 entries, got {}",
                probs.len()
            )));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(TrackError::InvalidBelief(format!("entry {i} = {p} is negative or not finite")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(TrackError::InvalidBelief(format!("entries sum to {sum}")));
        }
        let probs = if sum == 1.0 { probs } else { probs.into_iter().map(|p| p / sum).collect() };
        Ok(Self { probs })
    }

    /// Normalizes an arbitrary nonnegative vector with positive mass.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(TrackError::InvalidBelief("weights carry no mass".into()));
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    pub fn unit(n_states: usize, state: State) -> Result<Self> {
        if state >= n_states {
            return Err(TrackError::StateOutOfRange { state, max: n_states.saturating_sub(1) });
        }
        let mut probs = vec![0.0; n_states];
        probs[state] = 1.0;
        Self::new(probs)
    }

    pub fn uniform(n_states: usize) -> Result<Self> {
        Self::new(vec![1.0 / n_states as f64; n_states])
    }

    /// `lambda * a + (1 - lambda) * b`.
    pub fn mixture(lambda: f64, a: &Belief, b: &Belief) -> Result<Self> {
        if a.len() != b.len() {
            return Err(TrackError::InvalidBelief("mixing beliefs of different sizes".into()));
        }
        Self::new(a.probs.iter().zip(&b.probs).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect())
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn max_state(&self) -> State {
        self.probs.len() - 1
    }
}

/// Actions taken after an observation; element `tau - 1` is the action
/// `tau` steps after the anchoring observation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionSequence(Vec<State>);

impl ActionSequence {
    pub fn new(actions: Vec<State>) -> Self {
        Self(actions)
    }

    pub fn checked(actions: Vec<State>, max_state: State) -> Result<Self> {
        if let Some(&bad) = actions.iter().find(|&&a| a > max_state) {
            return Err(TrackError::StateOutOfRange { state: bad, max: max_state });
        }
        Ok(Self(actions))
    }

    #[inline]
    pub fn as_slice(&self) -> &[State] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Action `tau` steps after the observation (`tau` is 1-based).
    pub fn at(&self, tau: usize) -> Option<State> {
        tau.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    pub fn into_vec(self) -> Vec<State> {
        self.0
    }
}

impl From<Vec<State>> for ActionSequence {
    fn from(v: Vec<State>) -> Self {
        Self(v)
    }
}

impl fmt::Display for ActionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Last full observation: state `s` seen at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Anchor {
    pub state: State,
    pub time: usize,
}

impl Anchor {
    pub fn new(state: State, time: usize) -> Self {
        Self { state, time }
    }

    pub fn validate(&self, max_state: State, horizon: usize) -> Result<()> {
        if self.state > max_state {
            return Err(TrackError::StateOutOfRange { state: self.state, max: max_state });
        }
        if self.time >= horizon {
            return Err(TrackError::TimeOutOfRange { time: self.time, horizon });
        }
        Ok(())
    }
}

/// Where a policy starts from: a full observation or a prior belief over `B_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObservationAnchor {
    Observed(Anchor),
    InitialBelief(Belief),
}

impl fmt::Display for ObservationAnchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Observed(a) => write!(f, "s0={}", a.state),
            Self::InitialBelief(_) => write!(f, "b0"),
        }
    }
}

/// Policy family a table was produced by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyFamily {
    Optimal,
    Percentile,
    Myopic,
    Frp,
    /// Hand-built or externally supplied sequences.
    Custom,
}

impl PolicyFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::Percentile => "percentile",
            Self::Myopic => "myopic",
            Self::Frp => "frp",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for PolicyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "optimal" | "opt" => Ok(Self::Optimal),
            "percentile" => Ok(Self::Percentile),
            "myopic" => Ok(Self::Myopic),
            "frp" => Ok(Self::Frp),
            "custom" => Ok(Self::Custom),
            other => Err(format!("unknown policy family '{other}'")),
        }
    }
}

/// Per-anchor values `W_t(s)` for `s in 0..=M`, `t in 0..T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    n_states: usize,
    horizon: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn zeros(n_states: usize, horizon: usize) -> Self {
        Self { n_states, horizon, values: vec![0.0; n_states * horizon] }
    }

    #[inline]
    pub fn get(&self, state: State, time: usize) -> f64 {
        self.values[time * self.n_states + state]
    }

    #[inline]
    pub fn set(&mut self, state: State, time: usize, value: f64) {
        self.values[time * self.n_states + state] = value;
    }

    /// The values `W_t(0..=M)` at one time.
    pub fn at_time(&self, time: usize) -> &[f64] {
        &self.values[time * self.n_states..(time + 1) * self.n_states]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Iterates `(anchor, value)` in time-major order.
    pub fn iter(&self) -> impl Iterator<Item = (Anchor, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (Anchor::new(k % self.n_states, k / self.n_states), v))
    }
}

/// One anchor's action sequence and its expected discounted cost-to-go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub actions: ActionSequence,
    pub cost_to_go: f64,
}

/// Sequence used before the first full observation when starting from a belief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialEntry {
    pub belief: Belief,
    pub actions: ActionSequence,
    pub cost: f64,
}

/// Map from every anchor `(s, t)` to the action sequence used until the
/// next full observation, with optional initial-belief phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    family: PolicyFamily,
    n_states: usize,
    horizon: usize,
    /// Time-major: `entries[t * n_states + s]`.
    entries: Vec<PolicyEntry>,
    initial: Option<InitialEntry>,
}

impl PolicyTable {
    /// `entries` is time-major (`entries[t * n_states + s]`); each sequence
    /// must have length `horizon - t` with actions in `0..n_states`.
    pub fn new(
        family: PolicyFamily,
        n_states: usize,
        horizon: usize,
        entries: Vec<PolicyEntry>,
    ) -> Result<Self> {
        if entries.len() != n_states * horizon {
            return Err(TrackError::ShapeMismatch(format!(
                "expected {} entries for {n_states} states x {horizon} times, got {}",
                n_states * horizon,
                entries.len()
            )));
        }
        for (k, e) in entries.iter().enumerate() {
            let t = k / n_states;
            if e.actions.len() != horizon - t {
                return Err(TrackError::LengthMismatch { expected: horizon - t, actual: e.actions.len() });
            }
            if let Some(&bad) = e.actions.as_slice().iter().find(|&&a| a >= n_states) {
                return Err(TrackError::StateOutOfRange { state: bad, max: n_states - 1 });
            }
        }
        Ok(Self { family, n_states, horizon, entries, initial: None })
    }

    pub fn with_initial(mut self, initial: InitialEntry) -> Result<Self> {
        if initial.actions.len() != self.horizon {
            return Err(TrackError::LengthMismatch { expected: self.horizon, actual: initial.actions.len() });
        }
        if initial.belief.len() != self.n_states {
            return Err(TrackError::ShapeMismatch("initial belief size differs from state count".into()));
        }
        self.initial = Some(initial);
        Ok(self)
    }

    pub fn family(&self) -> PolicyFamily {
        self.family
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn entry(&self, state: State, time: usize) -> Result<&PolicyEntry> {
        if state >= self.n_states || time >= self.horizon {
            return Err(TrackError::MissingAnchor { state, time });
        }
        Ok(&self.entries[time * self.n_states + state])
    }

    pub fn sequence(&self, state: State, time: usize) -> Result<&ActionSequence> {
        self.entry(state, time).map(|e| &e.actions)
    }

    pub fn cost(&self, state: State, time: usize) -> Result<f64> {
        self.entry(state, time).map(|e| e.cost_to_go)
    }

    pub fn initial(&self) -> Option<&InitialEntry> {
        self.initial.as_ref()
    }

    /// The cost-to-go table `W_t(s)`.
    pub fn costs(&self) -> ValueTable {
        ValueTable {
            n_states: self.n_states,
            horizon: self.horizon,
            values: self.entries.iter().map(|e| e.cost_to_go).collect(),
        }
    }

    /// Sequences in time-major order.
    pub fn sequences(&self) -> impl Iterator<Item = (Anchor, &ActionSequence)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .map(move |(k, e)| (Anchor::new(k % self.n_states, k / self.n_states), &e.actions))
    }
}

/// `C(B; r)`: `c_u (r - B)` when the action overshoots, `c_l (B - r)` otherwise.
#[inline]
pub fn immediate_cost(model: &CostModel, actual: State, action: State) -> f64 {
    if action > actual {
        model.c_u * (action - actual) as f64
    } else {
        model.c_l * (actual - action) as f64
    }
}

/// Expected immediate cost of `action` under a belief.
pub fn expected_immediate_cost(model: &CostModel, belief: &Belief, action: State) -> Result<f64> {
    if action > belief.max_state() {
        return Err(TrackError::StateOutOfRange { state: action, max: belief.max_state() });
    }
    Ok(weighted_cost(model, belief.probs(), action))
}

/// Expected immediate cost against unnormalized state weights.
#[inline]
pub(crate) fn weighted_cost(model: &CostModel, weights: &[f64], action: State) -> f64 {
    let (below, above) = weights.split_at(action);
    let over: f64 = below.iter().enumerate().map(|(i, w)| w * (action - i) as f64).sum();
    let under: f64 = above.iter().enumerate().map(|(k, w)| w * k as f64).sum();
    model.c_u * over + model.c_l * under
}

/// Smallest state whose normalized cumulative mass reaches `h`.
///
/// Cumulative sums run left to right and are divided by the total mass
/// accumulated the same way, so the ratio is exactly 1 at the last
/// positive-mass state. Returns `None` when the weights carry no mass.
pub(crate) fn percentile_index(weights: &[f64], h: f64) -> Option<State> {
    let total = weights.iter().fold(0.0, |acc, w| acc + w);
    if !(total > 0.0) {
        return None;
    }
    let mut cumulative = 0.0;
    for (r, w) in weights.iter().enumerate() {
        cumulative += w;
        if cumulative / total >= h {
            return Some(r);
        }
    }
    Some(weights.len() - 1)
}

/// The myopic action `min { r : sum_{i<=r} b(i) >= c_l / (c_l + c_u) }`.
pub fn myopic_action(model: &CostModel, belief: &Belief) -> Result<State> {
    let h = model.myopic_threshold()?;
    Ok(percentile_index(belief.probs(), h).unwrap_or(belief.max_state()))
}

/// Myopic threshold, falling back to 0 for the zero-cost model where every
/// action is free.
pub(crate) fn myopic_threshold_or_zero(model: &CostModel) -> f64 {
    model.myopic_threshold().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_costs() -> CostModel {
        CostModel::new(1.0, 1.0, 1.0, 3).unwrap()
    }

    #[test]
    fn immediate_cost_sample_path_values() {
        let under = CostModel::new(0.0, 1.0, 1.0, 10).unwrap();
        assert_eq!(immediate_cost(&under, 5, 3), 2.0);
        assert_eq!(immediate_cost(&under, 3, 3), 0.0);
        let over = CostModel::new(1.0, 0.0, 1.0, 10).unwrap();
        assert_eq!(immediate_cost(&over, 5, 6), 1.0);
    }

    #[test]
    fn expected_cost_two_sums() {
        let b = Belief::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert_eq!(expected_immediate_cost(&unit_costs(), &b, 1).unwrap(), 0.5);
        let k = Belief::unit(4, 2).unwrap();
        assert_eq!(expected_immediate_cost(&unit_costs(), &k, 2).unwrap(), 0.0);
        assert!(expected_immediate_cost(&unit_costs(), &k, 4).is_err());
    }

    #[test]
    fn expected_cost_matches_brute_force_at_top_action() {
        let model = CostModel::new(0.0, 1.0, 1.0, 3).unwrap();
        let b = Belief::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let brute: f64 = (0..4).map(|i| b.probs()[i] * immediate_cost(&model, i, 3)).sum();
        assert!((expected_immediate_cost(&model, &b, 3).unwrap() - brute).abs() < 1e-15);
        assert_eq!(brute, 0.0);
        let b = Belief::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let brute: f64 = (0..4).map(|i| b.probs()[i] * immediate_cost(&model, i, 1)).sum();
        assert!((expected_immediate_cost(&model, &b, 1).unwrap() - brute).abs() < 1e-15);
    }

    #[test]
    fn myopic_threshold_and_rule() {
        let m = CostModel::new(5.0, 1.0, 1.0, 7).unwrap();
        assert!((m.myopic_threshold().unwrap() - 0.1667).abs() < 5e-5);
        for k in 0..5 {
            assert_eq!(myopic_action(&m, &Belief::unit(5, k).unwrap()).unwrap(), k);
        }
        let b = Belief::new(vec![0.8, 0.2, 0.0]).unwrap();
        assert_eq!(myopic_action(&unit_costs(), &b).unwrap(), 0);
        let z = CostModel::zero_cost(1.0, 3).unwrap();
        assert_eq!(myopic_action(&z, &b), Err(TrackError::DegenerateModel));
    }

    #[test]
    fn model_validation() {
        assert_eq!(CostModel::new(0.0, 0.0, 1.0, 3), Err(TrackError::DegenerateModel));
        assert!(CostModel::new(1.0, 1.0, 1.5, 3).is_err());
        assert!(CostModel::new(-1.0, 1.0, 0.5, 3).is_err());
        assert!(CostModel::new(1.0, 1.0, 0.5, 0).is_err());
        assert!(CostModel::zero_cost(0.5, 3).unwrap().is_degenerate());
    }

    #[test]
    fn belief_normalizes_within_tolerance_only() {
        let b = Belief::new(vec![0.5, 0.5 + 5e-10]).unwrap();
        assert!((b.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(Belief::new(vec![0.5, 0.49]).is_err());
        assert!(Belief::new(vec![1.2, -0.2]).is_err());
    }

    #[test]
    fn matrix_validation_and_structure() {
        assert!(TransitionMatrix::new(vec![vec![1.0]]).is_err());
        assert!(TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.49]]).is_err());
        assert!(TransitionMatrix::new(vec![vec![0.5, 0.5, 0.0], vec![0.5, 0.5]]).is_err());
        let p = TransitionMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(p.deterministic_successors(), Some(vec![1, 0]));
        assert!(!p.has_identical_rows());
        let q = TransitionMatrix::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(q.has_identical_rows());
        assert_eq!(q.deterministic_successors(), None);
        assert_eq!(p.propagate(&[0.25, 0.75]), vec![0.75, 0.25]);
    }

    #[test]
    fn percentile_index_hits_last_positive_state_at_one() {
        assert_eq!(percentile_index(&[0.1, 0.7, 0.2, 0.0], 1.0), Some(2));
        assert_eq!(percentile_index(&[0.1, 0.7, 0.2, 0.0], 0.0), Some(0));
        assert_eq!(percentile_index(&[0.0, 0.0], 0.5), None);
    }

    fn belief_strategy(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 2..=max_len).prop_filter_map("positive mass", |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-6).then(|| w.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn expected_cost_is_unimodal_around_myopic(
            w in belief_strategy(12), c_u in 0.01f64..10.0, c_l in 0.01f64..10.0,
        ) {
            let model = CostModel::new(c_u, c_l, 1.0, 1).unwrap();
            let b = Belief::new(w).unwrap();
            let r_star = myopic_action(&model, &b).unwrap();
            let costs: Vec<f64> =
                (0..b.len()).map(|r| expected_immediate_cost(&model, &b, r).unwrap()).collect();
            let slack = 1e-12 * (1.0 + costs.iter().cloned().fold(0.0, f64::max));
            for r in 0..r_star {
                prop_assert!(costs[r + 1] <= costs[r] + slack);
            }
            for r in r_star..b.len() - 1 {
                prop_assert!(costs[r + 1] + slack >= costs[r]);
            }
        }

        #[test]
        fn expected_cost_is_affine_in_belief(
            w1 in belief_strategy(6), seed in 0u64..1000, lambda in 0.0f64..=1.0,
            c_u in 0.0f64..5.0, c_l in 0.01f64..5.0,
        ) {
            let n = w1.len();
            let w2: Vec<f64> = (0..n).map(|i| ((seed as usize + 7 * i) % 11) as f64 + 1.0).collect();
            let b1 = Belief::new(w1).unwrap();
            let b2 = Belief::from_weights(&w2).unwrap();
            let mix = Belief::mixture(lambda, &b1, &b2).unwrap();
            let model = CostModel::new(c_u, c_l, 1.0, 1).unwrap();
            for r in 0..n {
                let lhs = expected_immediate_cost(&model, &mix, r).unwrap();
                let rhs = lambda * expected_immediate_cost(&model, &b1, r).unwrap()
                    + (1.0 - lambda) * expected_immediate_cost(&model, &b2, r).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            }
        }
    }
}
