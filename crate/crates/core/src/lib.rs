//! Tracking a finite Markov chain under asymmetric over/under-shoot costs
//! when overshooting reveals the state and undershooting only bounds it.
//!
//! The library covers exact policy evaluation via censored (taboo)
//! probabilities, an exhaustive optimal solver for small horizons,
//! percentile threshold policies, a full-observation lower bound, a
//! belief-space dynamic program and a Monte Carlo simulator.

pub mod belief_dp;
pub mod bounds;
pub mod error;
pub mod matrices;
pub mod model;
pub mod optimal;
pub mod percentile;
pub mod policy_eval;
pub mod simulator;
pub mod taboo;

/// Relative tolerance under which two costs count as tied. Ties go to the
/// earliest candidate in search order.
pub const TIE_TOLERANCE: f64 = 1e-12;

pub use belief_dp::{belief_update, belief_value, BeliefSolver, Observation};
pub use bounds::{cost_ratio, fo_initial_belief, fo_lower_bound, gap_report, GapReport, ZERO_COST};
pub use error::{Result, TrackError};
pub use matrices::{banded_20, format_matrix, load_matrix, parse_matrix, tridiagonal_eps};
pub use model::{
    expected_immediate_cost, immediate_cost, myopic_action, ActionSequence, Anchor, Belief, CostModel,
    InitialEntry, ObservationAnchor, PolicyEntry, PolicyFamily, PolicyTable, State, TransitionMatrix, ValueTable,
};
pub use optimal::{required_evaluations, solve_optimal, solve_optimal_counted, special_case_policy, DEFAULT_BUDGET};
pub use percentile::{
    best_initial_threshold, evaluate_percentile, frp_with_initial_belief, initial_sequence_from_threshold,
    myopic_policy, resolution_set, sequence_from_threshold, solve_frp, solve_frp_counted, InitialFrp,
    ThresholdTable, DEFAULT_RESOLUTION,
};
pub use policy_eval::{evaluate_policy, evaluate_with_initial_belief, policy_from_sequences};
pub use simulator::{simulate, write_traces, ObservationKind, SamplePath, SimReport, Step};
pub use taboo::{gamma_cost, taboo_prob, taboo_vector, TabooQuery};
