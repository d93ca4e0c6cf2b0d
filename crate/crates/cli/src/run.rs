//! Subcommand implementations.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use markov_track::{
    belief_value, best_initial_threshold, cost_ratio, evaluate_percentile, fo_initial_belief, fo_lower_bound,
    frp_with_initial_belief, myopic_policy, required_evaluations, simulate, solve_frp, solve_optimal, write_traces,
    Belief, CostModel, InitialEntry, ObservationAnchor, PolicyFamily, PolicyTable, ThresholdTable, TrackError,
    TransitionMatrix,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, MatrixSpec, SweepParam};

/// Raised when the exhaustive solver would exceed its budget.
#[derive(Debug)]
pub struct BudgetRefused {
    pub required: f64,
    pub budget: f64,
}

impl std::fmt::Display for BudgetRefused {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "optimal solver needs {:.3e} sequence evaluations, budget is {:.3e}; lower the horizon or raise --budget",
            self.required, self.budget
        )
    }
}

impl std::error::Error for BudgetRefused {}

pub struct Solved {
    pub policy: PolicyTable,
    pub thresholds: Option<ThresholdTable>,
    /// Cost from the configured start.
    pub start_cost: f64,
}

fn myopic_h(model: &CostModel) -> f64 {
    model.myopic_threshold().unwrap_or(0.0)
}

fn attach_initial(
    model: &CostModel,
    p: &TransitionMatrix,
    policy: PolicyTable,
    b0: &Belief,
    h: f64,
) -> Result<(PolicyTable, f64)> {
    let init = best_initial_threshold(model, p, &policy, b0, &[h])?;
    let cost = init.cost;
    let policy = policy.with_initial(InitialEntry { belief: b0.clone(), actions: init.actions, cost })?;
    Ok((policy, cost))
}

fn anchor_cost(policy: &PolicyTable, start: &ObservationAnchor) -> Result<f64> {
    match start {
        ObservationAnchor::Observed(a) => Ok(policy.cost(a.state, a.time)?),
        ObservationAnchor::InitialBelief(_) => {
            policy.initial().map(|i| i.cost).ok_or_else(|| anyhow!("policy has no initial-belief sequence"))
        }
    }
}

pub fn solve_family(
    config: &Config,
    model: &CostModel,
    p: &TransitionMatrix,
    family: PolicyFamily,
    start: &ObservationAnchor,
) -> Result<Solved> {
    let belief = match start {
        ObservationAnchor::InitialBelief(b) => Some(b),
        ObservationAnchor::Observed(_) => None,
    };
    match family {
        PolicyFamily::Optimal => {
            let policy = solve_optimal(model, p, config.budget).map_err(|e| match e {
                TrackError::BudgetExceeded { required, budget } => anyhow!(BudgetRefused { required, budget }),
                other => other.into(),
            })?;
            let start_cost = match belief {
                None => anchor_cost(&policy, start)?,
                Some(b0) => {
                    let b1 = Belief::new(p.propagate(b0.probs()))?;
                    belief_value(model, p, &b1, 1)?.0
                }
            };
            Ok(Solved { policy, thresholds: None, start_cost })
        }
        PolicyFamily::Frp => {
            let (thresholds, policy) = match belief {
                None => solve_frp(model, p, config.delta)?,
                Some(b0) => {
                    let (t, pol, _) = frp_with_initial_belief(model, p, b0, config.delta)?;
                    (t, pol)
                }
            };
            let start_cost = anchor_cost(&policy, start)?;
            Ok(Solved { policy, thresholds: Some(thresholds), start_cost })
        }
        PolicyFamily::Myopic | PolicyFamily::Percentile => {
            let h = if family == PolicyFamily::Myopic {
                myopic_h(model)
            } else {
                config.threshold.ok_or_else(|| anyhow!("the percentile family needs `threshold` in the config"))?
            };
            let thresholds = ThresholdTable::uniform(p.n_states(), model.horizon, h)?;
            let mut policy =
                if family == PolicyFamily::Myopic { myopic_policy(model, p)? } else { evaluate_percentile(model, p, &thresholds)? };
            let start_cost = match belief {
                None => anchor_cost(&policy, start)?,
                Some(b0) => {
                    let (with_init, cost) = attach_initial(model, p, policy, b0, h)?;
                    policy = with_init;
                    cost
                }
            };
            Ok(Solved { policy, thresholds: Some(thresholds), start_cost })
        }
        PolicyFamily::Custom => bail!("the custom family cannot be solved from a config"),
    }
}

pub fn fo_start_cost(model: &CostModel, p: &TransitionMatrix, start: &ObservationAnchor) -> Result<f64> {
    let fo = fo_lower_bound(model, p);
    Ok(match start {
        ObservationAnchor::Observed(a) => fo.get(a.state, a.time),
        ObservationAnchor::InitialBelief(b0) => fo_initial_belief(model, p, &fo, b0)?,
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_config(out: &Path, config: &Config) -> Result<()> {
    fs::write(out.join("config.toml"), config.to_toml()?).context("writing resolved config")
}

#[derive(Serialize)]
struct SequenceRow {
    policy: String,
    state: String,
    time: usize,
    threshold: Option<f64>,
    cost_to_go: f64,
    actions: String,
}

#[derive(Serialize)]
struct FoRow {
    state: usize,
    time: usize,
    fo_cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub policy: String,
    pub anchor_or_b0: String,
    pub cost: f64,
    pub fo_cost: f64,
    pub ratio: f64,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    config: &'a Config,
    results: &'a [SummaryRow],
}

pub fn run_solve(config: &Config, out: &Path) -> Result<Vec<SummaryRow>> {
    let model = config.model()?;
    let p = config.matrix.build()?;
    let start = config.start.resolve(p.n_states())?;
    if config.families.contains(&PolicyFamily::Optimal) {
        let required = required_evaluations(p.n_states(), model.horizon);
        if required > config.budget {
            return Err(BudgetRefused { required, budget: config.budget }.into());
        }
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_config(out, config)?;

    let fo = fo_lower_bound(&model, &p);
    let fo_cost = fo_start_cost(&model, &p, &start)?;
    let mut sequences = Vec::new();
    let mut summary = Vec::new();
    for &family in &config.families {
        let solved = solve_family(config, &model, &p, family, &start)?;
        let name = family.to_string();
        for (a, seq) in solved.policy.sequences() {
            sequences.push(SequenceRow {
                policy: name.clone(),
                state: a.state.to_string(),
                time: a.time,
                threshold: solved.thresholds.as_ref().map(|t| t.get(a.state, a.time)),
                cost_to_go: solved.policy.cost(a.state, a.time)?,
                actions: seq.to_string(),
            });
        }
        if let Some(init) = solved.policy.initial() {
            sequences.push(SequenceRow {
                policy: name.clone(),
                state: "b0".into(),
                time: 0,
                threshold: solved.thresholds.as_ref().and_then(|t| t.initial.as_ref().map(|i| i.threshold)),
                cost_to_go: init.cost,
                actions: init.actions.to_string(),
            });
        }
        summary.push(SummaryRow {
            policy: name,
            anchor_or_b0: start.to_string(),
            cost: solved.start_cost,
            fo_cost,
            ratio: cost_ratio(solved.start_cost, fo_cost),
        });
    }
    let fo_rows: Vec<FoRow> = fo.iter().map(|(a, v)| FoRow { state: a.state, time: a.time, fo_cost: v }).collect();
    write_csv(&out.join("sequences.csv"), &sequences)?;
    write_csv(&out.join("fo.csv"), &fo_rows)?;
    write_csv(&out.join("summary.csv"), &summary)?;
    let json = serde_json::to_string_pretty(&SolveReport { config, results: &summary })?;
    fs::write(out.join("summary.json"), json + "\n")?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub param_name: String,
    pub param_value: f64,
    pub policy: String,
    pub anchor_or_b0: String,
    pub cost: f64,
    pub fo_cost: f64,
    pub ratio: f64,
}

fn config_at(config: &Config, param: SweepParam, value: f64) -> Result<Config> {
    let mut c = config.clone();
    match param {
        SweepParam::Beta => c.beta = value,
        SweepParam::CU => c.c_u = value,
        SweepParam::Horizon => {
            if value < 1.0 || value.fract() != 0.0 {
                bail!("horizon {value} is not a positive integer");
            }
            c.horizon = value as usize;
        }
        SweepParam::Eps => match &mut c.matrix {
            MatrixSpec::Tridiagonal { eps, .. } => *eps = value,
            _ => bail!("an eps sweep needs a tridiagonal matrix"),
        },
    }
    Ok(c)
}

fn sweep_point(config: &Config, param: SweepParam, value: f64, family: PolicyFamily) -> Result<SweepRow> {
    let c = config_at(config, param, value)?;
    let model = c.model()?;
    let p = c.matrix.build()?;
    let start = c.start.resolve(p.n_states())?;
    let solved = solve_family(&c, &model, &p, family, &start)?;
    let fo_cost = fo_start_cost(&model, &p, &start)?;
    Ok(SweepRow {
        param_name: param.name().into(),
        param_value: value,
        policy: family.to_string(),
        anchor_or_b0: start.to_string(),
        cost: solved.start_cost,
        fo_cost,
        ratio: cost_ratio(solved.start_cost, fo_cost),
    })
}

/// Runs every (value, family) point in parallel. Failed points are kept
/// as rows with NaN costs and reported on stderr.
pub fn run_sweep(config: &Config, out: &Path) -> Result<Vec<SweepRow>> {
    let sweep = config.sweep.as_ref().ok_or_else(|| anyhow!("config has no [sweep] section"))?;
    if sweep.values.is_empty() {
        bail!("sweep has no values");
    }
    let points: Vec<(f64, PolicyFamily)> =
        sweep.values.iter().flat_map(|&v| config.families.iter().map(move |&f| (v, f))).collect();
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(value, family)| {
            sweep_point(config, sweep.param, value, family).unwrap_or_else(|e| {
                eprintln!("warning: {}={value} {family}: {e:#}", sweep.param.name());
                SweepRow {
                    param_name: sweep.param.name().into(),
                    param_value: value,
                    policy: family.to_string(),
                    anchor_or_b0: config.start.label(),
                    cost: f64::NAN,
                    fo_cost: f64::NAN,
                    ratio: f64::NAN,
                }
            })
        })
        .collect();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_config(out, config)?;
    write_csv(&out.join("sweep.csv"), &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateRow {
    pub policy: String,
    pub anchor_or_b0: String,
    pub n_paths: u64,
    pub seed: u64,
    pub mean: f64,
    pub std_error: f64,
    pub analytic: f64,
    pub delta: f64,
    pub delta_over_se: f64,
}

pub fn run_simulate(config: &Config, out: &Path) -> Result<Vec<SimulateRow>> {
    let model = config.model()?;
    let p = config.matrix.build()?;
    let start = config.start.resolve(p.n_states())?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_config(out, config)?;
    let mut rows = Vec::new();
    for &family in &config.families {
        let solved = solve_family(config, &model, &p, family, &start)?;
        let report = simulate(&model, &p, &solved.policy, &start, config.n_paths, config.seed, config.traces)
            .with_context(|| format!("simulating {family}"))?;
        let delta = report.mean - solved.start_cost;
        rows.push(SimulateRow {
            policy: family.to_string(),
            anchor_or_b0: start.to_string(),
            n_paths: report.n_paths,
            seed: config.seed,
            mean: report.mean,
            std_error: report.std_error,
            analytic: solved.start_cost,
            delta,
            delta_over_se: if report.std_error > 0.0 { delta / report.std_error } else { 0.0 },
        });
        if config.traces > 0 {
            let file = fs::File::create(out.join(format!("traces_{family}.csv")))?;
            write_traces(file, &report.traces)?;
        }
    }
    write_csv(&out.join("simulate.csv"), &rows)?;
    Ok(rows)
}
