//! Experiment configuration.
//!
//! Cost coefficients and the horizon are required. Everything else has a
//! default, and the resolved configuration is written next to every output.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use markov_track::{
    banded_20, load_matrix, tridiagonal_eps, Anchor, Belief, CostModel, ObservationAnchor, PolicyFamily,
    TransitionMatrix, DEFAULT_BUDGET, DEFAULT_RESOLUTION,
};
use serde::{Deserialize, Serialize};

pub const DEFAULT_PATHS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MatrixSpec {
    Tridiagonal { m: usize, eps: f64 },
    Banded20,
    File { path: PathBuf },
    Inline { rows: Vec<Vec<f64>> },
}

impl MatrixSpec {
    pub fn build(&self) -> Result<TransitionMatrix> {
        Ok(match self {
            Self::Tridiagonal { m, eps } => tridiagonal_eps(*m, *eps)?,
            Self::Banded20 => banded_20(),
            Self::File { path } => load_matrix(path)?,
            Self::Inline { rows } => TransitionMatrix::new(rows.clone())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum StartSpec {
    State { state: usize },
    Belief { belief: Vec<f64> },
}

impl StartSpec {
    /// Same labels as the library's display of a start point.
    pub fn label(&self) -> String {
        match self {
            Self::State { state } => format!("s0={state}"),
            Self::Belief { .. } => "b0".into(),
        }
    }

    pub fn resolve(&self, n_states: usize) -> Result<ObservationAnchor> {
        Ok(match self {
            Self::State { state } => {
                if *state >= n_states {
                    bail!("start state {state} outside 0..{n_states}");
                }
                ObservationAnchor::Observed(Anchor::new(*state, 0))
            }
            Self::Belief { belief } => {
                if belief.len() != n_states {
                    bail!("start belief has {} entries, matrix has {n_states} states", belief.len());
                }
                ObservationAnchor::InitialBelief(Belief::new(belief.clone())?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Beta,
    #[serde(rename = "c_u")]
    CU,
    #[serde(rename = "T")]
    Horizon,
    Eps,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Beta => "beta",
            Self::CU => "c_u",
            Self::Horizon => "T",
            Self::Eps => "eps",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

fn default_delta() -> f64 {
    DEFAULT_RESOLUTION
}
fn default_paths() -> u64 {
    DEFAULT_PATHS
}
fn default_budget() -> f64 {
    DEFAULT_BUDGET
}
fn default_families() -> Vec<PolicyFamily> {
    vec![PolicyFamily::Frp, PolicyFamily::Myopic]
}
fn default_start() -> StartSpec {
    StartSpec::State { state: 0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub c_u: f64,
    pub c_l: f64,
    pub beta: f64,
    pub horizon: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_families")]
    pub families: Vec<PolicyFamily>,
    /// Threshold used by the `percentile` family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub n_paths: u64,
    /// Number of sample paths exported as traces by `simulate`.
    #[serde(default)]
    pub traces: usize,
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub matrix: MatrixSpec,
    #[serde(default = "default_start")]
    pub start: StartSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: Config = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // Relative matrix paths are taken relative to the config file.
        if let MatrixSpec::File { path: m } = &mut config.matrix {
            if m.is_relative() {
                if let Some(dir) = path.parent() {
                    *m = dir.join(&*m);
                }
            }
        }
        Ok(config)
    }

    pub fn model(&self) -> Result<CostModel> {
        if self.c_u == 0.0 && self.c_l == 0.0 {
            Ok(CostModel::zero_cost(self.beta, self.horizon)?)
        } else {
            Ok(CostModel::new(self.c_u, self.c_l, self.beta, self.horizon)?)
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}
