use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::rates::{fixtures, RateModel};

pub const DEFAULT_REPLICATES: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Discrete,
    Cmj,
}

/// Observation grid: tree sizes `n`, or clock times for the continuous
/// process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    Sizes(Vec<u64>),
    Times(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Raw per-replicate trajectory rows.
    pub csv: Option<PathBuf>,
    /// Per-grid-point summary table.
    pub summary_csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    /// Directory for `x,y,error` plot-data files.
    pub plot_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: RateModel,
    pub mode: Mode,
    pub grid: Grid,
    pub replicates: u64,
    pub base_seed: u64,
    pub condition_on_survival: bool,
    pub observer_stride: u64,
    pub output: OutputPaths,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<RateModel>,
    model_file: Option<PathBuf>,
    fixture: Option<String>,
    #[serde(default = "default_mode")]
    mode: Mode,
    n_grid: Option<Vec<u64>>,
    t_grid: Option<Vec<f64>>,
    replicates: Option<u64>,
    #[serde(default)]
    base_seed: u64,
    #[serde(default = "yes")]
    condition_on_survival: bool,
    observer_stride: Option<u64>,
    #[serde(default)]
    output: OutputPaths,
}

fn default_mode() -> Mode {
    Mode::Discrete
}

fn yes() -> bool {
    true
}

fn invalid(field: &str, message: impl Into<String>) -> ExperimentError {
    ExperimentError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses and validates a JSON config. Relative `model_file` paths
    /// resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, ExperimentError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| ExperimentError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let model = match (raw.model, raw.model_file, raw.fixture) {
            (Some(m), None, None) => m,
            (None, Some(path), None) => {
                let path = base_dir.join(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| invalid("model_file", format!("{}: {e}", path.display())))?;
                RateModel::from_json(&text).map_err(|e| invalid("model_file", e.to_string()))?
            }
            (None, None, Some(name)) => {
                fixtures::by_name(&name).ok_or_else(|| invalid("fixture", format!("unknown fixture {name:?}")))?
            }
            _ => return Err(invalid("model", "give exactly one of model, model_file, fixture")),
        };
        let grid = match (raw.n_grid, raw.t_grid) {
            (Some(ns), None) => {
                if ns.is_empty() {
                    return Err(invalid("n_grid", "must not be empty"));
                }
                if ns[0] < 2 {
                    return Err(invalid("n_grid", "sizes must be at least 2"));
                }
                if ns.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid("n_grid", "must be strictly increasing"));
                }
                Grid::Sizes(ns)
            }
            (None, Some(ts)) => {
                if raw.mode != Mode::Cmj {
                    return Err(invalid("t_grid", "only available with mode \"cmj\""));
                }
                if ts.is_empty() || ts.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                    return Err(invalid("t_grid", "must be non-empty positive times"));
                }
                if ts.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid("t_grid", "must be strictly increasing"));
                }
                Grid::Times(ts)
            }
            _ => return Err(invalid("n_grid", "give exactly one of n_grid, t_grid")),
        };
        let replicates = raw.replicates.unwrap_or(DEFAULT_REPLICATES);
        if replicates == 0 {
            return Err(invalid("replicates", "must be at least 1"));
        }
        let n_max = match &grid {
            Grid::Sizes(ns) => *ns.last().unwrap(),
            Grid::Times(_) => 100,
        };
        let observer_stride = raw.observer_stride.unwrap_or((n_max / 100).max(1));
        if observer_stride == 0 {
            return Err(invalid("observer_stride", "must be at least 1"));
        }
        Ok(ExperimentConfig {
            model,
            mode: raw.mode,
            grid,
            replicates,
            base_seed: raw.base_seed,
            condition_on_survival: raw.condition_on_survival,
            observer_stride,
            output: raw.output,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Checkpoints observed in each replicate: stride multiples and grid
    /// sizes, ascending.
    pub fn checkpoints(&self) -> Vec<u64> {
        match &self.grid {
            Grid::Sizes(ns) => {
                let n_max = *ns.last().unwrap();
                let mut c: Vec<u64> = (1..=n_max / self.observer_stride)
                    .map(|j| j * self.observer_stride)
                    .filter(|&n| n >= 2)
                    .chain(ns.iter().copied())
                    .collect();
                c.sort_unstable();
                c.dedup();
                c
            }
            Grid::Times(_) => Vec::new(),
        }
    }
}
