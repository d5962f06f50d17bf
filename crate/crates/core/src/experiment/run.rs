use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Grid, Mode};
use super::ExperimentError;
use crate::analysis::stats::kendall_tau;
use crate::cmj::{BPState, CmjObservables};
use crate::discrete::{Observables, TreeState};
use crate::malthus::{predicted_constants, solve_malthusian, LimitTheorem, MalthusianSolution, PredictedAsymptotics};
use crate::par;
use crate::rates::{assumption_report, DerivedSequences, RateModel, RegimeReport, Verdict};

pub const LAMBDA_TOL: f64 = 1e-12;

/// One observation of one replicate. Continuous-time columns are `None` in
/// discrete mode and once extinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub replicate: u64,
    pub n: u64,
    pub survived: bool,
    pub alive_count: u64,
    #[serde(rename = "O_n")]
    pub o_n: Option<u32>,
    #[serde(rename = "I_n")]
    pub i_n: Option<u32>,
    pub max_deg_alive: Option<u32>,
    pub max_deg_all: u32,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub tau_n: Option<f64>,
    #[serde(default, rename = "O_t_cont")]
    pub o_t_cont: Option<f64>,
    #[serde(default, rename = "I_t_cont")]
    pub i_t_cont: Option<f64>,
    #[serde(default, rename = "W_hat")]
    pub w_hat: Option<f64>,
}

impl TrajectoryRow {
    pub fn discrete(replicate: u64, o: &Observables) -> Self {
        TrajectoryRow {
            replicate,
            n: o.n,
            survived: o.survived,
            alive_count: o.alive_count,
            o_n: o.oldest,
            i_n: o.richest,
            max_deg_alive: o.max_deg_alive,
            max_deg_all: o.max_deg_all,
            t: None,
            tau_n: None,
            o_t_cont: None,
            i_t_cont: None,
            w_hat: None,
        }
    }

    pub fn cmj(replicate: u64, o: &CmjObservables) -> Self {
        TrajectoryRow {
            t: Some(o.t),
            tau_n: Some(o.tau_n),
            o_t_cont: o.cont.map(|c| c.oldest_birth_time),
            i_t_cont: o.cont.map(|c| c.richest_birth_time),
            w_hat: o.cont.map(|c| c.w_hat).filter(|w| w.is_finite()),
            ..TrajectoryRow::discrete(replicate, &o.discrete)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    pub count: u64,
}

impl MetricStat {
    fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MetricStat {
            mean,
            sd,
            se: sd / n.sqrt(),
            count: xs.len() as u64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// Tree size (size grids) or clock time (time grids).
    pub x: f64,
    pub alive_replicates: u64,
    pub survival_fraction: f64,
    /// Replicates the estimates are computed over.
    pub survivor_count: u64,
    pub predicted: BTreeMap<String, Option<f64>>,
    pub estimated: BTreeMap<String, Option<MetricStat>>,
    pub median_io_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persistence {
    pub median_io_ratio: Vec<Option<f64>>,
    pub kendall_tau: Option<f64>,
    pub strictly_increasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub mode: Mode,
    pub replicates: u64,
    pub base_seed: u64,
    pub condition_on_survival: bool,
    pub lambda_star: Option<f64>,
    pub theorem: Option<LimitTheorem>,
    pub regime: RegimeReport,
    pub rows: Vec<SummaryRow>,
    pub persistence: Persistence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    pub rows: Vec<TrajectoryRow>,
}

fn simulate(
    cfg: &ExperimentConfig,
    checkpoints: &[u64],
    lambda_star: f64,
    replicate: u64,
) -> Result<Vec<TrajectoryRow>, ExperimentError> {
    let mut rng = par::stream_rng(cfg.base_seed, replicate);
    Ok(match (&cfg.mode, &cfg.grid) {
        (Mode::Discrete, _) => {
            let n_max = checkpoints.last().copied().unwrap_or(1);
            let mut s = TreeState::with_capacity(cfg.model.clone(), n_max);
            s.observe_at(checkpoints, &mut rng)
                .iter()
                .map(|o| TrajectoryRow::discrete(replicate, o))
                .collect()
        }
        (Mode::Cmj, Grid::Sizes(_)) => {
            let mut s = BPState::new(cfg.model.clone(), &mut rng);
            s.observe_at_sizes(checkpoints, lambda_star, &mut rng)
                .iter()
                .map(|o| TrajectoryRow::cmj(replicate, o))
                .collect()
        }
        (Mode::Cmj, Grid::Times(ts)) => {
            let mut s = BPState::new(cfg.model.clone(), &mut rng);
            s.observe_at_times(ts, lambda_star, &mut rng)?
                .iter()
                .map(|o| TrajectoryRow::cmj(replicate, o))
                .collect()
        }
    })
}

fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    })
}

fn predictions(p: Option<&PredictedAsymptotics>, times: bool) -> BTreeMap<String, Option<f64>> {
    let mut out = BTreeMap::new();
    let o = p.and_then(|p| p.o_exponent);
    let i = p.and_then(|p| p.i_exponent);
    let m = p.and_then(|p| p.maxdeg_over_log_n);
    let lam = p.map(|p| p.lambda_star);
    if times {
        out.insert("O_cont_over_t".into(), o);
        out.insert("I_cont_over_t".into(), i);
        out.insert("max_children_over_t".into(), m.zip(lam).map(|(m, l)| m * l));
        out.insert("log_alive_over_t".into(), lam);
    } else {
        out.insert("O_exponent".into(), o);
        out.insert("I_exponent".into(), i);
        out.insert("maxdeg_over_log_n".into(), m);
    }
    out
}

/// Independent runs to `n` (tree size in discrete mode, events in CMJ
/// mode), observed every `stride`. Replicate `r` uses stream `r` of `seed`.
pub fn simulate_trajectories(
    model: &RateModel,
    mode: Mode,
    n: u64,
    stride: u64,
    replicates: u64,
    seed: u64,
) -> Vec<TrajectoryRow> {
    let lambda_star =
        solve_malthusian(&DerivedSequences::new(model.clone()), LAMBDA_TOL).map_or(f64::NAN, |s| s.lambda_star);
    par::map_indexed(replicates, |r| {
        let mut rng = par::stream_rng(seed, r);
        match mode {
            Mode::Discrete => {
                let mut s = TreeState::with_capacity(model.clone(), n);
                s.run(n, stride, &mut rng)
                    .iter()
                    .map(|o| TrajectoryRow::discrete(r, o))
                    .collect::<Vec<_>>()
            }
            Mode::Cmj => {
                let mut s = BPState::new(model.clone(), &mut rng);
                s.run(n, stride, lambda_star, &mut rng)
                    .iter()
                    .map(|o| TrajectoryRow::cmj(r, o))
                    .collect()
            }
        }
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Runs every replicate and summarises the grid points.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let report = assumption_report(&cfg.model);
    if report.non_explosion == Verdict::Unknown {
        return Err(ExperimentError::Invalid {
            field: "model".into(),
            message: "non-explosion cannot be decided for this model".into(),
        });
    }
    let seqs = DerivedSequences::new(cfg.model.clone());
    let solution: Option<MalthusianSolution> = match solve_malthusian(&seqs, LAMBDA_TOL) {
        Ok(s) => Some(s),
        Err(e) => {
            log::warn!("no Malthusian parameter: {e}");
            None
        }
    };
    let lambda_star = solution.as_ref().map_or(f64::NAN, |s| s.lambda_star);
    let predict_at = |x: f64| {
        solution
            .as_ref()
            .and_then(|s| predicted_constants(s, &seqs, &report, x, None).ok())
    };

    let checkpoints = cfg.checkpoints();
    let per_rep = par::map_indexed(cfg.replicates, |r| simulate(cfg, &checkpoints, lambda_star, r));
    let mut rows = Vec::new();
    for r in per_rep {
        rows.extend(r?);
    }

    let (xs, times): (Vec<f64>, bool) = match &cfg.grid {
        Grid::Sizes(ns) => (ns.iter().map(|&n| n as f64).collect(), false),
        Grid::Times(ts) => (ts.clone(), true),
    };
    let key = |row: &TrajectoryRow| if times { row.t.unwrap_or(f64::NAN) } else { row.n as f64 };
    // replicate -> rows at grid points
    let mut by_rep: BTreeMap<u64, Vec<&TrajectoryRow>> = BTreeMap::new();
    for row in &rows {
        if xs.contains(&key(row)) {
            by_rep.entry(row.replicate).or_default().push(row);
        }
    }
    let final_x = *xs.last().unwrap();
    let alive_at = |rep: u64, x: f64| -> Option<&TrajectoryRow> {
        by_rep.get(&rep)?.iter().copied().find(|r| key(r) == x && r.survived)
    };

    let mut summary_rows = Vec::new();
    for &x in &xs {
        let alive_reps: Vec<&TrajectoryRow> = (0..cfg.replicates).filter_map(|r| alive_at(r, x)).collect();
        let used: Vec<&TrajectoryRow> = if cfg.condition_on_survival {
            alive_reps
                .iter()
                .copied()
                .filter(|r| alive_at(r.replicate, final_x).is_some())
                .collect()
        } else {
            alive_reps.clone()
        };
        let mut metrics: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut push = |k: &str, v: Option<f64>| {
            if let Some(v) = v.filter(|v| v.is_finite()) {
                metrics.entry(k.to_string()).or_default().push(v);
            }
        };
        let mut ratios = Vec::new();
        for r in &used {
            let o = r.o_n.map(f64::from);
            let i = r.i_n.map(f64::from);
            if let (Some(o), Some(i)) = (o, i) {
                ratios.push(i / o);
            }
            if times {
                let t = x;
                push("O_cont_over_t", r.o_t_cont.map(|v| v / t));
                push("I_cont_over_t", r.i_t_cont.map(|v| v / t));
                push("max_children_over_t", r.max_deg_alive.map(|m| m as f64 / t));
                push("log_alive_over_t", Some((r.alive_count as f64).ln() / t));
                push("W_hat", r.w_hat);
            } else {
                let ln = x.ln();
                push("O_exponent", o.map(|o| o.ln() / ln));
                push("I_exponent", i.map(|i| i.ln() / ln));
                push("maxdeg_over_log_n", r.max_deg_alive.map(|m| m as f64 / ln));
                push("maxdeg_all_over_log_n", Some(r.max_deg_all as f64 / ln));
                push("alive_fraction", Some(r.alive_count as f64 / x));
                if let (Some(oc), Some(tau)) = (r.o_t_cont, r.tau_n) {
                    push("O_cont_over_tau", Some(oc / tau));
                }
                if let (Some(ic), Some(tau)) = (r.i_t_cont, r.tau_n) {
                    push("I_cont_over_tau", Some(ic / tau));
                }
                push("W_hat", r.w_hat);
            }
        }
        let mut keys: Vec<&str> = if times {
            vec![
                "O_cont_over_t",
                "I_cont_over_t",
                "max_children_over_t",
                "log_alive_over_t",
                "W_hat",
            ]
        } else {
            vec![
                "O_exponent",
                "I_exponent",
                "maxdeg_over_log_n",
                "maxdeg_all_over_log_n",
                "alive_fraction",
            ]
        };
        if cfg.mode == Mode::Cmj && !times {
            keys.extend(["O_cont_over_tau", "I_cont_over_tau", "W_hat"]);
        }
        let estimated = keys
            .iter()
            .map(|k| (k.to_string(), metrics.get(*k).and_then(|v| MetricStat::of(v))))
            .collect();
        let prediction_x = if times { (lambda_star * x).exp() } else { x };
        summary_rows.push(SummaryRow {
            x,
            alive_replicates: alive_reps.len() as u64,
            survival_fraction: alive_reps.len() as f64 / cfg.replicates as f64,
            survivor_count: used.len() as u64,
            predicted: predictions(predict_at(prediction_x).as_ref(), times),
            estimated,
            median_io_ratio: median(&mut ratios),
        });
    }

    let medians: Vec<Option<f64>> = summary_rows.iter().map(|r| r.median_io_ratio).collect();
    let defined: Vec<f64> = medians.iter().flatten().copied().collect();
    let persistence = Persistence {
        kendall_tau: (defined.len() == medians.len() && defined.len() >= 2).then(|| kendall_tau(&defined)),
        strictly_increasing: defined.len() == medians.len() && defined.windows(2).all(|w| w[0] < w[1]),
        median_io_ratio: medians,
    };
    let summary = ExperimentSummary {
        mode: cfg.mode,
        replicates: cfg.replicates,
        base_seed: cfg.base_seed,
        condition_on_survival: cfg.condition_on_survival,
        lambda_star: solution.as_ref().map(|s| s.lambda_star),
        theorem: predict_at(final_x.max(2.0)).map(|p| p.theorem),
        regime: report,
        rows: summary_rows,
        persistence,
    };
    Ok(ExperimentOutput { summary, rows })
}
