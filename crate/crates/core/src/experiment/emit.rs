use std::io::{Read, Write};
use std::path::Path;

use super::config::Mode;
use super::run::{ExperimentSummary, TrajectoryRow};
use super::ExperimentError;

pub const DISCRETE_COLUMNS: [&str; 8] = [
    "replicate",
    "n",
    "survived",
    "alive_count",
    "O_n",
    "I_n",
    "max_deg_alive",
    "max_deg_all",
];

pub const CMJ_COLUMNS: [&str; 5] = ["t", "tau_n", "O_t_cont", "I_t_cont", "W_hat"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn io(e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Io(e.to_string())
}

/// Trajectory rows as CSV; the continuous-time columns are appended in
/// CMJ mode.
pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], mode: Mode, out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = DISCRETE_COLUMNS.to_vec();
    if mode == Mode::Cmj {
        header.extend(CMJ_COLUMNS);
    }
    w.write_record(&header).map_err(io)?;
    for r in rows {
        let mut rec = vec![
            r.replicate.to_string(),
            r.n.to_string(),
            r.survived.to_string(),
            r.alive_count.to_string(),
            opt(r.o_n),
            opt(r.i_n),
            opt(r.max_deg_alive),
            r.max_deg_all.to_string(),
        ];
        if mode == Mode::Cmj {
            rec.extend([opt(r.t), opt(r.tau_n), opt(r.o_t_cont), opt(r.i_t_cont), opt(r.w_hat)]);
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<TrajectoryRow>, ExperimentError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<Vec<TrajectoryRow>, _>>()
        .map_err(io)
}

/// One line per grid point: survival, then `mean`/`se` per estimated
/// metric and the predicted value beside it.
pub fn write_summary_csv<W: Write>(s: &ExperimentSummary, out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = s.rows.first() else {
        return Err(ExperimentError::Invalid {
            field: "summary".into(),
            message: "no grid points".into(),
        });
    };
    let metrics: Vec<&String> = first.estimated.keys().collect();
    let mut header = vec![
        "x".to_string(),
        "alive_replicates".into(),
        "survival_fraction".into(),
        "survivor_count".into(),
        "median_io_ratio".into(),
    ];
    for m in &metrics {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_se"));
        header.push(format!("{m}_predicted"));
    }
    w.write_record(&header).map_err(io)?;
    for r in &s.rows {
        let mut rec = vec![
            r.x.to_string(),
            r.alive_replicates.to_string(),
            r.survival_fraction.to_string(),
            r.survivor_count.to_string(),
            opt(r.median_io_ratio),
        ];
        for m in &metrics {
            let st = r.estimated.get(*m).copied().flatten();
            rec.push(opt(st.map(|s| s.mean)));
            rec.push(opt(st.map(|s| s.se)));
            rec.push(opt(r.predicted.get(*m).copied().flatten()));
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn summary_json(s: &ExperimentSummary) -> String {
    serde_json::to_string_pretty(s).expect("summary serialises") + "\n"
}

/// Writes `<metric>.dat` files with `x,y,error` columns, one per
/// estimated metric, skipping grid points without survivors.
pub fn write_plot_data(s: &ExperimentSummary, dir: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir).map_err(io)?;
    let Some(first) = s.rows.first() else {
        return Ok(());
    };
    for m in first.estimated.keys() {
        let mut w = csv::Writer::from_path(dir.join(format!("{m}.dat"))).map_err(io)?;
        w.write_record(["x", "y", "error"]).map_err(io)?;
        for r in &s.rows {
            if let Some(st) = r.estimated.get(m).copied().flatten() {
                w.write_record([r.x.to_string(), st.mean.to_string(), st.se.to_string()])
                    .map_err(io)?;
            }
        }
        w.flush().map_err(io)?;
    }
    Ok(())
}
