use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pavd_core::experiment::{
    self, run_experiment, run_suite, simulate_trajectories, summary_json, write_plot_data, write_summary_csv,
    write_trajectory_csv, ExperimentConfig, ExperimentError, Mode, Suite, VerifyOptions,
};
use pavd_core::malthus::solve_malthusian;
use pavd_core::rates::{assumption_report, fixtures, DerivedSequences, RateModel, SequenceKind};

const EXIT_CONFIG: u8 = 2;
const EXIT_VERIFY: u8 = 3;

/// Preferential attachment trees with vertex death.
#[derive(Debug, Parser)]
#[command(name = "pavd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rate-model utilities.
    Rates {
        #[command(subcommand)]
        command: RatesCommand,
    },
    /// Malthusian parameter.
    Malthus {
        #[command(subcommand)]
        command: MalthusCommand,
    },
    /// Simulate trajectories and write per-checkpoint rows.
    Simulate(SimulateArgs),
    /// Replicated experiments driven by a JSON config.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
    /// Run a verification suite and print a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
enum RatesCommand {
    /// Regime classification and the first few rate and derived values.
    Inspect {
        #[command(flatten)]
        model: ModelArgs,
        /// Number of indices to tabulate.
        #[arg(long, default_value_t = 10)]
        terms: usize,
    },
    /// Names of the builtin fixtures.
    Fixtures,
}

#[derive(Debug, Subcommand)]
enum MalthusCommand {
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = experiment::LAMBDA_TOL)]
        tol: f64,
    },
}

#[derive(Debug, Subcommand)]
enum ExperimentCommand {
    Run {
        config: PathBuf,
        /// Format of the summary printed to stdout.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ModelArgs {
    /// Rate-model JSON file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Builtin fixture name.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimMode {
    Discrete,
    Cmj,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(value_enum)]
    mode: SimMode,
    #[command(flatten)]
    model: ModelArgs,
    /// Final tree size (discrete).
    #[arg(long, required_if_eq("mode", "discrete"))]
    steps: Option<u64>,
    /// Number of birth and death events (cmj).
    #[arg(long, required_if_eq("mode", "cmj"))]
    events: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Observation spacing; defaults to a hundredth of the run.
    #[arg(long)]
    stride: Option<u64>,
    #[arg(long, default_value_t = 1)]
    replicates: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Multiplies every Monte Carlo sample count.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite {s:?}; expected one of {}", names.join(", "))
    })
}

/// Bad input from the user; exits with code 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn experiment_error(e: ExperimentError) -> anyhow::Error {
    match e {
        ExperimentError::Parse { .. } | ExperimentError::Invalid { .. } => config_error(e.to_string()),
        other => other.into(),
    }
}

fn load_model(args: &ModelArgs) -> Result<RateModel> {
    match (&args.model, &args.fixture) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            RateModel::from_json(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
        }
        (None, Some(name)) => fixtures::by_name(name).ok_or_else(|| config_error(format!("unknown fixture {name:?}"))),
        (None, None) => Err(config_error("give --model or --fixture")),
    }
}

fn create(p: &Path) -> Result<File> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    File::create(p).with_context(|| format!("creating {}", p.display()))
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn rates_inspect(model: RateModel, terms: usize) -> Result<()> {
    let report = assumption_report(&model);
    let seqs = DerivedSequences::new(model.clone());
    let mut table = Vec::with_capacity(terms);
    for i in 0..terms {
        table.push(json!({
            "i": i,
            "b": model.birth(i),
            "d": model.death(i),
            "phi1": seqs.at(SequenceKind::Phi1, i)?,
            "phi2": seqs.at(SequenceKind::Phi2, i)?,
            "rho1": seqs.at(SequenceKind::Rho1, i)?,
            "rho2": seqs.at(SequenceKind::Rho2, i)?,
            "log_tail": seqs.log_tail(i)?,
        }));
    }
    print_json(&json!({ "model": model, "report": report, "table": table }))
}

fn malthus_solve(model: RateModel, tol: f64) -> Result<()> {
    let sol = solve_malthusian(&DerivedSequences::new(model), tol)?;
    print_json(&json!({
        "lambda_star": sol.lambda_star,
        "residual": sol.residual,
        "lambda_underline": sol.lambda_underline,
    }))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let (mode, n) = match args.mode {
        SimMode::Discrete => (Mode::Discrete, args.steps.unwrap_or(0)),
        SimMode::Cmj => (Mode::Cmj, args.events.unwrap_or(0)),
    };
    if mode == Mode::Discrete && n == 0 {
        return Err(config_error("--steps must be at least 1"));
    }
    if args.replicates == 0 {
        return Err(config_error("--replicates must be at least 1"));
    }
    let stride = args.stride.unwrap_or((n / 100).max(1));
    if stride == 0 {
        return Err(config_error("--stride must be at least 1"));
    }
    let rows = simulate_trajectories(&model, mode, n, stride, args.replicates, args.seed);
    let mut out = writer(args.output.as_deref())?;
    match args.format {
        Format::Csv => write_trajectory_csv(&rows, mode, &mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &rows)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn experiment_run(config: &Path, format: Format) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config).map_err(experiment_error)?;
    let output = run_experiment(&cfg).map_err(experiment_error)?;
    let paths = &cfg.output;
    if let Some(p) = &paths.csv {
        let f = create(p)?;
        write_trajectory_csv(&output.rows, cfg.mode, BufWriter::new(f))?;
    }
    if let Some(p) = &paths.summary_csv {
        let f = create(p)?;
        write_summary_csv(&output.summary, BufWriter::new(f))?;
    }
    if let Some(p) = &paths.json {
        create(p)?.write_all(summary_json(&output.summary).as_bytes())?;
    }
    if let Some(dir) = &paths.plot_dir {
        write_plot_data(&output.summary, dir)?;
    }
    match format {
        Format::Json => print!("{}", summary_json(&output.summary)),
        Format::Csv => write_summary_csv(&output.summary, io::stdout().lock())?,
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<bool> {
    if !(args.scale.is_finite() && args.scale > 0.0) {
        return Err(config_error("--scale must be positive"));
    }
    let report = run_suite(
        args.suite,
        VerifyOptions {
            seed: args.seed,
            scale: args.scale,
        },
    )?;
    print_json(&serde_json::to_value(&report)?)?;
    Ok(report.passed)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Rates {
            command: RatesCommand::Inspect { model, terms },
        } => rates_inspect(load_model(&model)?, terms)?,
        Command::Rates {
            command: RatesCommand::Fixtures,
        } => {
            for (name, _) in fixtures::all() {
                println!("{name}");
            }
        }
        Command::Malthus {
            command: MalthusCommand::Solve { model, tol },
        } => malthus_solve(load_model(&model)?, tol)?,
        Command::Simulate(args) => simulate(args)?,
        Command::Experiment {
            command: ExperimentCommand::Run { config, format },
        } => experiment_run(&config, format)?,
        Command::Verify(args) => return verify(args),
    }
    Ok(true)
}

fn init_threads() -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = pavd_core::par::configured_threads() {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<ConfigError>() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
