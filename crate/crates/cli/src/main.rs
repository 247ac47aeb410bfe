//! Batch runner for Orlicz-space discretization experiments.
//!
//! Every subcommand reads a JSON config whose `task` key names the same
//! subcommand. Exit status is 0 when all certificates pass, 2 when a
//! certificate fails or a numerical stage gives up, and 3 on bad input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orlicz::config::{DiscretizeTask, ExperimentConfig, MeasureSpec, SubspaceSpec, Task};
use orlicz::optimize::AscentOptions;
use orlicz::runner::{run, ExperimentReport};
use orlicz::{Error, PhiSpec};

const EXIT_CERTIFICATE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const WORKERS_VAR: &str = "ORLICZ_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "orlicz", version, about = "Orlicz-space sampling discretization and recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, or a `.json` path for the report with artifacts beside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiscretizeArgs {
    #[command(flatten)]
    common: Common,
    /// Φ spec as JSON, e.g. `{"family":"pab","p":2,"alpha":1,"beta":0}`.
    #[arg(long)]
    phi: Option<String>,
    /// Subspace spec as JSON, e.g. `{"kind":"trig_symmetric","n":2}`.
    #[arg(long)]
    space: Option<String>,
    /// Points of the uniform torus grid.
    #[arg(long, default_value_t = 256)]
    grid: usize,
    /// Sample sizes to sweep.
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Index and property checks for a Φ-function.
    ClassifyPhi(Common),
    /// Luxemburg and L^p norms of sampled functions.
    Norm(Common),
    /// Monte Carlo success fractions of random point sets.
    Discretize(DiscretizeArgs),
    /// Lewis change of density.
    Lewis(Common),
    /// Kiefer-Wolfowitz design on a finite grid.
    KwDesign(Common),
    /// Weighted one-sided discretization pipeline.
    OneSided(Common),
    /// Recovery error against the best approximation.
    Recover(Common),
    /// Sampling-number sweep over dimensions.
    Bench(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ClassifyPhi(_) => "classify-phi",
            Command::Norm(_) => "norm",
            Command::Discretize(_) => "discretize",
            Command::Lewis(_) => "lewis",
            Command::KwDesign(_) => "kw-design",
            Command::OneSided(_) => "one-sided",
            Command::Recover(_) => "recover",
            Command::Bench(_) => "bench",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Discretize(a) => &a.common,
            Command::ClassifyPhi(c)
            | Command::Norm(c)
            | Command::Lewis(c)
            | Command::KwDesign(c)
            | Command::OneSided(c)
            | Command::Recover(c)
            | Command::Bench(c) => c,
        }
    }
}

fn config_error(path: &str, message: impl ToString) -> Error {
    Error::Config {
        path: path.into(),
        message: message.to_string(),
    }
}

fn parse_flag<T: serde::de::DeserializeOwned>(flag: &str, text: &str) -> Result<T, Error> {
    serde_json::from_str(text).map_err(|e| config_error(flag, e))
}

fn discretize_from_flags(a: &DiscretizeArgs) -> Result<ExperimentConfig, Error> {
    let phi: PhiSpec = parse_flag("--phi", a.phi.as_deref().ok_or_else(|| config_error("--phi", "required without --config"))?)?;
    let subspace: SubspaceSpec = parse_flag("--space", a.space.as_deref().ok_or_else(|| config_error("--space", "required without --config"))?)?;
    if a.m.is_empty() {
        return Err(config_error("--m", "required without --config"));
    }
    let cfg = ExperimentConfig {
        name: None,
        output_dir: None,
        task: Task::Discretize(DiscretizeTask {
            phi,
            subspace,
            measure: MeasureSpec::TorusGrid { n: a.grid, d: 1 },
            m_list: a.m.clone(),
            eps: a.eps,
            trials: a.trials,
            seed: a.seed,
            ascent: AscentOptions::default(),
        }),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Loads the config and returns it with the directory relative paths resolve against.
fn load(cmd: &Command) -> Result<(ExperimentConfig, PathBuf), Error> {
    let common = cmd.common();
    let (cfg, base) = match (&common.config, cmd) {
        (Some(path), _) => {
            let cfg = ExperimentConfig::from_file(path)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (cfg, base)
        }
        (None, Command::Discretize(a)) => (discretize_from_flags(a)?, PathBuf::new()),
        (None, _) => return Err(config_error("--config", "missing")),
    };
    if cfg.task.command() != cmd.name() {
        return Err(config_error(
            "task",
            format!("config holds a `{}` task but `{}` was invoked", cfg.task.command(), cmd.name()),
        ));
    }
    Ok((cfg, base))
}

fn is_config_error(e: &Error) -> bool {
    match e {
        Error::Stage { source, .. } => is_config_error(source),
        Error::Config { .. }
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_)
        | Error::InvalidPhi(_)
        | Error::InvalidMeasure(_)
        | Error::InvalidSubspace(_)
        | Error::InvalidArgument(_)
        | Error::LengthMismatch { .. } => true,
        _ => false,
    }
}

fn configure_workers() -> Result<(), Error> {
    let Ok(text) = std::env::var(WORKERS_VAR) else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| config_error(WORKERS_VAR, format!("expected a positive integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| config_error(WORKERS_VAR, e))
}

fn print_report(report: &ExperimentReport) {
    for c in &report.certificates {
        let status = if c.passed { "pass" } else { "FAIL" };
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6e}"));
        println!("{status} {} value={} threshold={}", c.name, fmt(c.value), fmt(c.threshold));
    }
    println!("wall_time_s={:.3}", report.wall_time_s);
}

fn execute(cmd: &Command) -> Result<ExperimentReport, Error> {
    configure_workers()?;
    let (mut cfg, base) = load(cmd)?;
    let mut report_path = None;
    if let Some(out) = &cmd.common().out {
        if out.extension().is_some_and(|e| e == "json") {
            cfg.output_dir = Some(out.parent().map(Path::to_path_buf).unwrap_or_default());
            report_path = Some(out.clone());
        } else {
            cfg.output_dir = Some(out.clone());
        }
        // --out is relative to the working directory, not the config file.
        if let Some(dir) = &cfg.output_dir {
            cfg.output_dir = Some(std::env::current_dir()?.join(dir));
        }
    }
    let output = run(&cfg, &base)?;
    if let Some(path) = report_path {
        let path = std::env::current_dir()?.join(path);
        std::fs::write(path, output.report.to_json()?)?;
    }
    Ok(output.report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli.command) {
        Ok(report) => {
            print_report(&report);
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CERTIFICATE)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_config_error(&e) { EXIT_CONFIG } else { EXIT_CERTIFICATE })
        }
    }
}
