//! `qbhardy` command-line interface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, warn};

use qbhardy_harness::config::{ScenarioConfig, ScenarioKind, SuiteFile};
use qbhardy_harness::error::HarnessError;
use qbhardy_harness::report::{write_csv_summary, write_profile_sidecars, SuiteReport};
use qbhardy_harness::{run_scenario, run_suite};

#[derive(Parser)]
#[command(name = "qbhardy", version, about = "Numerical checks for weighted Hardy inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Class constants and hat-class membership of a weight.
    Classify(Common),
    /// Weighted Lebesgue norm.
    Norm(Common),
    /// Weighted grand Lebesgue norm.
    GrandNorm(Common),
    /// Preservation of Q_beta by S_psi, and the S_psi bound.
    HardyCheck(Common),
    /// Extrapolation constants and checks.
    Extrapolate(Common),
    /// Ratio profiles along the test functions x^beta on (0, r).
    Necessity(Common),
    /// A list of scenarios of any kind.
    Suite(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Scenario (or suite) JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Override every scenario's relative tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads for suites.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Accepted for reproducibility records; every computation is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    verbose: bool,
    /// Exit with 3 when any scenario is inconclusive.
    #[arg(long)]
    strict: bool,
}

fn allowed(cmd: &Command) -> Option<&'static [ScenarioKind]> {
    use ScenarioKind::*;
    match cmd {
        Command::Classify(_) => Some(&[Classify, HatClassify]),
        Command::Norm(_) => Some(&[Norm]),
        Command::GrandNorm(_) => Some(&[GrandNorm]),
        Command::HardyCheck(_) => Some(&[HardyCheck, TheoremA]),
        Command::Extrapolate(_) => {
            Some(&[Lemma22, ExtrapolateMain, ExtrapolateInfinity, GrandExtrapolate, HardyGrand])
        }
        Command::Necessity(_) => Some(&[Necessity]),
        Command::Suite(_) => None,
    }
}

fn load(path: &Path, suite: bool) -> Result<Vec<ScenarioConfig>, HarnessError> {
    let src = fs::read_to_string(path)
        .map_err(|e| HarnessError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    if suite {
        SuiteFile::from_json(&src)
    } else {
        Ok(vec![ScenarioConfig::from_json(&src)?])
    }
}

fn run(cmd: Command) -> Result<i32, HarnessError> {
    let kinds = allowed(&cmd);
    let (Command::Classify(o)
    | Command::Norm(o)
    | Command::GrandNorm(o)
    | Command::HardyCheck(o)
    | Command::Extrapolate(o)
    | Command::Necessity(o)
    | Command::Suite(o)) = cmd;
    env_logger::Builder::new()
        .filter_level(if o.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    if o.seed.is_some() {
        warn!("--seed has no effect: all computations are deterministic");
    }
    let mut configs = load(&o.config, kinds.is_none())?;
    if let Some(kinds) = kinds {
        for c in &configs {
            if !kinds.contains(&c.kind) {
                return Err(HarnessError::config("kind", format!("`{}` is not handled by this subcommand", c.kind.label())));
            }
        }
    }
    if let Some(t) = o.tol {
        configs.iter_mut().for_each(|c| c.tol = t);
    }
    let suite = if kinds.is_none() {
        run_suite(&configs, o.jobs)?
    } else {
        SuiteReport::from_reports(vec![run_scenario(&configs[0])?])
    };

    let mut buf = Vec::new();
    match o.format {
        Format::Json => {
            if kinds.is_none() {
                serde_json::to_writer_pretty(&mut buf, &suite)
            } else {
                serde_json::to_writer_pretty(&mut buf, &suite.reports[0])
            }
            .map_err(|e| HarnessError::Io { path: "json output".into(), reason: e.to_string() })?;
            buf.push(b'\n');
        }
        Format::Csv => write_csv_summary(&mut buf, &suite.reports)?,
    }
    match &o.out {
        Some(path) => {
            fs::write(path, &buf).map_err(|e| HarnessError::Io { path: path.display().to_string(), reason: e.to_string() })?;
            write_profile_sidecars(path, &suite.reports)?;
        }
        None => std::io::stdout()
            .write_all(&buf)
            .map_err(|e| HarnessError::Io { path: "stdout".into(), reason: e.to_string() })?,
    }
    Ok(suite.exit_code(o.strict))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
