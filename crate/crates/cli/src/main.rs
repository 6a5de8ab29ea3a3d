//! `psml`: analytics, simulation and sweeps for predicate monitoring under
//! partial synchrony.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when a run fails after
//! the input was accepted (nothing is written to `--out` in that case).

mod commands;
mod params;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use psml::metrics::Table;
use serde_json::{Map, Value};

use params::Params;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<psml::metrics::MetricsError> for CliError {
    fn from(e: psml::metrics::MetricsError) -> Self {
        use psml::metrics::MetricsError as M;
        match e {
            M::Pool(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<psml::analytic::AnalyticError> for CliError {
    fn from(e: psml::analytic::AnalyticError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<psml::simkernel::SimError> for CliError {
    fn from(e: psml::simkernel::SimError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "psml",
    version,
    about = "Predicate monitoring under partial synchrony: closed forms, simulation and sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
    /// Named experiment whose parameters become the defaults: fig-fpr-n20 (sweep), table-partial (partial), fig-hlc (hlc-curve), pr-n20 (prdiagram)
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Flat key=value file mirroring the flag names; flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write output to FILE (atomically) instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Worker threads for multi-run commands; output order does not depend on it [default: 1]
    #[arg(long, global = true, value_name = "COUNT")]
    jobs: Option<usize>,
    /// Output format [default: csv]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Header row plus one row per result; the effective config goes to stderr
    Csv,
    /// One JSON document holding the effective config and the rows
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Analytic,
    Simulated,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a closed form
    Analytic {
        #[command(subcommand)]
        which: AnalyticCmd,
    },
    /// Recommend a monitor epsilon (--eps-app, --n, --beta, --ell, --eta)
    Tune,
    /// FPR of one configuration over --replicates seeds
    Simulate,
    /// FPR over a grid; list-valued flags (comma-separated) span the grid
    Sweep,
    /// Precision and recall over an (--eps-mon, --eps-app) grid
    Prdiagram {
        #[arg(long, value_enum, default_value = "analytic")]
        mode: Mode,
    },
    /// Quasi- versus partially synchronous detection on the first --p processes
    Partial,
    /// Quasi-synchronous recall across interval lengths (--ell list)
    HlcCurve,
    /// Generated traces
    Trace {
        #[command(subcommand)]
        action: TraceCmd,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum AnalyticCmd {
    /// Probability that an asynchronously detected cut spans at most --eps ticks
    Phi,
    /// Bounds of the hypersensitive band of phi (--n, --beta)
    Inflection,
    /// Precision and recall (--eps-mon, --eps-app, --n, --beta, --ell)
    Pr,
    /// Monitor epsilons reaching precision and recall --eta
    Bound,
    /// System epsilon below which tuning is hypersensitive
    Phase,
    /// Quasi-synchronous recall
    HlcRecall,
    /// Interval length giving quasi-synchronous recall 0.5
    HlcMinlen,
    /// FPR estimate for the leader-majority model (--eps, --g2, --beta, --p-ind)
    PmaEst,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum TraceCmd {
    /// Write one generated trace as line records
    Export,
}

/// What a command produced.
pub enum Body {
    Table(Table),
    Lines(Vec<String>),
}

pub struct Report {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub body: Body,
}

fn render(report: &Report, format: Format) -> Result<Vec<u8>, CliError> {
    let runtime = |e: &dyn std::fmt::Display| CliError::Runtime(format!("formatting output: {e}"));
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            match &report.body {
                Body::Table(t) => t.write_csv(&mut buf).map_err(|e| runtime(&e))?,
                Body::Lines(lines) => {
                    for l in lines {
                        writeln!(buf, "{l}").map_err(|e| runtime(&e))?;
                    }
                }
            }
            Ok(buf)
        }
        Format::Structured => {
            let config: Map<String, Value> =
                report.config.iter().map(|(k, v)| (k.clone(), Value::from(v.clone()))).collect();
            let mut doc = Map::new();
            doc.insert("command".into(), Value::from(report.command.clone()));
            doc.insert("config".into(), Value::Object(config));
            match &report.body {
                Body::Table(t) => doc.insert("rows".into(), t.to_json()),
                Body::Lines(lines) => doc.insert("records".into(), Value::from(lines.clone())),
            };
            let mut buf = serde_json::to_vec_pretty(&Value::Object(doc)).map_err(|e| runtime(&e))?;
            buf.push(b'\n');
            Ok(buf)
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Runtime(format!("writing {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => params::load_config_file(path)?,
        None => Default::default(),
    };
    let preset = cli.preset.clone().or_else(|| file.get("preset").cloned());
    let jobs = match (cli.jobs, file.get("jobs")) {
        (Some(j), _) => j,
        (None, Some(text)) => {
            text.parse().map_err(|_| CliError::Invalid(format!("config jobs {text:?} is not a count")))?
        }
        (None, None) => 1,
    };
    let format = match (cli.format, file.get("format")) {
        (Some(f), _) => f,
        (None, Some(text)) => Format::from_str(text, true)
            .map_err(|_| CliError::Invalid(format!("config format {text:?} is not csv or structured")))?,
        (None, None) => Format::Csv,
    };
    let mut r = params::Resolver::new(&cli.params, file);
    let ctx = commands::Context { preset: preset.as_deref(), jobs: jobs.max(1) };
    let report = match cli.command {
        Command::Analytic { which } => {
            ctx.preset_for("analytic", None)?;
            commands::analytic(&mut r, which)?
        }
        Command::Tune => {
            ctx.preset_for("tune", None)?;
            commands::tune(&mut r)?
        }
        Command::Simulate => commands::simulate(&mut r, &ctx)?,
        Command::Sweep => commands::sweep(&mut r, &ctx)?,
        Command::Prdiagram { mode } => commands::prdiagram(&mut r, &ctx, mode)?,
        Command::Partial => commands::partial(&mut r, &ctx)?,
        Command::HlcCurve => commands::hlc_curve(&mut r, &ctx)?,
        Command::Trace { action: TraceCmd::Export } => {
            ctx.preset_for("trace export", None)?;
            commands::trace_export(&mut r)?
        }
    };
    let bytes = render(&report, format)?;
    if format == Format::Csv {
        let mut err = std::io::stderr().lock();
        for (k, v) in &report.config {
            let _ = writeln!(err, "# {k}={v}");
        }
    }
    match &cli.out {
        Some(path) => write_atomic(path, &bytes),
        None => {
            std::io::stdout().lock().write_all(&bytes).map_err(|e| CliError::Runtime(format!("writing stdout: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("psml: {e}");
            ExitCode::from(match e {
                CliError::Invalid(_) => 2,
                CliError::Runtime(_) => 3,
            })
        }
    }
}
