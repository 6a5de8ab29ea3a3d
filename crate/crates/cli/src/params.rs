//! Parameter layering: command-line flag, then config file, then the
//! command's own default (which may come from a preset).

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use clap::Args;

use crate::CliError;

/// Flags shared by every command. Values are kept as text so the config
/// file and the command line go through the same parser; list-valued
/// parameters take comma-separated values.
#[derive(Debug, Default, Args)]
pub struct Params {
    /// Process count
    #[arg(long, global = true, value_name = "COUNT")]
    pub n: Option<String>,
    /// Clock-spread bound of the system, in ticks (alias of --eps-app for simulation commands)
    #[arg(long, global = true, value_name = "TICKS")]
    pub eps: Option<String>,
    /// Clock-spread bound the application assumes, in ticks
    #[arg(long, global = true, value_name = "TICKS")]
    pub eps_app: Option<String>,
    /// Clock-spread bound the monitor assumes, in ticks
    #[arg(long, global = true, value_name = "TICKS")]
    pub eps_mon: Option<String>,
    /// Message delay, in ticks
    #[arg(long, global = true, value_name = "TICKS")]
    pub delta: Option<String>,
    /// Per-tick send probability, in [0, 1]
    #[arg(long, global = true, value_name = "PROB")]
    pub alpha: Option<String>,
    /// Per-tick truthification probability, in (0, 1]
    #[arg(long, global = true, value_name = "PROB")]
    pub beta: Option<String>,
    /// Predicate interval length, in ticks (fixed-length intervals)
    #[arg(long, global = true, value_name = "TICKS")]
    pub ell: Option<String>,
    /// Geometric interval lengths with this per-tick end probability, in (0, 1]
    #[arg(long, global = true, value_name = "PROB")]
    pub interval_geom: Option<String>,
    /// Interval model: point, fixed, geom or retrigger (retrigger holds for --ell ticks after each truthification)
    #[arg(long, global = true, value_name = "MODEL")]
    pub interval: Option<String>,
    /// Correlation model: independent, pma, hnma or pmaj
    #[arg(long, global = true, value_name = "MODEL")]
    pub correlation: Option<String>,
    /// Size of the independent leader group for pma, in processes
    #[arg(long, global = true, value_name = "COUNT")]
    pub g1: Option<String>,
    /// Probability that a follower copies the leaders for pma, in [0, 1]
    #[arg(long, global = true, value_name = "PROB")]
    pub p_dep: Option<String>,
    /// Size of the dependent group for pma-est, in processes
    #[arg(long, global = true, value_name = "COUNT")]
    pub g2: Option<String>,
    /// Probability that a follower draws independently for pma-est, in [0, 1]
    #[arg(long, global = true, value_name = "PROB")]
    pub p_ind: Option<String>,
    /// Run length: every process runs until its clock reaches this many ticks
    #[arg(long, global = true, value_name = "TICKS")]
    pub horizon: Option<String>,
    /// Base seed; replicate r uses seed + r [env: PSML_SEED as a default]
    #[arg(long, global = true, value_name = "SEED")]
    pub seed: Option<String>,
    /// Seeds per configuration
    #[arg(long, global = true, value_name = "COUNT")]
    pub replicates: Option<String>,
    /// Cuts starting before this clock value are ignored, in ticks [default: horizon/20]
    #[arg(long, global = true, value_name = "TICKS")]
    pub warmup: Option<String>,
    /// Target precision and recall, in (0, 1]
    #[arg(long, global = true, value_name = "PROB")]
    pub eta: Option<String>,
    /// Number of leading processes in the partial predicate
    #[arg(long, global = true, value_name = "COUNT")]
    pub p: Option<String>,
}

impl Params {
    fn entries(&self) -> [(&'static str, &Option<String>); 21] {
        [
            ("n", &self.n),
            ("eps", &self.eps),
            ("eps-app", &self.eps_app),
            ("eps-mon", &self.eps_mon),
            ("delta", &self.delta),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("ell", &self.ell),
            ("interval-geom", &self.interval_geom),
            ("interval", &self.interval),
            ("correlation", &self.correlation),
            ("g1", &self.g1),
            ("p-dep", &self.p_dep),
            ("g2", &self.g2),
            ("p-ind", &self.p_ind),
            ("horizon", &self.horizon),
            ("seed", &self.seed),
            ("replicates", &self.replicates),
            ("warmup", &self.warmup),
            ("eta", &self.eta),
            ("p", &self.p),
        ]
    }
}

/// Keys accepted in a config file besides the parameter flags.
const FILE_ONLY: &[&str] = &["preset", "jobs", "format", "mode"];

/// Parse `key = value` lines; `#` starts a comment. Keys may use `-` or `_`.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let known: Vec<&str> =
        Params::default().entries().iter().map(|(k, _)| *k).chain(FILE_ONLY.iter().copied()).collect();
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if !known.contains(&key.as_str()) {
            return Err(CliError::Invalid(format!("config line {}: unknown key {key:?}", i + 1)));
        }
        out.insert(key, value.trim().to_owned());
    }
    Ok(out)
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_file(&text)
}

/// Looks parameters up flag-first, and records every resolved value so the
/// effective configuration can be echoed.
pub struct Resolver {
    flags: BTreeMap<&'static str, String>,
    file: BTreeMap<String, String>,
    echo: Vec<(String, String)>,
}

impl Resolver {
    pub fn new(params: &Params, file: BTreeMap<String, String>) -> Self {
        let flags = params.entries().into_iter().filter_map(|(k, v)| v.clone().map(|v| (k, v))).collect();
        Self { flags, file, echo: Vec::new() }
    }

    /// Raw text of a key from the flag or the config file.
    pub fn raw(&self, key: &str) -> Option<&str> {
        self.flags.get(key).or_else(|| self.file.get(key)).map(String::as_str)
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    fn parse<T: FromStr>(key: &str, text: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        text.trim().parse().map_err(|e| CliError::Invalid(format!("--{key} {text:?}: {e}")))
    }

    /// A single value, falling back to `default`.
    pub fn one<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        match self.maybe(key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, default.to_string());
                Ok(default)
            }
        }
    }

    /// A single value, or `None` when neither flag nor file set it.
    pub fn maybe<T: FromStr + Display>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let Some(text) = self.raw(key) else { return Ok(None) };
        if text.contains(',') {
            return Err(CliError::Invalid(format!("--{key} takes a single value, got {text:?}")));
        }
        let v: T = Self::parse(key, text)?;
        self.record(key, v.to_string());
        Ok(Some(v))
    }

    /// A comma-separated list, falling back to `default`.
    pub fn list<T: FromStr + Display>(&mut self, key: &str, default: Vec<T>) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        let v = match self.raw(key) {
            Some(text) => text.split(',').map(|s| Self::parse(key, s)).collect::<Result<Vec<T>, _>>()?,
            None => default,
        };
        if v.is_empty() {
            return Err(CliError::Invalid(format!("--{key} needs at least one value")));
        }
        self.record(key, v.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
        Ok(v)
    }

    pub fn record(&mut self, key: &str, value: String) {
        if let Some(slot) = self.echo.iter_mut().find(|(k, _)| k == key) {
            slot.1 = value;
        } else {
            self.echo.push((key.to_owned(), value));
        }
    }

    pub fn echo(&self) -> &[(String, String)] {
        &self.echo
    }

    /// Seed: flag, then file, then `PSML_SEED`, then `default`.
    pub fn seed(&mut self, default: u64) -> Result<u64, CliError> {
        let fallback = match std::env::var("PSML_SEED") {
            Ok(text) => Self::parse("seed", &text)
                .map_err(|_| CliError::Invalid(format!("PSML_SEED={text:?} is not a seed")))?,
            Err(_) => default,
        };
        self.one("seed", fallback)
    }
}
