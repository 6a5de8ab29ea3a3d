//! Experiment harness: simulate, run monitors, classify the cuts.
//!
//! Cuts with any member truthified before the warmup tick are dropped from
//! every count, so that estimates describe a system that has been running
//! for a while. The default warmup is 5% of the horizon.

mod output;
pub mod presets;

pub use output::{format_float, to_structured, write_csv, Cell, Table, Tabular};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{self, AnalyticError};
use crate::monitors::{self, cut_length, Cut, MonitorError};
use crate::simkernel::{generate, Correlation, IntervalModel, SimConfig, SimError, Trace};
use output::flags;

/// Estimates resting on fewer samples than this are flagged.
pub const LOW_CONFIDENCE_BELOW: u64 = 30;

/// Two-sided critical value of the standard normal at significance 0.01.
pub const Z_CRITICAL_001: f64 = 2.575_829_303_549;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

type Result<T> = std::result::Result<T, MetricsError>;

pub fn default_warmup(horizon: u64) -> u64 {
    horizon / 20
}

/// Seed of replicate `r` for a base seed.
pub fn replicate_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64)
}

fn past_warmup(cut: &Cut, warmup: u64) -> bool {
    cut.earliest_start().0 >= warmup
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn all_procs(trace: &Trace) -> Vec<usize> {
    (0..trace.n()).collect()
}

/// Asynchronous-monitor cuts and how many of them are also consistent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FprResult {
    pub seed: u64,
    pub eps_check: u64,
    pub warmup: u64,
    pub y: u64,
    pub y_f: u64,
    /// `1 - y_f / y`; `None` when no cut was found.
    pub fpr: Option<f64>,
}

impl FprResult {
    fn from_counts(seed: u64, eps_check: u64, warmup: u64, y: u64, y_f: u64) -> Self {
        Self { seed, eps_check, warmup, y, y_f, fpr: ratio(y_f, y).map(|r| 1.0 - r) }
    }

    pub fn low_confidence(&self) -> bool {
        self.y < LOW_CONFIDENCE_BELOW
    }
}

/// FPR of an already generated trace.
pub fn fpr_of_trace(trace: &Trace, warmup: u64, eps_check: u64) -> FprResult {
    let cuts = monitors::detect_async(trace, &all_procs(trace));
    let mut y = 0;
    let mut y_f = 0;
    for c in cuts.iter().filter(|c| past_warmup(c, warmup)) {
        y += 1;
        // hb-consistency holds for every asynchronous cut
        if cut_length(c).0 <= eps_check {
            y_f += 1;
        }
    }
    FprResult::from_counts(trace.config.seed, eps_check, warmup, y, y_f)
}

pub fn fpr_experiment(config: &SimConfig, warmup: u64, eps_check: u64) -> Result<FprResult> {
    Ok(fpr_of_trace(&generate(config)?, warmup, eps_check))
}

/// Pooled FPR over replicates: `1 - sum(y_f) / sum(y)`.
pub fn pooled_fpr(results: &[FprResult]) -> Option<f64> {
    let y: u64 = results.iter().map(|r| r.y).sum();
    let y_f: u64 = results.iter().map(|r| r.y_f).sum();
    ratio(y_f, y).map(|r| 1.0 - r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub time: u64,
    pub y: u64,
    pub y_f: u64,
    pub fpr: Option<f64>,
}

impl Tabular for ConvergencePoint {
    fn columns() -> &'static [&'static str] {
        &["time", "y", "y_f", "fpr", "flag"]
    }

    fn cells(&self) -> Vec<Cell> {
        let flag = flags(&[(self.fpr.is_none(), "undefined"), (self.y < LOW_CONFIDENCE_BELOW, "low_confidence")]);
        vec![self.time.into(), self.y.into(), self.y_f.into(), self.fpr.into(), flag.into()]
    }
}

/// Running FPR over cuts completed by each sample time. A cut is complete
/// once its latest member has been truthified. The last sample is taken at
/// the horizon and covers every cut.
pub fn convergence_series(
    config: &SimConfig,
    warmup: u64,
    eps_check: u64,
    sample_every: u64,
) -> Result<Vec<ConvergencePoint>> {
    if sample_every == 0 {
        return Err(MetricsError::Invalid("sample_every must be > 0".into()));
    }
    let trace = generate(config)?;
    let mut done: Vec<(u64, bool)> = monitors::detect_async(&trace, &all_procs(&trace))
        .iter()
        .filter(|c| past_warmup(c, warmup))
        .map(|c| (c.latest_start().0, cut_length(c).0 <= eps_check))
        .collect();
    done.sort_unstable();
    let mut out = Vec::new();
    let (mut y, mut y_f, mut k) = (0u64, 0u64, 0usize);
    let mut t = sample_every.min(config.horizon);
    loop {
        while k < done.len() && done[k].0 <= t {
            y += 1;
            y_f += done[k].1 as u64;
            k += 1;
        }
        out.push(ConvergencePoint { time: t, y, y_f, fpr: ratio(y_f, y).map(|r| 1.0 - r) });
        if t >= config.horizon {
            break;
        }
        t = (t + sample_every).min(config.horizon);
    }
    Ok(out)
}

/// Monitor-assumed versus true epsilon, counted over one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrResult {
    pub seed: u64,
    pub eps_mon: u64,
    pub eps_app: u64,
    /// Cuts no longer than `eps_mon`.
    pub detected: u64,
    /// Cuts no longer than `eps_app`.
    pub true_set: u64,
    pub hits: u64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

impl PrResult {
    fn from_counts(seed: u64, eps_mon: u64, eps_app: u64, detected: u64, true_set: u64, hits: u64) -> Self {
        Self {
            seed,
            eps_mon,
            eps_app,
            detected,
            true_set,
            hits,
            precision: ratio(hits, detected),
            recall: ratio(hits, true_set),
        }
    }

    pub fn low_confidence(&self) -> bool {
        self.detected.min(self.true_set) < LOW_CONFIDENCE_BELOW
    }
}

/// Classify the cuts of `detect_partialsync(max(eps_mon, eps_app))` against
/// both thresholds for each `eps_mon`, sharing one monitor run.
pub fn pr_of_trace(trace: &Trace, warmup: u64, eps_mons: &[u64], eps_app: u64) -> Vec<PrResult> {
    let widest = eps_mons.iter().copied().max().unwrap_or(0).max(eps_app);
    let lengths: Vec<u64> = monitors::detect_partialsync(trace, &all_procs(trace), widest)
        .iter()
        .filter(|c| past_warmup(c, warmup))
        .map(|c| cut_length(c).0)
        .collect();
    let true_set = lengths.iter().filter(|&&l| l <= eps_app).count() as u64;
    eps_mons
        .iter()
        .map(|&eps_mon| {
            let detected = lengths.iter().filter(|&&l| l <= eps_mon).count() as u64;
            let hits = lengths.iter().filter(|&&l| l <= eps_mon.min(eps_app)).count() as u64;
            PrResult::from_counts(trace.config.seed, eps_mon, eps_app, detected, true_set, hits)
        })
        .collect()
}

/// Precision and recall of a monitor assuming `eps_mon` on a system whose
/// clocks are `config.epsilon_app` apart.
pub fn pr_experiment(config: &SimConfig, warmup: u64, eps_mon: u64) -> Result<PrResult> {
    let trace = generate(config)?;
    Ok(pr_of_trace(&trace, warmup, &[eps_mon], config.epsilon_app).remove(0))
}

/// Interval length used by closed forms for an interval model.
pub fn analytic_ell(model: &IntervalModel) -> f64 {
    match *model {
        IntervalModel::Point => 1.0,
        IntervalModel::FixedLength { len } | IntervalModel::Retriggered { len } => len as f64,
        IntervalModel::GeometricLength { .. } => model.mean_len(),
    }
}

pub fn interval_label(model: &IntervalModel) -> String {
    match *model {
        IntervalModel::Point => "point".into(),
        IntervalModel::FixedLength { len } => format!("fixed:{len}"),
        IntervalModel::GeometricLength { p } => format!("geom:{p}"),
        IntervalModel::Retriggered { len } => format!("retrigger:{len}"),
    }
}

/// One sweep row: a `(config, seed)` pair with its FPR counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub n: usize,
    pub beta: f64,
    pub alpha: f64,
    pub delta: u64,
    pub eps_app: u64,
    pub interval: String,
    pub correlation: String,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub y: u64,
    pub y_f: u64,
    pub fpr: Option<f64>,
    /// Closed-form FPR for independent, fixed-length predicates.
    pub fpr_analytic: Option<f64>,
}

impl MetricsRow {
    pub fn new(config: &SimConfig, result: &FprResult) -> Self {
        let fpr_analytic = match (config.correlation, config.interval) {
            (
                Correlation::Independent,
                IntervalModel::Point | IntervalModel::FixedLength { .. } | IntervalModel::Retriggered { .. },
            ) if config.beta < 1.0 => {
                analytic::phi_interval(result.eps_check as f64, config.n, config.beta, analytic_ell(&config.interval))
                    .ok()
                    .map(|phi| 1.0 - phi)
            }
            _ => None,
        };
        Self {
            n: config.n,
            beta: config.beta,
            alpha: config.alpha,
            delta: config.delta,
            eps_app: config.epsilon_app,
            interval: interval_label(&config.interval),
            correlation: config.correlation.label(),
            horizon: config.horizon,
            warmup: result.warmup,
            seed: result.seed,
            y: result.y,
            y_f: result.y_f,
            fpr: result.fpr,
            fpr_analytic,
        }
    }
}

impl Tabular for MetricsRow {
    fn columns() -> &'static [&'static str] {
        &[
            "n",
            "beta",
            "alpha",
            "delta",
            "eps_app",
            "interval",
            "correlation",
            "horizon",
            "warmup",
            "seed",
            "y",
            "y_f",
            "fpr",
            "fpr_analytic",
            "flag",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        let flag = flags(&[(self.fpr.is_none(), "undefined"), (self.y < LOW_CONFIDENCE_BELOW, "low_confidence")]);
        vec![
            self.n.into(),
            self.beta.into(),
            self.alpha.into(),
            self.delta.into(),
            self.eps_app.into(),
            self.interval.clone().into(),
            self.correlation.clone().into(),
            self.horizon.into(),
            self.warmup.into(),
            self.seed.into(),
            self.y.into(),
            self.y_f.into(),
            self.fpr.into(),
            self.fpr_analytic.into(),
            flag.into(),
        ]
    }
}

/// Cartesian grid of simulation parameters for an FPR sweep. Each row is
/// classified at its own `eps_app`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub base: SimConfig,
    pub n: Vec<usize>,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub delta: Vec<u64>,
    pub eps_app: Vec<u64>,
    pub interval: Vec<IntervalModel>,
    pub correlation: Vec<Correlation>,
    pub replicates: usize,
    /// Defaults to [`default_warmup`] of the horizon.
    pub warmup: Option<u64>,
}

impl GridSpec {
    /// A single-point grid at `base`.
    pub fn from_base(base: SimConfig) -> Self {
        Self {
            n: vec![base.n],
            beta: vec![base.beta],
            alpha: vec![base.alpha],
            delta: vec![base.delta],
            eps_app: vec![base.epsilon_app],
            interval: vec![base.interval],
            correlation: vec![base.correlation],
            replicates: 1,
            warmup: None,
            base,
        }
    }

    /// Every configuration of the grid, replicates innermost.
    pub fn configs(&self) -> Result<Vec<SimConfig>> {
        let axes = [
            ("n", self.n.len()),
            ("beta", self.beta.len()),
            ("alpha", self.alpha.len()),
            ("delta", self.delta.len()),
            ("eps_app", self.eps_app.len()),
            ("interval", self.interval.len()),
            ("correlation", self.correlation.len()),
            ("replicates", self.replicates),
        ];
        if let Some((name, _)) = axes.iter().find(|(_, len)| *len == 0) {
            return Err(MetricsError::Invalid(format!("grid axis {name} is empty")));
        }
        let mut out = Vec::new();
        for &n in &self.n {
            for &beta in &self.beta {
                for &alpha in &self.alpha {
                    for &delta in &self.delta {
                        for &epsilon_app in &self.eps_app {
                            for &interval in &self.interval {
                                for &correlation in &self.correlation {
                                    for r in 0..self.replicates {
                                        let cfg = SimConfig {
                                            n,
                                            beta,
                                            alpha,
                                            delta,
                                            epsilon_app,
                                            interval,
                                            correlation,
                                            seed: replicate_seed(self.base.seed, r),
                                            ..self.base.clone()
                                        };
                                        cfg.validate()?;
                                        out.push(cfg);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Run `f` over `items` on at most `jobs` threads, keeping input order.
pub fn run_parallel<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    if jobs <= 1 {
        return items.iter().map(f).collect();
    }
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| MetricsError::Pool(e.to_string()))?;
    pool.install(|| items.par_iter().map(f).collect())
}

pub fn sweep(grid: &GridSpec, jobs: usize) -> Result<Vec<MetricsRow>> {
    let configs = grid.configs()?;
    run_parallel(&configs, jobs, |cfg| {
        let warmup = grid.warmup.unwrap_or_else(|| default_warmup(cfg.horizon));
        let res = fpr_experiment(cfg, warmup, cfg.epsilon_app)?;
        Ok(MetricsRow::new(cfg, &res))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrMode {
    Analytic,
    Simulated,
}

/// One point of a PR-sensitivity diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrRow {
    pub eps_mon: u64,
    pub eps_app: u64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Pooled counts behind simulated estimates; zero in analytic mode.
    pub detected: u64,
    pub true_set: u64,
    pub hits: u64,
    pub simulated: bool,
}

impl Tabular for PrRow {
    fn columns() -> &'static [&'static str] {
        &["eps_mon", "eps_app", "precision", "recall", "detected", "true_set", "hits", "mode", "flag"]
    }

    fn cells(&self) -> Vec<Cell> {
        let undefined = self.precision.is_none() || self.recall.is_none();
        let low = self.simulated && self.detected.min(self.true_set) < LOW_CONFIDENCE_BELOW;
        vec![
            self.eps_mon.into(),
            self.eps_app.into(),
            self.precision.into(),
            self.recall.into(),
            self.detected.into(),
            self.true_set.into(),
            self.hits.into(),
            (if self.simulated { "simulated" } else { "analytic" }).into(),
            flags(&[(undefined, "undefined"), (low, "low_confidence")]).into(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrDiagramSpec {
    /// `n`, `beta`, interval model and run settings; `epsilon_app` is
    /// replaced by each grid value.
    pub base: SimConfig,
    pub eps_mon: Vec<u64>,
    pub eps_app: Vec<u64>,
    pub replicates: usize,
    pub warmup: Option<u64>,
}

/// Rows ordered by `eps_app`, then `eps_mon`.
pub fn pr_diagram(spec: &PrDiagramSpec, mode: PrMode, jobs: usize) -> Result<Vec<PrRow>> {
    if spec.eps_mon.is_empty() || spec.eps_app.is_empty() || spec.replicates == 0 {
        return Err(MetricsError::Invalid("PR diagram needs eps_mon and eps_app values and replicates".into()));
    }
    match mode {
        PrMode::Analytic => {
            let (n, beta, ell) = (spec.base.n, spec.base.beta, analytic_ell(&spec.base.interval));
            let mut rows = Vec::new();
            for &eps_app in &spec.eps_app {
                for &eps_mon in &spec.eps_mon {
                    let (m, a) = (eps_mon as f64, eps_app as f64);
                    rows.push(PrRow {
                        eps_mon,
                        eps_app,
                        precision: analytic::precision(m, a, n, beta, ell).ok(),
                        recall: analytic::recall(m, a, n, beta, ell).ok(),
                        detected: 0,
                        true_set: 0,
                        hits: 0,
                        simulated: false,
                    });
                }
            }
            Ok(rows)
        }
        PrMode::Simulated => {
            let mut runs = Vec::new();
            for &eps_app in &spec.eps_app {
                for r in 0..spec.replicates {
                    runs.push(SimConfig {
                        epsilon_app: eps_app,
                        seed: replicate_seed(spec.base.seed, r),
                        ..spec.base.clone()
                    });
                }
            }
            let per_run = run_parallel(&runs, jobs, |cfg| {
                let warmup = spec.warmup.unwrap_or_else(|| default_warmup(cfg.horizon));
                Ok(pr_of_trace(&generate(cfg)?, warmup, &spec.eps_mon, cfg.epsilon_app))
            })?;
            let mut rows = Vec::new();
            for (a, &eps_app) in spec.eps_app.iter().enumerate() {
                let group = &per_run[a * spec.replicates..(a + 1) * spec.replicates];
                for (m, &eps_mon) in spec.eps_mon.iter().enumerate() {
                    let detected = group.iter().map(|g| g[m].detected).sum();
                    let true_set = group.iter().map(|g| g[m].true_set).sum();
                    let hits = group.iter().map(|g| g[m].hits).sum();
                    rows.push(PrRow {
                        eps_mon,
                        eps_app,
                        precision: ratio(hits, detected),
                        recall: ratio(hits, true_set),
                        detected,
                        true_set,
                        hits,
                        simulated: true,
                    });
                }
            }
            Ok(rows)
        }
    }
}

/// For each `eps_app` of a diagram, the spacing-weighted count of `eps_mon`
/// grid values where precision and recall both reach `eta`.
pub fn band_widths(rows: &[PrRow], eta: f64) -> Vec<(u64, f64)> {
    let mut apps: Vec<u64> = rows.iter().map(|r| r.eps_app).collect();
    apps.sort_unstable();
    apps.dedup();
    apps.into_iter()
        .map(|app| {
            let mut mons: Vec<(u64, bool)> = rows
                .iter()
                .filter(|r| r.eps_app == app)
                .map(|r| (r.eps_mon, r.precision.unwrap_or(0.0) >= eta && r.recall.unwrap_or(0.0) >= eta))
                .collect();
            mons.sort_unstable();
            let width: f64 = mons.windows(2).filter(|w| w[0].1 && w[1].1).map(|w| (w[1].0 - w[0].0) as f64).sum();
            (app, width)
        })
        .collect()
}

/// Quasi-synchronous versus partially synchronous detection on processes
/// `0..p`, averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialRow {
    pub n: usize,
    pub p: usize,
    pub eps_app: u64,
    pub replicates: usize,
    pub quasi: u64,
    pub partialsync: u64,
    /// Mean of the per-seed ratios over seeds with a non-zero denominator.
    pub fraction: Option<f64>,
}

impl Tabular for PartialRow {
    fn columns() -> &'static [&'static str] {
        &["n", "p", "eps_app", "replicates", "quasi", "partialsync", "fraction", "flag"]
    }

    fn cells(&self) -> Vec<Cell> {
        let flag = flags(&[
            (self.fraction.is_none(), "undefined"),
            (self.partialsync < LOW_CONFIDENCE_BELOW, "low_confidence"),
        ]);
        vec![
            self.n.into(),
            self.p.into(),
            self.eps_app.into(),
            self.replicates.into(),
            self.quasi.into(),
            self.partialsync.into(),
            self.fraction.into(),
            flag.into(),
        ]
    }
}

fn count_past_warmup(cuts: &[Cut], warmup: u64) -> u64 {
    cuts.iter().filter(|c| past_warmup(c, warmup)).count() as u64
}

/// Table of [`PartialRow`]s for every `p` in `ps`, sharing the traces.
pub fn partial_predicate_table(
    config: &SimConfig,
    warmup: u64,
    ps: &[usize],
    replicates: usize,
    jobs: usize,
) -> Result<Vec<PartialRow>> {
    if replicates == 0 {
        return Err(MetricsError::Invalid("replicates must be >= 1".into()));
    }
    for &p in ps {
        if p == 0 || p > config.n {
            return Err(MonitorError::SubsetOutOfRange { p, n: config.n }.into());
        }
    }
    let seeds: Vec<u64> = (0..replicates).map(|r| replicate_seed(config.seed, r)).collect();
    let counts = run_parallel(&seeds, jobs, |&seed| {
        let trace = generate(&SimConfig { seed, ..config.clone() })?;
        Ok(ps
            .iter()
            .map(|&p| {
                let procs: Vec<usize> = (0..p).collect();
                let q = count_past_warmup(&monitors::detect_quasi(&trace, &procs), warmup);
                let s = count_past_warmup(&monitors::detect_partialsync(&trace, &procs, config.epsilon_app), warmup);
                (q, s)
            })
            .collect::<Vec<_>>())
    })?;
    Ok(ps
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let ratios: Vec<f64> = counts.iter().filter_map(|c| ratio(c[k].0, c[k].1)).collect();
            PartialRow {
                n: config.n,
                p,
                eps_app: config.epsilon_app,
                replicates,
                quasi: counts.iter().map(|c| c[k].0).sum(),
                partialsync: counts.iter().map(|c| c[k].1).sum(),
                fraction: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
            }
        })
        .collect())
}

pub fn partial_predicate_experiment(
    config: &SimConfig,
    warmup: u64,
    p: usize,
    replicates: usize,
) -> Result<Option<f64>> {
    Ok(partial_predicate_table(config, warmup, &[p], replicates, 1)?[0].fraction)
}

/// Simulated and closed-form quasi-synchronous recall at one length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlcRow {
    pub ell: u64,
    pub quasi: u64,
    pub partialsync: u64,
    pub recall_sim: Option<f64>,
    pub recall_analytic: Option<f64>,
}

impl Tabular for HlcRow {
    fn columns() -> &'static [&'static str] {
        &["ell", "quasi", "partialsync", "recall_sim", "recall_analytic", "flag"]
    }

    fn cells(&self) -> Vec<Cell> {
        let flag = flags(&[
            (self.recall_sim.is_none(), "undefined"),
            (self.partialsync < LOW_CONFIDENCE_BELOW, "low_confidence"),
        ]);
        vec![
            self.ell.into(),
            self.quasi.into(),
            self.partialsync.into(),
            self.recall_sim.into(),
            self.recall_analytic.into(),
            flag.into(),
        ]
    }
}

/// Ratio of quasi-synchronous to `eps_app` partially synchronous cuts per
/// interval length, pooled over replicates. Lengths are retriggered when
/// `config.interval` is [`IntervalModel::Retriggered`] and fixed otherwise.
pub fn hlc_recall_curve(
    config: &SimConfig,
    warmup: u64,
    ell_values: &[u64],
    replicates: usize,
    jobs: usize,
) -> Result<Vec<HlcRow>> {
    if replicates == 0 {
        return Err(MetricsError::Invalid("replicates must be >= 1".into()));
    }
    let mut runs = Vec::new();
    for &ell in ell_values {
        for r in 0..replicates {
            let cfg = SimConfig {
                interval: match config.interval {
                    IntervalModel::Retriggered { .. } => IntervalModel::Retriggered { len: ell },
                    _ => IntervalModel::FixedLength { len: ell },
                },
                seed: replicate_seed(config.seed, r),
                ..config.clone()
            };
            cfg.validate()?;
            runs.push(cfg);
        }
    }
    let counts = run_parallel(&runs, jobs, |cfg| {
        let trace = generate(cfg)?;
        let procs = all_procs(&trace);
        let q = count_past_warmup(&monitors::detect_quasi(&trace, &procs), warmup);
        let s = count_past_warmup(&monitors::detect_partialsync(&trace, &procs, cfg.epsilon_app), warmup);
        Ok((q, s))
    })?;
    Ok(ell_values
        .iter()
        .enumerate()
        .map(|(k, &ell)| {
            let group = &counts[k * replicates..(k + 1) * replicates];
            let quasi = group.iter().map(|c| c.0).sum();
            let partialsync = group.iter().map(|c| c.1).sum();
            HlcRow {
                ell,
                quasi,
                partialsync,
                recall_sim: ratio(quasi, partialsync),
                recall_analytic: analytic::hlc_recall(config.epsilon_app as f64, config.n, config.beta, ell as f64)
                    .ok(),
            }
        })
        .collect())
}

/// Interval length at which a recall column first reaches 0.5, by linear
/// interpolation between neighbouring rows.
pub fn half_recall_crossing(rows: &[HlcRow], simulated: bool) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            let v = if simulated { r.recall_sim } else { r.recall_analytic };
            v.map(|v| (r.ell as f64, v))
        })
        .collect();
    if pts.first().is_some_and(|p| p.1 >= 0.5) {
        return Some(pts[0].0);
    }
    pts.windows(2).find(|w| w[0].1 < 0.5 && w[1].1 >= 0.5).map(|w| {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        x0 + (0.5 - y0) * (x1 - x0) / (y1 - y0)
    })
}

/// Two-proportion z statistic for `x1/n1` against `x2/n2`, using the
/// pooled proportion. `None` when either sample is empty or the pooled
/// proportion is 0 or 1.
pub fn two_proportion_z(x1: u64, n1: u64, x2: u64, n2: u64) -> Option<f64> {
    if n1 == 0 || n2 == 0 {
        return None;
    }
    let (p1, p2) = (x1 as f64 / n1 as f64, x2 as f64 / n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    (se > 0.0).then(|| (p1 - p2) / se)
}

/// Whether two FPR estimates are statistically indistinguishable: pooled
/// z-test at 0.01 and an absolute difference under `cap`.
pub fn fpr_equal(a: &[FprResult], b: &[FprResult], cap: f64) -> bool {
    let sum = |rs: &[FprResult]| (rs.iter().map(|r| r.y - r.y_f).sum::<u64>(), rs.iter().map(|r| r.y).sum::<u64>());
    let (fa, ya) = sum(a);
    let (fb, yb) = sum(b);
    let (Some(pa), Some(pb)) = (pooled_fpr(a), pooled_fpr(b)) else { return false };
    let z_ok = two_proportion_z(fa, ya, fb, yb).is_none_or(|z| z.abs() < Z_CRITICAL_001);
    z_ok && (pa - pb).abs() < cap
}
