use psml::analytic;
use psml::metrics::{self, presets, Cell, GridSpec, PrDiagramSpec, PrMode, Table};
use psml::simkernel::{self, Correlation, IntervalModel, SimConfig};

use crate::params::Resolver;
use crate::{AnalyticCmd, Body, CliError, Mode, Report};

type Result<T> = std::result::Result<T, CliError>;

pub struct Context<'a> {
    pub preset: Option<&'a str>,
    pub jobs: usize,
}

impl Context<'_> {
    /// Reject a preset that belongs to another command.
    pub fn preset_for(&self, command: &str, allowed: Option<&str>) -> Result<()> {
        match (self.preset, allowed) {
            (Some(p), Some(a)) if p != a => {
                Err(CliError::Invalid(format!("preset {p:?} does not apply to {command} (expected {a})")))
            }
            (Some(p), None) => Err(CliError::Invalid(format!("{command} takes no preset (got {p:?})"))),
            _ => Ok(()),
        }
    }
}

fn need<T: std::str::FromStr + std::fmt::Display>(r: &mut Resolver, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    r.maybe(key)?.ok_or_else(|| CliError::Invalid(format!("missing --{key}")))
}

fn need_list<T: std::str::FromStr + std::fmt::Display>(r: &mut Resolver, key: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    if !r.is_set(key) {
        return Err(CliError::Invalid(format!("missing --{key}")));
    }
    r.list(key, Vec::new())
}

/// `--eps-app`, accepting `--eps` as an alias.
fn eps_app_key(r: &Resolver) -> &'static str {
    if !r.is_set("eps-app") && r.is_set("eps") {
        "eps"
    } else {
        "eps-app"
    }
}

fn report(command: &str, r: &Resolver, body: Body) -> Report {
    Report { command: command.to_owned(), config: r.echo().to_vec(), body }
}

fn interval_model(r: &mut Resolver, default: IntervalModel) -> Result<IntervalModel> {
    let kind: Option<String> = r.maybe("interval")?;
    let geom: Option<f64> = r.maybe("interval-geom")?;
    let ell: Option<u64> = r.maybe("ell")?;
    let default_len = match default {
        IntervalModel::FixedLength { len } | IntervalModel::Retriggered { len } => Some(len),
        _ => None,
    };
    let model = match kind.as_deref() {
        Some("point") => IntervalModel::Point,
        Some("fixed") => IntervalModel::FixedLength {
            len: ell.or(default_len).ok_or_else(|| CliError::Invalid("--interval fixed needs --ell".into()))?,
        },
        Some("retrigger") => IntervalModel::Retriggered {
            len: ell.or(default_len).ok_or_else(|| CliError::Invalid("--interval retrigger needs --ell".into()))?,
        },
        Some("geom") => IntervalModel::GeometricLength {
            p: geom.ok_or_else(|| CliError::Invalid("--interval geom needs --interval-geom".into()))?,
        },
        Some(other) => {
            return Err(CliError::Invalid(format!("--interval {other:?}: expected point, fixed, geom or retrigger")))
        }
        None => match (geom, ell) {
            (Some(_), Some(_)) => return Err(CliError::Invalid("--ell and --interval-geom are exclusive".into())),
            (Some(p), None) => IntervalModel::GeometricLength { p },
            (None, Some(len)) => match default {
                IntervalModel::Retriggered { .. } => IntervalModel::Retriggered { len },
                _ => IntervalModel::FixedLength { len },
            },
            (None, None) => default,
        },
    };
    r.record("interval", metrics::interval_label(&model));
    Ok(model)
}

fn correlation_model(r: &mut Resolver, default: Correlation, n: usize) -> Result<Correlation> {
    let kind: Option<String> = r.maybe("correlation")?;
    let c = match kind.as_deref() {
        None => default,
        Some("independent") => Correlation::Independent,
        Some("pma") => Correlation::Pma { g1: r.one("g1", n / 2)?, p_dep: r.one("p-dep", 0.5)? },
        Some("hnma") => Correlation::Hnma,
        Some("pmaj") => Correlation::Pmaj,
        Some(other) => {
            return Err(CliError::Invalid(format!("--correlation {other:?}: expected independent, pma, hnma or pmaj")))
        }
    };
    r.record("correlation", c.label());
    Ok(c)
}

/// Every scalar simulation parameter, layered over `base`.
fn sim_config(r: &mut Resolver, base: SimConfig) -> Result<SimConfig> {
    let n = r.one("n", base.n)?;
    let eps_key = eps_app_key(r);
    let epsilon_app = r.one(eps_key, base.epsilon_app)?;
    let cfg = SimConfig {
        n,
        epsilon_app,
        delta: r.one("delta", base.delta)?,
        alpha: r.one("alpha", base.alpha)?,
        beta: r.one("beta", base.beta)?,
        horizon: r.one("horizon", base.horizon)?,
        seed: r.seed(base.seed)?,
        interval: interval_model(r, base.interval)?,
        correlation: correlation_model(r, base.correlation, n)?,
        ..base
    };
    cfg.validate()?;
    Ok(cfg)
}

fn warmup(r: &mut Resolver, horizon: u64) -> Result<u64> {
    r.one("warmup", metrics::default_warmup(horizon))
}

fn undefined(res: std::result::Result<f64, analytic::AnalyticError>) -> Result<Option<f64>> {
    match res {
        Ok(v) => Ok(Some(v)),
        Err(analytic::AnalyticError::Undefined(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn flag(missing: bool) -> Cell {
    (if missing { "undefined" } else { "" }).into()
}

pub fn analytic(r: &mut Resolver, which: AnalyticCmd) -> Result<Report> {
    let (name, table) = match which {
        AnalyticCmd::Phi => {
            let eps: Vec<f64> = need_list(r, "eps")?;
            let n: usize = need(r, "n")?;
            let beta: f64 = need(r, "beta")?;
            let ell: f64 = r.one("ell", 1.0)?;
            let mut t = Table::new(&["eps", "n", "beta", "ell", "phi", "fpr"]);
            for e in eps {
                let phi = analytic::phi_interval(e, n, beta, ell)?;
                t.push(vec![e.into(), n.into(), beta.into(), ell.into(), phi.into(), (1.0 - phi).into()]);
            }
            ("analytic phi", t)
        }
        AnalyticCmd::Inflection => {
            let n: usize = need(r, "n")?;
            let beta: f64 = need(r, "beta")?;
            let (p1, p2) = analytic::inflection_points(n, beta)?;
            let ratio = if n > 2 { Some(analytic::uncertainty_ratio(n, beta)?) } else { None };
            let mut t = Table::new(&["n", "beta", "eps_p1", "eps_p2", "uncertainty_ratio"]);
            t.push(vec![n.into(), beta.into(), p1.into(), p2.into(), ratio.into()]);
            ("analytic inflection", t)
        }
        AnalyticCmd::Pr => {
            let mons: Vec<f64> = need_list(r, "eps-mon")?;
            let key = eps_app_key(r);
            let apps: Vec<f64> = need_list(r, key)?;
            let n: usize = need(r, "n")?;
            let beta: f64 = need(r, "beta")?;
            let ell: f64 = r.one("ell", 1.0)?;
            let mut t = Table::new(&["eps_mon", "eps_app", "n", "beta", "ell", "precision", "recall", "flag"]);
            for &a in &apps {
                for &m in &mons {
                    let p = undefined(analytic::precision(m, a, n, beta, ell))?;
                    let rc = undefined(analytic::recall(m, a, n, beta, ell))?;
                    let missing = p.is_none() || rc.is_none();
                    t.push(vec![
                        m.into(),
                        a.into(),
                        n.into(),
                        beta.into(),
                        ell.into(),
                        p.into(),
                        rc.into(),
                        flag(missing),
                    ]);
                }
            }
            ("analytic pr", t)
        }
        AnalyticCmd::Bound => {
            let key = eps_app_key(r);
            let eps_app: f64 = need(r, key)?;
            let n: usize = need(r, "n")?;
            let beta: f64 = need(r, "beta")?;
            let ell: f64 = r.one("ell", 1.0)?;
            let eta: f64 = r.one("eta", 0.95)?;
            let b = analytic::admissible_eps_mon(eps_app, n, beta, ell, eta)?;
            let mut t = Table::new(&[
                "eps_app",
                "n",
                "beta",
                "ell",
                "eta",
                "eps_mon_lo",
                "eps_mon_hi",
                "unbounded_hi",
                "lo_clamped",
                "empty",
            ]);
            t.push(vec![
                eps_app.into(),
                n.into(),
                beta.into(),
                ell.into(),
                eta.into(),
                b.lo.into(),
                (!b.unbounded_hi).then_some(b.hi).into(),
                u64::from(b.unbounded_hi).into(),
                u64::from(b.lo_clamped).into(),
                u64::from(b.empty).into(),
            ]);
            ("analytic bound", t)
        }
        AnalyticCmd::Phase => {
            let n: usize = need(r, "n")?;
            let beta: f64 = need(r, "beta")?;
            let ell: f64 = r.one("ell", 1.0)?;
            let eta: f64 = r.one("eta", 0.95)?;
            let phase = analytic::phase_transition(n, beta, ell, eta)?;
            let unbounded = analytic::unbounded_hi_threshold(n, beta, ell, eta)?;
            let mut t = Table::new(&["n", "beta", "ell", "eta", "phase_transition", "unbounded_hi_from"]);
            t.push(vec![n.into(), beta.into(), ell.into(), eta.into(), phase.into(), unbounded.into()]);
            ("analytic phase", t)
        }
        AnalyticCmd::HlcRecall => {
            let key = eps_app_key(r);
            let eps_app: f64 = need(r, key)?;
            let n: usize = need(r, "n")?;
            let beta: f64 = need(r, "beta")?;
            let ells: Vec<f64> = r.list("ell", vec![1.0])?;
            let mut t = Table::new(&["eps_app", "n", "beta", "ell", "recall", "flag"]);
            for ell in ells {
                let v = undefined(analytic::hlc_recall(eps_app, n, beta, ell))?;
                t.push(vec![eps_app.into(), n.into(), beta.into(), ell.into(), v.into(), flag(v.is_none())]);
            }
            ("analytic hlc-recall", t)
        }
        AnalyticCmd::HlcMinlen => {
            let key = eps_app_key(r);
            let eps_app: f64 = need(r, key)?;
            let n: usize = need(r, "n")?;
            let beta: f64 = need(r, "beta")?;
            let ell = analytic::hlc_min_len_half_recall(eps_app, n, beta)?;
            let mut t = Table::new(&["eps_app", "n", "beta", "ell_half_recall"]);
            t.push(vec![eps_app.into(), n.into(), beta.into(), ell.into()]);
            ("analytic hlc-minlen", t)
        }
        AnalyticCmd::PmaEst => {
            let eps: Vec<f64> = need_list(r, "eps")?;
            let g2: usize = need(r, "g2")?;
            let beta: f64 = need(r, "beta")?;
            let p_ind: f64 = r.one("p-ind", 0.5)?;
            let mut t = Table::new(&["eps", "g2", "beta", "p_ind", "fpr_estimate"]);
            for e in eps {
                let v = analytic::pma_fpr_estimate(e, g2, beta, p_ind)?;
                t.push(vec![e.into(), g2.into(), beta.into(), p_ind.into(), v.into()]);
            }
            ("analytic pma-est", t)
        }
    };
    Ok(report(name, r, Body::Table(table)))
}

pub fn tune(r: &mut Resolver) -> Result<Report> {
    let key = eps_app_key(r);
    let eps_app: f64 = need(r, key)?;
    let n: usize = need(r, "n")?;
    let beta: f64 = need(r, "beta")?;
    let ell: f64 = r.one("ell", 1.0)?;
    let eta: f64 = r.one("eta", 0.95)?;
    let b = analytic::admissible_eps_mon(eps_app, n, beta, ell, eta)?;
    // The phase transition needs eta < 1; at eta = 1 every system is
    // hypersensitive since only eps_mon = eps_app qualifies.
    let phase = if eta < 1.0 { Some(analytic::phase_transition(n, beta, ell, eta)?) } else { None };
    let hypersensitive = phase.is_none_or(|p| eps_app <= p);
    // One-sided choices: the smallest eps_mon keeping recall at eta (its
    // precision is 1), and the largest keeping precision at eta (its recall
    // is 1, and it is the asynchronous monitor when there is no upper end).
    let (prec_mon, prec_recall, rec_mon, rec_precision) = if b.empty {
        (None, None, None, None)
    } else {
        let rec_mon = if b.unbounded_hi { f64::INFINITY } else { b.hi };
        (
            Some(b.lo),
            undefined(analytic::recall(b.lo, eps_app, n, beta, ell))?,
            Some(rec_mon),
            undefined(analytic::precision(rec_mon, eps_app, n, beta, ell))?,
        )
    };
    let mut t = Table::new(&[
        "eps_app",
        "n",
        "beta",
        "ell",
        "eta",
        "eps_mon_lo",
        "eps_mon_hi",
        "unbounded_hi",
        "empty",
        "phase_transition",
        "verdict",
        "precision_priority_eps_mon",
        "precision_priority_recall",
        "recall_priority_eps_mon",
        "recall_priority_precision",
    ]);
    t.push(vec![
        eps_app.into(),
        n.into(),
        beta.into(),
        ell.into(),
        eta.into(),
        (!b.empty).then_some(b.lo).into(),
        (!b.empty && !b.unbounded_hi).then_some(b.hi).into(),
        u64::from(b.unbounded_hi).into(),
        u64::from(b.empty).into(),
        phase.into(),
        (if hypersensitive { "hypersensitive" } else { "insensitive" }).into(),
        prec_mon.into(),
        prec_recall.into(),
        rec_mon.into(),
        rec_precision.into(),
    ]);
    Ok(report("tune", r, Body::Table(t)))
}

pub fn simulate(r: &mut Resolver, ctx: &Context) -> Result<Report> {
    ctx.preset_for("simulate", None)?;
    let cfg = sim_config(r, SimConfig::default())?;
    let mut grid = GridSpec::from_base(cfg.clone());
    grid.replicates = r.one("replicates", 5usize)?;
    grid.warmup = Some(warmup(r, cfg.horizon)?);
    let rows = metrics::sweep(&grid, ctx.jobs)?;
    Ok(report("simulate", r, Body::Table(Table::from_rows(&rows))))
}

pub fn sweep(r: &mut Resolver, ctx: &Context) -> Result<Report> {
    ctx.preset_for("sweep", Some("fig-fpr-n20"))?;
    let preset = presets::fig_fpr_n20();
    let base = &preset.base;
    let mut grid = preset.clone();
    grid.n = r.list("n", preset.n.clone())?;
    let eps_key = eps_app_key(r);
    grid.eps_app = r.list(eps_key, preset.eps_app.clone())?;
    grid.delta = r.list("delta", preset.delta.clone())?;
    grid.alpha = r.list("alpha", preset.alpha.clone())?;
    grid.beta = r.list("beta", preset.beta.clone())?;
    grid.base.horizon = r.one("horizon", base.horizon)?;
    grid.base.seed = r.seed(base.seed)?;
    let n_hint = grid.n[0];
    grid.interval = vec![interval_model(r, preset.interval[0])?];
    grid.correlation = vec![correlation_model(r, preset.correlation[0], n_hint)?];
    grid.replicates = r.one("replicates", preset.replicates)?;
    grid.warmup = Some(warmup(r, grid.base.horizon)?);
    let rows = metrics::sweep(&grid, ctx.jobs)?;
    Ok(report("sweep", r, Body::Table(Table::from_rows(&rows))))
}

pub fn prdiagram(r: &mut Resolver, ctx: &Context, mode: Mode) -> Result<Report> {
    ctx.preset_for("prdiagram", Some("pr-n20"))?;
    let preset = presets::pr_diagram_n20();
    r.record("mode", format!("{mode:?}").to_lowercase());
    let mons = r.list("eps-mon", preset.eps_mon.clone())?;
    let eps_key = eps_app_key(r);
    let apps = r.list(eps_key, preset.eps_app.clone())?;
    // The grid supplies eps_app; hide any alias from the scalar layer.
    let base = SimConfig { epsilon_app: apps[0], ..preset.base.clone() };
    let base = sim_config(r, base)?;
    let spec = PrDiagramSpec {
        warmup: Some(warmup(r, base.horizon)?),
        replicates: r.one("replicates", preset.replicates)?,
        base,
        eps_mon: mons,
        eps_app: apps.clone(),
    };
    r.record(eps_key, apps.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
    let mode = match mode {
        Mode::Analytic => PrMode::Analytic,
        Mode::Simulated => PrMode::Simulated,
    };
    let rows = metrics::pr_diagram(&spec, mode, ctx.jobs)?;
    Ok(report("prdiagram", r, Body::Table(Table::from_rows(&rows))))
}

pub fn partial(r: &mut Resolver, ctx: &Context) -> Result<Report> {
    ctx.preset_for("partial", Some("table-partial"))?;
    let preset = presets::table_partial();
    let cfg = sim_config(r, preset.config.clone())?;
    let ps = r.list("p", preset.ps.clone())?;
    let replicates = r.one("replicates", preset.replicates)?;
    let w = warmup(r, cfg.horizon)?;
    let rows = metrics::partial_predicate_table(&cfg, w, &ps, replicates, ctx.jobs)?;
    Ok(report("partial", r, Body::Table(Table::from_rows(&rows))))
}

pub fn hlc_curve(r: &mut Resolver, ctx: &Context) -> Result<Report> {
    ctx.preset_for("hlc-curve", Some("fig-hlc"))?;
    let preset = presets::fig_hlc();
    let ells = r.list("ell", preset.ell.clone())?;
    let mut cfg = preset.config.clone();
    // Lengths come from the list; only the model kind is taken from --interval.
    match r.maybe::<String>("interval")?.as_deref() {
        None | Some("retrigger") => {}
        Some("fixed") => cfg.interval = IntervalModel::FixedLength { len: 1 },
        Some(other) => {
            return Err(CliError::Invalid(format!("hlc-curve needs --interval fixed or retrigger, got {other:?}")))
        }
    }
    let cfg = SimConfig {
        n: r.one("n", cfg.n)?,
        epsilon_app: {
            let key = eps_app_key(r);
            r.one(key, cfg.epsilon_app)?
        },
        delta: r.one("delta", cfg.delta)?,
        alpha: r.one("alpha", cfg.alpha)?,
        beta: r.one("beta", cfg.beta)?,
        horizon: r.one("horizon", cfg.horizon)?,
        seed: r.seed(cfg.seed)?,
        ..cfg
    };
    r.record(
        "interval",
        (if matches!(cfg.interval, IntervalModel::Retriggered { .. }) { "retrigger" } else { "fixed" }).into(),
    );
    let replicates = r.one("replicates", preset.replicates)?;
    let w = warmup(r, cfg.horizon)?;
    let rows = metrics::hlc_recall_curve(&cfg, w, &ells, replicates, ctx.jobs)?;
    Ok(report("hlc-curve", r, Body::Table(Table::from_rows(&rows))))
}

pub fn trace_export(r: &mut Resolver) -> Result<Report> {
    let base = SimConfig { n: 3, horizon: 200, ..SimConfig::default() };
    let cfg = sim_config(r, base)?;
    let trace = simkernel::generate(&cfg)?;
    let lines = simkernel::trace_records(&trace).map(|rec| rec.to_line()).collect();
    Ok(report("trace export", r, Body::Lines(lines)))
}
