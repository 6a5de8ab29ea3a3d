//! Closed-form model of monitor precision, recall and sensitivity.
//!
//! Every power of `1 - beta` goes through [`pow_q`], which works in the log
//! domain so that rates near zero and very large epsilons stay accurate.
//! Epsilon and interval length are real-valued here; pass
//! `f64::INFINITY` for an unbounded epsilon.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("{0}")]
    Domain(String),
    #[error("undefined: {0}")]
    Undefined(String),
}

type Result<T> = std::result::Result<T, AnalyticError>;

fn domain(msg: impl Into<String>) -> AnalyticError {
    AnalyticError::Domain(msg.into())
}

/// Parameters shared by the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticParams {
    pub n: usize,
    pub beta: f64,
    pub ell: f64,
    pub eps: f64,
}

impl AnalyticParams {
    pub fn validate(&self) -> Result<()> {
        check_n(self.n)?;
        check_beta(self.beta)?;
        check_ell(self.ell)?;
        check_eps("eps", self.eps)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(domain(format!("n = {n} but at least 2 processes are required")));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(domain(format!("beta = {beta} is outside (0, 1)")));
    }
    Ok(())
}

fn check_ell(ell: f64) -> Result<()> {
    if ell.is_nan() || ell < 1.0 || ell.is_infinite() {
        return Err(domain(format!("interval length {ell} must be a finite value >= 1")));
    }
    Ok(())
}

fn check_eps(name: &str, eps: f64) -> Result<()> {
    if eps.is_nan() || eps < 0.0 {
        return Err(domain(format!("{name} = {eps} must be >= 0")));
    }
    Ok(())
}

fn check_eta(eta: f64, allow_one: bool) -> Result<()> {
    let ok = eta > 0.0 && (eta < 1.0 || (allow_one && eta == 1.0));
    if !ok {
        let range = if allow_one { "(0, 1]" } else { "(0, 1)" };
        return Err(domain(format!("eta = {eta} is outside {range}")));
    }
    Ok(())
}

/// `(1 - beta)^x`.
pub fn pow_q(beta: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    (x * (-beta).ln_1p()).exp()
}

/// `log_{1 - beta}(v)`.
pub fn log_q(beta: f64, v: f64) -> f64 {
    v.ln() / (-beta).ln_1p()
}

/// `(1 - (1 - beta)^x)^k`, accurate when `(1 - beta)^x` is near 1 or 0.
fn one_minus_pow_to(beta: f64, x: f64, k: f64) -> f64 {
    if x.is_infinite() {
        return 1.0;
    }
    let inner = -(x * (-beta).ln_1p()).exp_m1();
    if inner <= 0.0 {
        return 0.0;
    }
    (k * inner.ln()).exp()
}

/// Probability that a cut of point candidates from the asynchronous
/// monitor is also `eps`-consistent.
pub fn phi_point(eps: f64, n: usize, beta: f64) -> Result<f64> {
    check_n(n)?;
    check_beta(beta)?;
    check_eps("eps", eps)?;
    Ok(one_minus_pow_to(beta, eps, (n - 1) as f64))
}

/// Interval-candidate version of [`phi_point`] with interval length `ell`.
pub fn phi_interval(eps: f64, n: usize, beta: f64, ell: f64) -> Result<f64> {
    check_ell(ell)?;
    check_n(n)?;
    check_beta(beta)?;
    check_eps("eps", eps)?;
    Ok(one_minus_pow_to(beta, eps + ell - 1.0, (n - 1) as f64))
}

/// The two inflection points of `d phi / d eps`, smaller first.
pub fn inflection_points(n: usize, beta: f64) -> Result<(f64, f64)> {
    check_n(n)?;
    check_beta(beta)?;
    let nf = n as f64;
    let disc = (5.0 * nf * nf - 16.0 * nf + 12.0).max(0.0);
    let denom = 2.0 * (nf - 1.0).powi(2);
    let plus = (3.0 * nf - 4.0 + disc.sqrt()) / denom;
    let minus = (3.0 * nf - 4.0 - disc.sqrt()) / denom;
    // exact zero for n = 2 rather than a rounding residue
    let p1 = if plus == 1.0 { 0.0 } else { log_q(beta, plus) };
    let p2 = if minus == 1.0 { 0.0 } else { log_q(beta, minus) };
    Ok((p1, p2))
}

/// `(eps_p2 - eps_p1) / eps_p1`, the relative width of the sensitive band.
pub fn uncertainty_ratio(n: usize, beta: f64) -> Result<f64> {
    if n <= 2 {
        return Err(domain(format!("uncertainty ratio needs n > 2, got {n}")));
    }
    let (p1, p2) = inflection_points(n, beta)?;
    Ok((p2 - p1) / p1)
}

fn f_interval(x: f64, n: usize, beta: f64, ell: f64) -> f64 {
    one_minus_pow_to(beta, x + ell - 1.0, (n - 1) as f64)
}

fn pr_checks(eps_mon: f64, eps_app: f64, n: usize, beta: f64, ell: f64) -> Result<()> {
    check_n(n)?;
    check_beta(beta)?;
    check_ell(ell)?;
    check_eps("eps_mon", eps_mon)?;
    check_eps("eps_app", eps_app)
}

fn ratio(num: f64, den: f64, what: &str) -> Result<f64> {
    if den == 0.0 {
        return Err(AnalyticError::Undefined(format!("{what}: no consistent cuts at this epsilon")));
    }
    Ok(num / den)
}

/// Precision of a monitor assuming `eps_mon` on a system with `eps_app`.
pub fn precision(eps_mon: f64, eps_app: f64, n: usize, beta: f64, ell: f64) -> Result<f64> {
    pr_checks(eps_mon, eps_app, n, beta, ell)?;
    let lo = eps_mon.min(eps_app);
    ratio(f_interval(lo, n, beta, ell), f_interval(eps_mon, n, beta, ell), "precision")
}

/// Recall of a monitor assuming `eps_mon` on a system with `eps_app`.
pub fn recall(eps_mon: f64, eps_app: f64, n: usize, beta: f64, ell: f64) -> Result<f64> {
    pr_checks(eps_mon, eps_app, n, beta, ell)?;
    let lo = eps_mon.min(eps_app);
    ratio(f_interval(lo, n, beta, ell), f_interval(eps_app, n, beta, ell), "recall")
}

/// Range of `eps_mon` values whose precision and recall both reach `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsInterval {
    pub lo: f64,
    /// Meaningless when `unbounded_hi` is set.
    pub hi: f64,
    pub empty: bool,
    pub unbounded_hi: bool,
    /// `lo` was raised to 0.
    pub lo_clamped: bool,
}

impl EpsInterval {
    pub fn contains(&self, eps_mon: f64) -> bool {
        !self.empty && eps_mon >= self.lo && (self.unbounded_hi || eps_mon <= self.hi)
    }
}

pub fn admissible_eps_mon(eps_app: f64, n: usize, beta: f64, ell: f64, eta: f64) -> Result<EpsInterval> {
    check_eta(eta, true)?;
    check_n(n)?;
    check_beta(beta)?;
    check_ell(ell)?;
    check_eps("eps_app", eps_app)?;
    let k = 1.0 / (n - 1) as f64;
    let g = one_minus_pow_to(beta, eps_app + ell - 1.0, 1.0);
    let raw_lo = log_q(beta, 1.0 - eta.powf(k) * g) - ell + 1.0;
    let hi_arg = 1.0 - eta.powf(-k) * g;
    let (hi, unbounded_hi) =
        if hi_arg <= 0.0 { (f64::INFINITY, true) } else { (log_q(beta, hi_arg) - ell + 1.0, false) };
    let lo_clamped = raw_lo < 0.0;
    let lo = raw_lo.max(0.0);
    let empty = !unbounded_hi && lo > hi;
    Ok(EpsInterval { lo, hi, empty, unbounded_hi, lo_clamped })
}

/// `eps_app` at or below which the system is hypersensitive.
pub fn phase_transition(n: usize, beta: f64, ell: f64, eta: f64) -> Result<f64> {
    check_eta(eta, false)?;
    check_n(n)?;
    check_beta(beta)?;
    check_ell(ell)?;
    let k = 1.0 / (n - 1) as f64;
    Ok(log_q(beta, eta.powf(-k) - 1.0) - ell + 1.0)
}

/// Smallest `eps_app` from which [`admissible_eps_mon`] has no upper end.
///
/// This sits above [`phase_transition`] by `ln(eta) / ((n-1) ln(1-beta))`.
pub fn unbounded_hi_threshold(n: usize, beta: f64, ell: f64, eta: f64) -> Result<f64> {
    check_eta(eta, false)?;
    check_n(n)?;
    check_beta(beta)?;
    check_ell(ell)?;
    let k = 1.0 / (n - 1) as f64;
    Ok(log_q(beta, 1.0 - eta.powf(k)) - ell + 1.0)
}

fn f_hlc(x: f64, n: usize, beta: f64) -> f64 {
    one_minus_pow_to(beta, x, (n - 1) as f64)
}

/// Recall of the quasi-synchronous monitor relative to one assuming
/// `eps_app`.
pub fn hlc_recall(eps_app: f64, n: usize, beta: f64, ell: f64) -> Result<f64> {
    check_n(n)?;
    check_beta(beta)?;
    check_ell(ell)?;
    check_eps("eps_app", eps_app)?;
    ratio(f_hlc(ell, n, beta), f_hlc(eps_app + ell, n, beta), "hlc recall")
}

/// Interval length at which [`hlc_recall`] is exactly 0.5.
pub fn hlc_min_len_half_recall(eps_app: f64, n: usize, beta: f64) -> Result<f64> {
    check_n(n)?;
    check_beta(beta)?;
    check_eps("eps_app", eps_app)?;
    let s = 2f64.powf(1.0 / (n - 1) as f64);
    let v = (s - 1.0) / (s - pow_q(beta, eps_app));
    Ok(if v >= 1.0 { 0.0 } else { log_q(beta, v) })
}

/// Estimated false-positive rate for the leader-majority correlation model
/// with `g2` followers, each truthifying independently with probability
/// `p_ind`.
pub fn pma_fpr_estimate(eps: f64, g2: usize, beta: f64, p_ind: f64) -> Result<f64> {
    if g2 == 0 {
        return Err(domain("g2 must be >= 1"));
    }
    if !(0.0..=1.0).contains(&p_ind) {
        return Err(domain(format!("p_ind = {p_ind} is outside [0, 1]")));
    }
    check_beta(beta)?;
    check_eps("eps", eps)?;
    Ok(1.0 - one_minus_pow_to(p_ind * beta, eps, g2 as f64))
}
