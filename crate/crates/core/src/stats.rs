//! Trend fitting by maximum likelihood and likelihood-ratio significance.
//!
//! Logistic fits use iteratively reweighted least squares (Newton's method on
//! the Bernoulli log-likelihood) on internally standardized predictors. The
//! fit starts at the intercept-only model and never accepts a step that lowers
//! the likelihood, so the full model always scores at least the null model.
//! Slopes are tested with the likelihood-ratio test only.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, logistic, softplus};

/// Iteration cap for IRLS.
pub const MAX_ITER: usize = 100;
/// IRLS stops once the log-likelihood improves by less than this.
pub const LOGLIK_TOL: f64 = 1e-10;
/// A standardized slope beyond this magnitude is treated as separation.
pub const SEPARATION_BOUND: f64 = 30.0;
/// Default significance threshold for trend signs.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

const RIDGE: f64 = 1e-8;
const MEAN_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FitStatus {
    Converged,
    MaxIter,
    /// The predictor perfectly orders the outcome; only the slope sign is meaningful.
    Separated,
    /// Constant outcome or constant predictor; `beta = 0`, `p_value = 1`.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FitResult {
    pub alpha: f64,
    pub beta: f64,
    pub loglik_full: f64,
    /// Log-likelihood of the slope-free model.
    pub loglik_null: f64,
    pub p_value: f64,
    pub n: usize,
    pub status: FitStatus,
}

/// Fit of `outcome ~ alpha + beta_p * x_p + beta_c * x_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MultiFitResult {
    pub alpha: f64,
    pub beta_p: f64,
    pub beta_c: f64,
    pub loglik: f64,
    /// Log-likelihood of the model without `beta_p`.
    pub loglik_null: f64,
    pub p_value_beta_p: f64,
    pub n: usize,
    pub status: FitStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TrendSign {
    Negative,
    Zero,
    Positive,
}

impl TrendSign {
    pub fn value(self) -> i8 {
        match self {
            TrendSign::Negative => -1,
            TrendSign::Zero => 0,
            TrendSign::Positive => 1,
        }
    }

    /// Sign of `v`, with `|v| < eps` mapped to zero.
    pub fn of(v: f64, eps: f64) -> Self {
        if !(libm::fabs(v) >= eps) {
            TrendSign::Zero
        } else if v > 0.0 {
            TrendSign::Positive
        } else {
            TrendSign::Negative
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for TrendSign {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

/// Link used for the trend model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OutcomeModel {
    /// Binary outcome, logistic link.
    #[default]
    Logistic,
    /// Continuous outcome, identity link (least squares).
    Linear,
}

impl OutcomeModel {
    pub fn fit(self, x: &[f64], y: &[f64]) -> Result<FitResult> {
        match self {
            OutcomeModel::Logistic => fit_logistic(x, y),
            OutcomeModel::Linear => fit_linear(x, y),
        }
    }

    /// Fitted expectation of the outcome at `x`.
    pub fn predict(self, alpha: f64, beta: f64, x: f64) -> f64 {
        match self {
            OutcomeModel::Logistic => logistic(alpha + beta * x),
            OutcomeModel::Linear => alpha + beta * x,
        }
    }
}

/// Three-valued trend classification of a fit.
pub fn trend_sign(fit: &FitResult, threshold: f64) -> TrendSign {
    if fit.status == FitStatus::Degenerate || fit.beta == 0.0 || !(fit.p_value <= threshold) {
        TrendSign::Zero
    } else if fit.beta > 0.0 {
        TrendSign::Positive
    } else {
        TrendSign::Negative
    }
}

/// Upper tail `P(χ²_df > x)`, via the regularized incomplete gamma `Q(df/2, x/2)`.
pub fn chi_square_survival(x: f64, df: u32) -> f64 {
    assert!(df > 0, "chi-square needs at least one degree of freedom");
    math::gamma_q(df as f64 / 2.0, x / 2.0)
}

/// p-value of `Λ = 2 (loglik_full − loglik_null)` (clamped at 0) against χ²(df).
pub fn likelihood_ratio_test(loglik_full: f64, loglik_null: f64, df: u32) -> f64 {
    let stat = 2.0 * (loglik_full - loglik_null);
    if stat.is_nan() {
        return 1.0;
    }
    chi_square_survival(stat.max(0.0), df)
}

#[derive(Debug, Clone, Copy)]
struct Standardized {
    mean: f64,
    sd: f64,
}

impl Standardized {
    /// `None` when the column has no spread.
    fn of(values: &[f64]) -> Option<Self> {
        let mean = math::mean(values);
        let sd = libm::sqrt(math::sum_sq_dev(values) / values.len() as f64);
        (sd > 0.0 && sd.is_finite()).then_some(Self { mean, sd })
    }

    fn apply(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| (v - self.mean) / self.sd).collect()
    }
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(alloc::format!(
            "predictor has {} values, outcome has {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

fn check_binary(y: &[f64]) -> Result<()> {
    match y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        Some(v) => Err(Error::InvalidInput(alloc::format!(
            "logistic outcome must be 0 or 1, found {v}"
        ))),
        None => Ok(()),
    }
}

/// Bernoulli log-likelihood of the intercept-only model at the sample mean.
fn bernoulli_null_loglik(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let ones: f64 = y.iter().sum();
    let zeros = n - ones;
    let mut ll = 0.0;
    if ones > 0.0 {
        ll += ones * libm::log(ones / n);
    }
    if zeros > 0.0 {
        ll += zeros * libm::log(zeros / n);
    }
    ll
}

fn null_intercept(y: &[f64]) -> f64 {
    math::logit(math::mean(y).clamp(MEAN_CLAMP, 1.0 - MEAN_CLAMP))
}

fn degenerate_logistic(y: &[f64]) -> FitResult {
    let ll = bernoulli_null_loglik(y);
    FitResult {
        alpha: if y.is_empty() { 0.0 } else { null_intercept(y) },
        beta: 0.0,
        loglik_full: ll,
        loglik_null: ll,
        p_value: 1.0,
        n: y.len(),
        status: FitStatus::Degenerate,
    }
}

pub(crate) struct IrlsFit {
    pub coef: Vec<f64>,
    pub loglik: f64,
    /// Log-likelihood after every accepted step, starting with the initial point.
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
    pub hit_cap: bool,
}

fn linear_predictor(coef: &[f64], preds: &[&[f64]], i: usize) -> f64 {
    coef[0]
        + preds
            .iter()
            .zip(&coef[1..])
            .map(|(p, b)| b * p[i])
            .sum::<f64>()
}

fn bernoulli_loglik(coef: &[f64], preds: &[&[f64]], y: &[f64]) -> f64 {
    (0..y.len())
        .map(|i| {
            let eta = linear_predictor(coef, preds, i);
            y[i] * eta - softplus(eta)
        })
        .sum()
}

/// Newton–Raphson on the Bernoulli log-likelihood with step halving.
pub(crate) fn irls(preds: &[&[f64]], y: &[f64], start: Vec<f64>) -> IrlsFit {
    let k = preds.len() + 1;
    debug_assert_eq!(start.len(), k);
    let mut coef = start;
    let mut ll = bernoulli_loglik(&coef, preds, y);
    let mut trace = vec![ll];
    let mut hit_cap = true;

    for _ in 0..MAX_ITER {
        let mut grad = vec![0.0; k];
        let mut info = vec![0.0; k * k];
        let mut row = vec![0.0; k];
        for i in 0..y.len() {
            row[0] = 1.0;
            for (j, p) in preds.iter().enumerate() {
                row[j + 1] = p[i];
            }
            let mu = logistic(linear_predictor(&coef, preds, i));
            let w = mu * (1.0 - mu);
            let r = y[i] - mu;
            for a in 0..k {
                grad[a] += r * row[a];
                for b in 0..=a {
                    info[a * k + b] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                info[b * k + a] = info[a * k + b];
            }
        }
        let step = match solve(&info, &grad, k) {
            Some(s) => s,
            None => {
                let mut ridged = info.clone();
                for a in 0..k {
                    ridged[a * k + a] += RIDGE;
                }
                match solve(&ridged, &grad, k) {
                    Some(s) => s,
                    None => {
                        hit_cap = false;
                        break;
                    }
                }
            }
        };

        // Quadratic-model gain of the full step. Below the tolerance the
        // likelihood differences are at rounding level, so halving is pointless.
        let predicted: f64 = 0.5 * grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
        if predicted < LOGLIK_TOL {
            let cand: Vec<f64> = coef.iter().zip(&step).map(|(c, s)| c + s).collect();
            let cand_ll = bernoulli_loglik(&cand, preds, y);
            if cand_ll >= ll {
                coef = cand;
                ll = cand_ll;
                trace.push(ll);
            }
            hit_cap = false;
            break;
        }

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let cand: Vec<f64> = coef.iter().zip(&step).map(|(c, s)| c + scale * s).collect();
            let cand_ll = bernoulli_loglik(&cand, preds, y);
            if cand_ll >= ll {
                accepted = Some((cand, cand_ll));
                break;
            }
            scale *= 0.5;
        }
        let Some((cand, cand_ll)) = accepted else {
            // No ascent direction left at working precision.
            hit_cap = false;
            break;
        };
        let gain = cand_ll - ll;
        coef = cand;
        ll = cand_ll;
        trace.push(ll);
        if gain < LOGLIK_TOL {
            hit_cap = false;
            break;
        }
    }
    IrlsFit {
        coef,
        loglik: ll,
        trace,
        hit_cap,
    }
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve(matrix: &[f64], rhs: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut a = matrix.to_vec();
    let mut b = rhs.to_vec();
    let scale = (0..k).map(|i| libm::fabs(a[i * k + i])).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| libm::fabs(a[i * k + col]).total_cmp(&libm::fabs(a[j * k + col])))?;
        if libm::fabs(a[pivot * k + col]) <= scale * 1e-13 {
            return None;
        }
        if pivot != col {
            for j in 0..k {
                a.swap(pivot * k + j, col * k + j);
            }
            b.swap(pivot, col);
        }
        for r in col + 1..k {
            let f = a[r * k + col] / a[col * k + col];
            for j in col..k {
                a[r * k + j] -= f * a[col * k + j];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let tail: f64 = (r + 1..k).map(|j| a[r * k + j] * x[j]).sum();
        x[r] = (b[r] - tail) / a[r * k + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// True when some threshold splits `x` into all-zero and all-one outcomes
/// (complete or quasi-complete separation for one predictor).
fn separated_1d(x: &[f64], y: &[f64]) -> bool {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for (xi, yi) in x.iter().zip(y) {
        let c = usize::from(*yi == 1.0);
        lo[c] = lo[c].min(*xi);
        hi[c] = hi[c].max(*xi);
    }
    hi[0] <= lo[1] || hi[1] <= lo[0]
}

/// Logistic regression of binary `y` on `x` by maximum likelihood.
pub fn fit_logistic(x: &[f64], y: &[f64]) -> Result<FitResult> {
    check_lengths(x, y)?;
    check_binary(y)?;
    let n = y.len();
    let ones: f64 = y.iter().sum();
    let std = match Standardized::of(x) {
        Some(s) if n >= 2 && ones > 0.0 && ones < n as f64 => s,
        _ => return Ok(degenerate_logistic(y)),
    };
    let z = std.apply(x);
    let fit = irls(&[&z], y, vec![null_intercept(y), 0.0]);
    let (a, b) = (fit.coef[0], fit.coef[1]);
    let loglik_null = bernoulli_null_loglik(y);
    let loglik_full = fit.loglik.max(loglik_null);

    let status = if libm::fabs(b) > SEPARATION_BOUND || separated_1d(x, y) {
        FitStatus::Separated
    } else if fit.hit_cap {
        FitStatus::MaxIter
    } else {
        FitStatus::Converged
    };
    let beta = b / std.sd;
    Ok(FitResult {
        alpha: a - beta * std.mean,
        beta,
        loglik_full,
        loglik_null,
        p_value: likelihood_ratio_test(loglik_full, loglik_null, 1),
        n,
        status,
    })
}

fn gaussian_loglik(rss: f64, floor: f64, n: usize) -> f64 {
    let n = n as f64;
    let var = (rss / n).max(floor);
    -0.5 * n * (libm::log(2.0 * core::f64::consts::PI * var) + 1.0)
}

/// Ordinary least squares of `y` on `x`, scored as a Gaussian likelihood with
/// maximum-likelihood variance.
pub fn fit_linear(x: &[f64], y: &[f64]) -> Result<FitResult> {
    check_lengths(x, y)?;
    let n = y.len();
    let y_mean = math::mean(y);
    let tss = math::sum_sq_dev(y);
    // Keeps the log-likelihood finite for exact fits.
    let floor = (tss / n.max(1) as f64 * 1e-30).max(f64::MIN_POSITIVE);
    let loglik_null = gaussian_loglik(tss, floor, n.max(1));
    let std = match Standardized::of(x) {
        Some(s) if n >= 3 && tss > 0.0 => s,
        _ => {
            return Ok(FitResult {
                alpha: y_mean,
                beta: 0.0,
                loglik_full: loglik_null,
                loglik_null,
                p_value: 1.0,
                n,
                status: FitStatus::Degenerate,
            })
        }
    };
    let z = std.apply(x);
    let szz: f64 = z.iter().map(|v| v * v).sum();
    let szy: f64 = z.iter().zip(y).map(|(zi, yi)| zi * (yi - y_mean)).sum();
    let b = szy / szz;
    let rss: f64 = z
        .iter()
        .zip(y)
        .map(|(zi, yi)| {
            let r = yi - y_mean - b * zi;
            r * r
        })
        .sum();
    let loglik_full = gaussian_loglik(rss, floor, n).max(loglik_null);
    let beta = b / std.sd;
    Ok(FitResult {
        alpha: y_mean - beta * std.mean,
        beta,
        loglik_full,
        loglik_null,
        p_value: likelihood_ratio_test(loglik_full, loglik_null, 1),
        n,
        status: FitStatus::Converged,
    })
}

/// Logistic regression on two predictors; `beta_p` is tested against the
/// model holding only the intercept and `x_c`.
pub fn fit_logistic_multivariate(x_p: &[f64], x_c: &[f64], y: &[f64]) -> Result<MultiFitResult> {
    check_lengths(x_p, y)?;
    check_lengths(x_c, y)?;
    check_binary(y)?;
    let n = y.len();
    let ones: f64 = y.iter().sum();
    let degenerate = || {
        let ll = bernoulli_null_loglik(y);
        MultiFitResult {
            alpha: if n == 0 { 0.0 } else { null_intercept(y) },
            beta_p: 0.0,
            beta_c: 0.0,
            loglik: ll,
            loglik_null: ll,
            p_value_beta_p: 1.0,
            n,
            status: FitStatus::Degenerate,
        }
    };
    if n < 3 || ones == 0.0 || ones == n as f64 {
        return Ok(degenerate());
    }
    let (Some(sp), Some(sc)) = (Standardized::of(x_p), Standardized::of(x_c)) else {
        return Ok(degenerate());
    };
    if libm::fabs(math::pearson(x_p, x_c)) > 1.0 - 1e-12 {
        return Ok(degenerate());
    }
    let zp = sp.apply(x_p);
    let zc = sc.apply(x_c);
    let null = irls(&[&zc], y, vec![null_intercept(y), 0.0]);
    let full = irls(&[&zp, &zc], y, vec![null.coef[0], 0.0, null.coef[1]]);
    let (a, bp, bc) = (full.coef[0], full.coef[1], full.coef[2]);

    let perfect = (0..n).all(|i| {
        let eta = a + bp * zp[i] + bc * zc[i];
        libm::fabs(y[i] - logistic(eta)) < 1e-8
    });
    let status = if perfect || libm::fabs(bp) > SEPARATION_BOUND || libm::fabs(bc) > SEPARATION_BOUND {
        FitStatus::Separated
    } else if full.hit_cap || null.hit_cap {
        FitStatus::MaxIter
    } else {
        FitStatus::Converged
    };
    let loglik = full.loglik.max(null.loglik);
    let beta_p = bp / sp.sd;
    let beta_c = bc / sc.sd;
    Ok(MultiFitResult {
        alpha: a - beta_p * sp.mean - beta_c * sc.mean,
        beta_p,
        beta_c,
        loglik,
        loglik_null: null.loglik,
        p_value_beta_p: likelihood_ratio_test(loglik, null.loglik, 1),
        n,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(beta: f64, p: f64) -> FitResult {
        FitResult {
            alpha: 0.0,
            beta,
            loglik_full: 0.0,
            loglik_null: 0.0,
            p_value: p,
            n: 10,
            status: FitStatus::Converged,
        }
    }

    #[test]
    fn trend_sign_follows_threshold() {
        assert_eq!(trend_sign(&fit(0.3, 0.20), 0.05), TrendSign::Zero);
        assert_eq!(trend_sign(&fit(0.3, 0.01), 0.05), TrendSign::Positive);
        assert_eq!(trend_sign(&fit(-2.0, 1e-6), 0.05), TrendSign::Negative);
        assert_eq!(trend_sign(&fit(0.0, 1e-6), 0.05), TrendSign::Zero);
        let mut degenerate = fit(1.0, 0.0);
        degenerate.status = FitStatus::Degenerate;
        assert_eq!(trend_sign(&degenerate, 0.05), TrendSign::Zero);
    }

    #[test]
    fn symmetric_logistic_is_flat() {
        let r = fit_logistic(&[-1.0, -1.0, 1.0, 1.0], &[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(r.alpha.abs() < 1e-8);
        assert!(r.beta.abs() < 1e-8);
        assert!((r.p_value - 1.0).abs() < 1e-8);
        assert_eq!(r.status, FitStatus::Converged);
    }

    #[test]
    fn separated_logistic_keeps_sign() {
        let r = fit_logistic(&[0.0, 0.0, 1.0, 1.0], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.status, FitStatus::Separated);
        assert!(r.beta > 0.0);
        let r = fit_logistic(&[0.0, 0.0, 1.0, 1.0], &[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.status, FitStatus::Separated);
        assert!(r.beta < 0.0);
        assert!(r.p_value < 0.05);
    }

    #[test]
    fn logistic_degenerate_cases() {
        let r = fit_logistic(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.status, FitStatus::Degenerate);
        assert_eq!((r.beta, r.p_value), (0.0, 1.0));
        let r = fit_logistic(&[2.0, 2.0, 2.0], &[0.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.status, FitStatus::Degenerate);
        assert!(fit_logistic(&[1.0, 2.0], &[0.0, 2.0]).is_err());
        assert!(fit_logistic(&[1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn irls_loglik_never_decreases() {
        let x = [0.1, 0.4, 0.5, 0.9, 1.3, 2.0, 2.2, 3.1, 3.3, 4.0];
        let y = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0];
        let s = Standardized::of(&x).unwrap();
        let z = s.apply(&x);
        let fit = irls(&[&z], &y, vec![null_intercept(&y), 0.0]);
        for w in fit.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10);
        }
        assert!(!fit.hit_cap);
    }

    #[test]
    fn exact_line_is_recovered() {
        let r = fit_linear(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((r.alpha - 1.0).abs() < 1e-12);
        assert!((r.beta - 2.0).abs() < 1e-12);
        assert!(r.p_value < 0.05);
    }

    #[test]
    fn constant_linear_outcome_is_degenerate() {
        let r = fit_linear(&[0.0, 1.0, 2.0, 3.0], &[4.0; 4]).unwrap();
        assert_eq!((r.beta, r.p_value), (0.0, 1.0));
        assert_eq!(r.status, FitStatus::Degenerate);
        let r = fit_linear(&[1.0; 4], &[1.0, 2.0, 3.0, 5.0]).unwrap();
        assert_eq!(r.status, FitStatus::Degenerate);
    }

    #[test]
    fn collinear_multivariate_is_degenerate() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 1.0, 0.0, 1.0, 1.0];
        let r = fit_logistic_multivariate(&x, &x, &y).unwrap();
        assert_eq!(r.status, FitStatus::Degenerate);
        let shifted: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let r = fit_logistic_multivariate(&x, &shifted, &y).unwrap();
        assert_eq!(r.status, FitStatus::Degenerate);
    }

    #[test]
    fn lrt_basics() {
        assert_eq!(likelihood_ratio_test(-10.0, -10.0, 1), 1.0);
        // Full below null is clamped to a zero statistic.
        assert_eq!(likelihood_ratio_test(-10.0, -9.0, 1), 1.0);
        assert!((likelihood_ratio_test(0.0, -3.841 / 2.0, 1) - 0.05).abs() < 5e-4);
        assert_eq!(chi_square_survival(0.0, 3), 1.0);
        assert!(chi_square_survival(1e6, 1) < 1e-12);
        assert_eq!(chi_square_survival(f64::INFINITY, 2), 0.0);
    }
}
