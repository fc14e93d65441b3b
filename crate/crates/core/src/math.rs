//! Special functions and small numeric helpers.

use libm::{exp, fabs, log, log1p};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub(crate) fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the approximation in its accurate range.
        let pi = core::f64::consts::PI;
        return log(pi / libm::sin(pi * x)) - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * log(2.0 * core::f64::consts::PI) + (x + 0.5) * log(t) - t + log(acc)
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
pub(crate) fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if !(x > 0.0) {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if fabs(term) < fabs(sum) * GAMMA_EPS {
            break;
        }
    }
    (sum * exp(-x + a * log(x) - ln_gamma(a))).clamp(0.0, 1.0)
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if fabs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if fabs(delta - 1.0) < GAMMA_EPS {
            break;
        }
    }
    (exp(-x + a * log(x) - ln_gamma(a)) * h).clamp(0.0, 1.0)
}

pub(crate) fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + exp(-eta))
    } else {
        let e = exp(eta);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^eta)` without overflow.
pub(crate) fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + log1p(exp(-fabs(eta)))
}

pub(crate) fn logit(p: f64) -> f64 {
    log(p / (1.0 - p))
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sum of squared deviations from the mean (two-pass).
pub(crate) fn sum_sq_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum()
}

/// Pearson correlation; 0 when either side has no spread.
pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0)
}

/// Integer key that orders like `f64::total_cmp`, with `-0.0` folded into `0.0`.
pub(crate) fn order_key(v: f64) -> i64 {
    let bits = (v + 0.0).to_bits() as i64;
    bits ^ ((((bits >> 63) as u64) >> 1) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            // Γ(n + 1) = n!
            fact *= n as f64;
            let got = ln_gamma(n as f64 + 1.0);
            assert!((got - libm::log(fact)).abs() < 1e-12 * got.abs().max(1.0), "n={n}");
        }
        let half = ln_gamma(0.5);
        assert!((half - 0.5 * libm::log(core::f64::consts::PI)).abs() < 1e-14);
    }

    #[test]
    fn gamma_q_half_is_erfc() {
        for &x in &[0.01, 0.3, 1.0, 2.5, 7.0, 20.0] {
            let want = libm::erfc(libm::sqrt(x));
            assert!((gamma_q(0.5, x) - want).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn gamma_q_integer_shape_closed_form() {
        // Q(2, x) = e^-x (1 + x)
        for &x in &[0.1, 1.0, 3.0, 10.0, 40.0] {
            let want = libm::exp(-x) * (1.0 + x);
            assert!((gamma_q(2.0, x) - want).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn logistic_and_softplus_are_stable() {
        assert_eq!(logistic(800.0), 1.0);
        assert_eq!(logistic(-800.0), 0.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert!((logistic(0.3) + logistic(-0.3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn order_key_is_monotone() {
        let vals = [-3.5, -1.0, -0.0, 0.0, 1e-300, 2.0, 1e10];
        for w in vals.windows(2) {
            assert!(order_key(w[0]) <= order_key(w[1]));
        }
        assert_eq!(order_key(-0.0), order_key(0.0));
    }
}
