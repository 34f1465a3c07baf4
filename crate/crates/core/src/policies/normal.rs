//! Standard-normal tail functions and truncated-normal moments, stable far
//! into the tails.

use std::f64::consts::FRAC_1_SQRT_2;

const LOG_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub(crate) fn log_pdf(x: f64) -> f64 {
    -0.5 * x * x - LOG_SQRT_2PI
}

/// `log Φ(x)`. Below −20 `erfc` loses relative precision, so the asymptotic
/// Mills-ratio series takes over (eight terms, relative error < 1e-14).
pub(crate) fn log_cdf(x: f64) -> f64 {
    if x > -20.0 {
        return (0.5 * libm::erfc(-x * FRAC_1_SQRT_2)).ln();
    }
    let inv2 = 1.0 / (x * x);
    let mut term = 1.0;
    let mut series = 1.0;
    for k in 1..=8 {
        term *= -((2 * k - 1) as f64) * inv2;
        series += term;
    }
    log_pdf(x) - (-x).ln() + series.ln()
}

/// Moments of `N(μ, σ²)` restricted to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Truncated {
    /// `log P(lo ≤ X ≤ hi)` for the untruncated variable.
    pub log_mass: f64,
    pub mean: f64,
    pub var: f64,
}

pub(crate) fn truncated(mu: f64, sigma: f64, lo: f64, hi: f64) -> Truncated {
    let a = (lo - mu) / sigma;
    let b = (hi - mu) / sigma;
    // Mass in the tail on the far side of the window from μ, computed as a
    // difference of same-side tail probabilities to avoid cancellation.
    let log_mass = if b <= 0.0 {
        let (la, lb) = (log_cdf(a), log_cdf(b));
        lb + (-(la - lb).exp()).ln_1p()
    } else if a >= 0.0 {
        let (la, lb) = (log_cdf(-a), log_cdf(-b));
        la + (-(lb - la).exp()).ln_1p()
    } else {
        (0.5 * (libm::erf(b * FRAC_1_SQRT_2) - libm::erf(a * FRAC_1_SQRT_2))).ln()
    };
    let pa = (log_pdf(a) - log_mass).exp();
    let pb = (log_pdf(b) - log_mass).exp();
    let shift = pa - pb;
    let mean = (mu + sigma * shift).clamp(lo, hi);
    let ta = if a.is_finite() { a * pa } else { 0.0 };
    let tb = if b.is_finite() { b * pb } else { 0.0 };
    let ratio = 1.0 + ta - tb - shift * shift;
    // Far outside the window the closed form cancels catastrophically; the
    // variance of any law on [lo, hi] is at most a quarter of its squared
    // width and is never above σ².
    let cap = (sigma * sigma).min(0.25 * (hi - lo) * (hi - lo));
    let var = (sigma * sigma * ratio).clamp(0.0, cap);
    Truncated { log_mass, mean, var }
}
