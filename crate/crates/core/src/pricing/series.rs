//! Conditional power moments of the MMM discounted GP.
//!
//! Over a transformed-time step `dphi = phi(s) - phi(t)`, the value `V_s`
//! given `V_t = v` is a scaled noncentral chi-square with four degrees of
//! freedom, and its power moments admit the Poisson-mixture series
//! ```text
//! E[V_s^p | V_t = v] = (2 dphi)^p e^{-x} sum_k x^k Gamma(p+2+k) / (k! Gamma(k+2)),
//! x = v / (2 dphi).
//! ```
//! Terms are generated by recurrence from one log-gamma anchor inside the
//! window `k = x +- 12 sqrt(x)`; the Poisson weights carry no mass outside
//! it, so the left tail below the window contributes less than `1e-30`
//! relative. Past [`X_ASYMPTOTIC`] the windowed sum would need too many
//! terms and the log-gamma cancellation starts to cost digits, so the
//! series is swapped for the confluent-hypergeometric large-`x` expansion
//! ```text
//! E[V_s^p | V_t = v] = v^p sum_n (-p)_n (-p-1)_n / (n! x^n),
//! ```
//! whose truncation error at these `x` is far below f64 resolution.
//!
//! The derivative in `v` uses the same machinery: shifting the series
//! parameters `(p+2, 2) -> (p+3, 3)` gives an auxiliary sum `A` with
//! `dE/dv = (A - E) / (2 dphi)`, and the asymptotic branch differentiates
//! term by term.

use crate::error::{Error, Result};
use crate::math::ln_gamma;

/// Hard cap on evaluated series terms.
pub const MAX_TERMS: usize = 10_000;

/// Crossover from the windowed series to the asymptotic expansion.
const X_ASYMPTOTIC: f64 = 3.0e3;

/// Half-width of the summation window in units of `sqrt(x)`.
const WINDOW_SIGMAS: f64 = 12.0;

/// `sum_k e^{-x} x^k Gamma(a+k) / (k! Gamma(b+k))` for `a > 0`, `b >= 1`.
fn poisson_weighted_gamma_ratio_sum(a: f64, b: f64, x: f64, tol: f64) -> Result<f64> {
    debug_assert!(x > 0.0);
    let k0 = if x > 25.0 {
        (x - WINDOW_SIGMAS * x.sqrt()).floor().max(0.0) as usize
    } else {
        0
    };
    let k0f = k0 as f64;
    // Anchor term in log space, then pure recurrence.
    let mut ln_term = -x + k0f * x.ln() - ln_gamma(k0f + 1.0) + ln_gamma(a + k0f)
        - ln_gamma(b + k0f);
    if k0 == 0 && x <= 25.0 {
        // Cheap exact anchor for the small-x branch.
        ln_term = -x + ln_gamma(a) - ln_gamma(b);
    }
    let mut term = ln_term.exp();
    let mut sum = term;
    let mut k = k0;
    loop {
        if k - k0 >= MAX_TERMS {
            return Err(Error::SeriesNoConvergence {
                max_terms: MAX_TERMS,
                x,
            });
        }
        let kf = k as f64;
        let next = term * x * (a + kf) / ((kf + 1.0) * (b + kf));
        k += 1;
        sum += next;
        // Stop only past the Poisson mode, once terms decrease and no
        // longer contribute relative to the running sum.
        if kf + 1.0 > x && next < term && next < tol * sum {
            break;
        }
        term = next;
    }
    Ok(sum)
}

/// Asymptotic value of `E[V^p]` for large `x` (relative error well below
/// `1e-13` at `x >= X_ASYMPTOTIC` for `|p| <= 1`).
fn asymptotic_moment(p: f64, v: f64, x: f64, tol: f64) -> f64 {
    // c_0 = 1, c_{n+1} = c_n (n - p)(n - p - 1) / (n + 1).
    let mut c = 1.0;
    let mut sum = 1.0;
    for n in 0..24i32 {
        let nf = f64::from(n);
        c *= (nf - p) * (nf - p - 1.0) / (nf + 1.0);
        let term = c / x.powi(n + 1);
        sum += term;
        if term.abs() < tol * sum.abs() {
            break;
        }
    }
    v.powf(p) * sum
}

/// Asymptotic value of `dE[V^p]/dv` for large `x`.
fn asymptotic_moment_dv(p: f64, v: f64, x: f64, tol: f64) -> f64 {
    let mut c = 1.0;
    let mut sum = p;
    for n in 0..24i32 {
        let nf = f64::from(n);
        c *= (nf - p) * (nf - p - 1.0) / (nf + 1.0);
        let term = (p - nf - 1.0) * c / x.powi(n + 1);
        sum += term;
        if term.abs() < tol * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    v.powf(p - 1.0) * sum
}

/// `E[V_s^p | V_t = v]` for a transformed-time step `dphi > 0`.
pub(crate) fn mmm_moment(p: f64, v: f64, dphi: f64, tol: f64) -> Result<f64> {
    if p == 0.0 {
        return Ok(1.0);
    }
    if p <= -2.0 {
        return Err(Error::Divergent(format!(
            "E[V^p] is infinite under the MMM for p <= -2 (p = {p})"
        )));
    }
    if dphi == 0.0 {
        return Ok(v.powf(p));
    }
    let x = v / (2.0 * dphi);
    if x >= X_ASYMPTOTIC {
        return Ok(asymptotic_moment(p, v, x, tol));
    }
    let sum = poisson_weighted_gamma_ratio_sum(p + 2.0, 2.0, x, tol)?;
    Ok((2.0 * dphi).powf(p) * sum)
}

/// `d/dv E[V_s^p | V_t = v]` for a transformed-time step `dphi > 0`.
pub(crate) fn mmm_moment_dv(p: f64, v: f64, dphi: f64, tol: f64) -> Result<f64> {
    if p == 0.0 {
        return Ok(0.0);
    }
    if p <= -2.0 {
        return Err(Error::Divergent(format!(
            "E[V^p] is infinite under the MMM for p <= -2 (p = {p})"
        )));
    }
    if dphi == 0.0 {
        return Ok(p * v.powf(p - 1.0));
    }
    let x = v / (2.0 * dphi);
    if x >= X_ASYMPTOTIC {
        return Ok(asymptotic_moment_dv(p, v, x, tol));
    }
    let m = poisson_weighted_gamma_ratio_sum(p + 2.0, 2.0, x, tol)?;
    let a = poisson_weighted_gamma_ratio_sum(p + 3.0, 3.0, x, tol)?;
    Ok((2.0 * dphi).powf(p) * (a - m) / (2.0 * dphi))
}
