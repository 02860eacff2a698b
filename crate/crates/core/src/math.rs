//! Shared numerical helpers: quadrature, finite differences, sample
//! statistics, and the log-gamma function.

use crate::error::{Error, Result};

/// Natural log of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Composite Simpson quadrature of `f` over `[a, b]` with at least `n`
/// subintervals (rounded up to an even count). Returns 0 for `a == b`.
pub fn simpson<F>(mut f: F, a: f64, b: f64, n: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return Err(Error::Domain(format!(
            "integration bounds out of order: [{a}, {b}]"
        )));
    }
    let n = n.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut sum = f(a)? + f(b)?;
    for i in 1..n {
        // Node positions computed from `a` each time to avoid drift.
        let x = a + h * i as f64;
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(x)?;
    }
    Ok(sum * h / 3.0)
}

/// Central difference with one Richardson extrapolation step:
/// `(4 D(h/2) - D(h)) / 3`, error O(h^4) for smooth `f`.
pub fn central_diff_richardson<F>(mut f: F, x: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Numerical(format!("step must be positive, got {h}")));
    }
    let d = |f: &mut F, h: f64| -> Result<f64> {
        let up = f(x + h)?;
        let dn = f(x - h)?;
        Ok((up - dn) / (2.0 * h))
    };
    let d_h = d(&mut f, h)?;
    let d_h2 = d(&mut f, h / 2.0)?;
    let out = (4.0 * d_h2 - d_h) / 3.0;
    if !out.is_finite() {
        return Err(Error::Numerical(format!(
            "finite difference at {x} is not finite"
        )));
    }
    Ok(out)
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 2, "need at least two samples");
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// SplitMix64 step, used to derive per-path substream keys.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
