//! MMM calibration from a historical GP proxy series.
//!
//! The quadratic variation of `sqrt(V)` accumulated to time `t` equals
//! `phi(t)` under the model, so `(alpha0, eta)` are fitted by least
//! squares between the empirical cumulative quadratic variation of the
//! square root of the series and the `phi` curve, with the quadratic
//! variation estimated by summed squared increments.
//!
//! The residuals are taken on the log scale. `phi` spans several orders of
//! magnitude over a long window, and raw-scale least squares lets the
//! exponential tail dictate the fit: a percent-level error in `eta`
//! compounds over decades and is absorbed by `alpha0`, whose error then
//! *grows* with the window. Log-scale residuals weigh all dates
//! comparably, and recovery error shrinks as the window lengthens. On the
//! log scale `ln alpha0` enters additively, so its profile optimum is the
//! mean log residual and only `eta` needs a one-dimensional search.

use crate::error::{Error, Result};
use crate::models::MmmModel;

const ETA_LO: f64 = 1e-6;
const ETA_HI: f64 = 3.0;

/// Fits `(alpha0, eta)` to a strictly positive series observed every `dt`
/// years. The series is normalized to start at one before fitting.
pub fn calibrate_mmm(values: &[f64], dt: f64) -> Result<MmmModel> {
    if values.len() < 3 {
        return Err(Error::Data(format!(
            "calibration needs at least 3 observations, got {}",
            values.len()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "observation spacing must be positive, got {dt}"
        )));
    }
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Data(format!(
            "series values must be strictly positive and finite, got {bad}"
        )));
    }

    let scale = values[0];
    let roots: Vec<f64> = values.iter().map(|v| (v / scale).sqrt()).collect();

    // Cumulative quadratic variation of sqrt(V), kept only from the first
    // strictly positive value on (log residuals need qv > 0).
    let mut log_qv = Vec::with_capacity(values.len() - 1);
    let mut times = Vec::with_capacity(values.len() - 1);
    let mut acc = 0.0;
    for (i, w) in roots.windows(2).enumerate() {
        let inc = w[1] - w[0];
        acc += inc * inc;
        if acc > 0.0 {
            log_qv.push(acc.ln());
            times.push((i + 1) as f64 * dt);
        }
    }
    if log_qv.is_empty() {
        return Err(Error::Calibration(
            "series has zero quadratic variation (constant series)".into(),
        ));
    }

    // ln phi = ln alpha0 + ln g(t; eta), g = (exp(eta t) - 1)/(4 eta), so
    // the profiled ln alpha0 is the mean log residual.
    let profile = |eta: f64| -> (f64, f64) {
        let log_g: Vec<f64> = times
            .iter()
            .map(|&t| ((eta * t).exp_m1() / (4.0 * eta)).ln())
            .collect();
        let ln_alpha = log_qv
            .iter()
            .zip(&log_g)
            .map(|(q, g)| q - g)
            .sum::<f64>()
            / log_qv.len() as f64;
        let sse = log_qv
            .iter()
            .zip(&log_g)
            .map(|(q, g)| {
                let r = q - g - ln_alpha;
                r * r
            })
            .sum::<f64>();
        (ln_alpha.exp(), sse)
    };

    // Coarse log-spaced scan over eta, then golden-section refinement.
    let n_scan = 80;
    let (mut best_eta, mut best_sse) = (ETA_LO, f64::INFINITY);
    for i in 0..=n_scan {
        let eta = ETA_LO * (ETA_HI / ETA_LO).powf(i as f64 / n_scan as f64);
        let (_, sse) = profile(eta);
        if sse < best_sse {
            best_sse = sse;
            best_eta = eta;
        }
    }
    let step = (ETA_HI / ETA_LO).powf(1.0 / n_scan as f64);
    let mut lo = (best_eta / step).max(ETA_LO);
    let mut hi = (best_eta * step).min(ETA_HI);
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = profile(x1).1;
    let mut f2 = profile(x2).1;
    for _ in 0..120 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = profile(x1).1;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = profile(x2).1;
        }
        if (hi - lo) < 1e-12 * hi {
            break;
        }
    }
    let eta = 0.5 * (lo + hi);
    let (alpha0, _) = profile(eta);
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(Error::Calibration(format!(
            "fitted alpha0 is not positive ({alpha0})"
        )));
    }
    MmmModel::new(alpha0, eta)
}
