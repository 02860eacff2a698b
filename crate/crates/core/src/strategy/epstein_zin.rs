//! Epstein-Zin aggregator toolkit.
//!
//! The normalized aggregator separating risk aversion `gamma` from the
//! elasticity of intertemporal substitution `psi` is, for consumption
//! `c > 0` and continuation utility `l` with `sign(l) = sign(1 - gamma)`,
//! ```text
//! f(c, l) = delta (1-gamma)/(1 - 1/psi) l ((c / ((1-gamma) l)^{1/(1-gamma)})^{1 - 1/psi} - 1)
//! ```
//! for `psi != 1`, with the log form
//! ```text
//! f(c, l) = delta (1-gamma) l (ln c - ln((1-gamma) l) / (1-gamma))
//! ```
//! at `psi = 1`. The consumption derivative and its inverse are smooth in
//! `psi` across the branch:
//! ```text
//! df/dc = delta ((1-gamma) l)^{(1/psi - gamma)/(1-gamma)} c^{-1/psi},
//! (df/dc)^{-1}(x, l) = delta^psi ((1-gamma) l)^{(1 - gamma psi)/(1-gamma)} x^{-psi},
//! d2f/dc2 = -(1/(psi c)) df/dc.
//! ```
//! At `psi = 1/gamma` the exponent `(1 - gamma psi)/(1 - gamma)` vanishes,
//! the `l` dependence drops out, and the aggregator collapses to
//! `delta u(c) - delta l` with `u` the CRRA utility: the induced optimal
//! plan is the time-additive CRRA plan.

use crate::error::{Error, Result};
use crate::strategy::Preferences;

fn check_args(c: f64, l: f64, prefs: &Preferences) -> Result<f64> {
    let psi = prefs.psi().ok_or_else(|| {
        Error::InvalidParameter("Epstein-Zin functions need psi set on the preferences".into())
    })?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!(
            "consumption must be positive, got {c}"
        )));
    }
    let gamma = prefs.gamma();
    if gamma == 1.0 {
        return Err(Error::Domain(
            "the aggregator is parametrized for gamma != 1".into(),
        ));
    }
    if !(((1.0 - gamma) * l).is_finite() && (1.0 - gamma) * l > 0.0) {
        return Err(Error::Domain(format!(
            "continuation utility must satisfy sign(l) = sign(1 - gamma); got l = {l} with gamma = {gamma}"
        )));
    }
    Ok(psi)
}

/// Aggregator value `f(c, l)`.
pub fn ez_aggregator(c: f64, l: f64, prefs: &Preferences) -> Result<f64> {
    let psi = check_args(c, l, prefs)?;
    let (gamma, delta) = (prefs.gamma(), prefs.delta());
    let scaled = (1.0 - gamma) * l;
    if psi == 1.0 {
        return Ok(delta * scaled * (c.ln() - scaled.ln() / (1.0 - gamma)));
    }
    let q = 1.0 - 1.0 / psi;
    let ratio = c / scaled.powf(1.0 / (1.0 - gamma));
    Ok(delta * (1.0 - gamma) / q * l * (ratio.powf(q) - 1.0))
}

/// Consumption derivative `df/dc(c, l)`; strictly positive.
pub fn ez_aggregator_dc(c: f64, l: f64, prefs: &Preferences) -> Result<f64> {
    let psi = check_args(c, l, prefs)?;
    let (gamma, delta) = (prefs.gamma(), prefs.delta());
    let scaled = (1.0 - gamma) * l;
    Ok(delta * scaled.powf((1.0 / psi - gamma) / (1.0 - gamma)) * c.powf(-1.0 / psi))
}

/// Inverse of [`ez_aggregator_dc`] in `c`: the consumption level with
/// marginal aggregator value `x`.
pub fn ez_inverse_dc(x: f64, l: f64, prefs: &Preferences) -> Result<f64> {
    let psi = check_args(1.0, l, prefs)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!(
            "marginal value must be positive, got {x}"
        )));
    }
    let (gamma, delta) = (prefs.gamma(), prefs.delta());
    let scaled = (1.0 - gamma) * l;
    Ok(delta.powf(psi) * scaled.powf((1.0 - gamma * psi) / (1.0 - gamma)) * x.powf(-psi))
}

/// The deterministic multiplier process induced by the `psi = 1/gamma`
/// aggregator: `df/dl = -delta` is constant, so `D_s = e^{-delta s}`.
pub fn ez_reduction_d(prefs: &Preferences, s: f64) -> f64 {
    (-prefs.delta() * s).exp()
}

/// Optimal consumption of the `psi = 1/gamma` Epstein-Zin investor via the
/// inverse marginal aggregator: `c = (df/dc)^{-1}(lambda / (D_s v), l)`.
///
/// The `l` argument is irrelevant at this parametrization (the exponent on
/// the continuation utility is exactly zero); any admissible value gives
/// the same plan, which coincides with the time-additive CRRA plan after
/// matching budgets.
pub fn ez_plan_crra_reduction(
    prefs: &Preferences,
    lambda: f64,
    s: f64,
    gp_at_s: f64,
) -> Result<f64> {
    let psi = prefs.psi().ok_or_else(|| {
        Error::InvalidParameter("Epstein-Zin functions need psi set on the preferences".into())
    })?;
    if (psi * prefs.gamma() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "reduction requires psi = 1/gamma, got psi = {psi}, gamma = {}",
            prefs.gamma()
        )));
    }
    if !(lambda > 0.0 && gp_at_s > 0.0) {
        return Err(Error::Domain("multiplier and GP value must be positive".into()));
    }
    let l = if prefs.gamma() < 1.0 { 1.0 } else { -1.0 };
    ez_inverse_dc(lambda / (ez_reduction_d(prefs, s) * gp_at_s), l, prefs)
}
