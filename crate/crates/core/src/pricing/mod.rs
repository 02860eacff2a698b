//! Benchmarked values, minimum (real-world) pricing, conditional
//! power-moment engines, and martingale diagnostics.
//!
//! With the inverse GP as stochastic discount factor, the minimal price of
//! a payoff delivered at `s` is
//! ```text
//! A_t = V_t * E[ A_s / V_s | V_t ]
//! ```
//! under the physical measure, where `V` is the discounted GP. Every payoff
//! handled here reduces to conditional power moments
//! `E[V_s^p | V_t = v]`, which are available through three routes:
//!
//! * closed form: constant-MPR model for any exponent; MMM for `p = 0`
//!   (log investor) and `p = 1` (first moment `v + 4 dphi`),
//! * series: the MMM gamma-function series for `p` in `[-1, 0]`,
//!   covering risk aversions `gamma` in `(1, infinity]`,
//! * Monte Carlo: exact-transition sampling for any supported exponent,
//!   with a standard error alongside the estimate.

mod series;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::{mean_and_se, simpson, splitmix64};
use crate::models::GpModel;

/// Default number of Simpson subintervals for consumption-stream pricing.
pub const DEFAULT_STREAM_QUAD_NODES: usize = 256;

/// Default Monte Carlo configuration used when [`Method::MonteCarlo`] is
/// requested through [`gp_power_moment`].
pub const DEFAULT_MC_PATHS: usize = 100_000;
pub const DEFAULT_MC_SEED: u64 = 42;

/// Evaluation route for a conditional power moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Series,
    MonteCarlo,
}

/// A conditional power-moment request `E[V_s^p | V_t = v]`.
///
/// For a CRRA investor with risk aversion `gamma` the relevant exponent is
/// `p = 1/gamma - 1`.
#[derive(Debug, Clone, Copy)]
pub struct PowerMomentQuery {
    pub model: GpModel,
    pub p: f64,
    pub t: f64,
    pub v: f64,
    pub s: f64,
}

impl PowerMomentQuery {
    pub fn new(model: GpModel, p: f64, t: f64, v: f64, s: f64) -> Result<Self> {
        if !(t >= 0.0 && s >= t && t.is_finite() && s.is_finite()) {
            return Err(Error::Domain(format!(
                "need 0 <= t <= s, got t = {t}, s = {s}"
            )));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!(
                "current GP value must be positive, got {v}"
            )));
        }
        if !p.is_finite() {
            return Err(Error::Domain(format!("exponent must be finite, got {p}")));
        }
        Ok(Self { model, p, t, v, s })
    }

    /// Query for the exponent `1/gamma - 1` of a CRRA investor.
    pub fn for_gamma(model: GpModel, gamma: f64, t: f64, v: f64, s: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Domain(format!(
                "risk aversion must be positive, got {gamma}"
            )));
        }
        // gamma = infinity is the inverse-GP moment p = -1.
        let p = if gamma.is_infinite() { -1.0 } else { 1.0 / gamma - 1.0 };
        Self::new(model, p, t, v, s)
    }
}

/// Closed-form moment where one exists.
fn closed_form_moment(model: &GpModel, p: f64, t: f64, v: f64, s: f64) -> Result<f64> {
    if p == 0.0 {
        return Ok(1.0);
    }
    match model {
        GpModel::ConstantMpr(m) => {
            let th2 = m.theta() * m.theta();
            Ok(v.powf(p) * (0.5 * th2 * p * (p + 1.0) * (s - t)).exp())
        }
        GpModel::Mmm(m) => {
            if p == 1.0 {
                let dphi = m.phi(s)? - m.phi(t)?;
                Ok(v + 4.0 * dphi)
            } else {
                Err(Error::UnsupportedMethod(format!(
                    "no MMM closed form for p = {p}; use the series or Monte Carlo"
                )))
            }
        }
    }
}

/// Series moment (MMM only), valid for `p` in `[-1, 0]` and `p = 1`.
fn series_moment(model: &GpModel, p: f64, t: f64, v: f64, s: f64, tol: f64) -> Result<f64> {
    match model {
        GpModel::ConstantMpr(_) => Err(Error::UnsupportedMethod(
            "the gamma-function series applies to the MMM only".into(),
        )),
        GpModel::Mmm(m) => {
            if p <= -2.0 {
                return Err(Error::Divergent(format!(
                    "E[V^p] is infinite under the MMM for p <= -2 (p = {p})"
                )));
            }
            if !((-1.0..=0.0).contains(&p) || p == 1.0) {
                return Err(Error::UnsupportedMethod(format!(
                    "series is stated for gamma in (1, inf] (p in [-1, 0)); got p = {p}; \
                     fall back to Monte Carlo"
                )));
            }
            let dphi = m.phi(s)? - m.phi(t)?;
            series::mmm_moment(p, v, dphi, tol)
        }
    }
}

/// Conditional power moment `E[V_s^p | V_t = v]` via the requested route.
///
/// `tol` is the relative truncation tolerance of the series route; the
/// Monte Carlo route uses the default path count and seed (see
/// [`gp_power_moment_mc`] for full control and the standard error).
pub fn gp_power_moment(q: &PowerMomentQuery, method: Method, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if q.p == 0.0 {
        return Ok(1.0);
    }
    match method {
        Method::ClosedForm => closed_form_moment(&q.model, q.p, q.t, q.v, q.s),
        Method::Series => series_moment(&q.model, q.p, q.t, q.v, q.s, tol),
        Method::MonteCarlo => Ok(gp_power_moment_mc(q, DEFAULT_MC_PATHS, DEFAULT_MC_SEED)?.mean),
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// Monte Carlo moment using one exact transition per path.
pub fn gp_power_moment_mc(q: &PowerMomentQuery, n_paths: usize, seed: u64) -> Result<McEstimate> {
    if n_paths < 2 {
        return Err(Error::InsufficientSample(
            "Monte Carlo needs at least 2 paths".into(),
        ));
    }
    if let (GpModel::Mmm(_), true) = (&q.model, q.p <= -2.0) {
        return Err(Error::Divergent(format!(
            "E[V^p] is infinite under the MMM for p <= -2 (p = {})",
            q.p
        )));
    }
    let mut draws = Vec::with_capacity(n_paths);
    for path in 0..n_paths {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed) ^ splitmix64(path as u64));
        let v_s = q.model.step_exact(q.v, q.t, q.s, &mut rng);
        draws.push(v_s.powf(q.p));
    }
    let (mean, std_error) = mean_and_se(&draws);
    Ok(McEstimate {
        mean,
        std_error,
        n_paths,
    })
}

/// Best analytic route for a moment: closed form first, then the series.
pub(crate) fn analytic_moment(
    model: &GpModel,
    p: f64,
    t: f64,
    v: f64,
    s: f64,
    tol: f64,
) -> Result<f64> {
    match closed_form_moment(model, p, t, v, s) {
        Err(Error::UnsupportedMethod(_)) => series_moment(model, p, t, v, s, tol),
        other => other,
    }
}

/// Derivative in `v` of [`analytic_moment`].
pub(crate) fn analytic_moment_dv(
    model: &GpModel,
    p: f64,
    t: f64,
    v: f64,
    s: f64,
    tol: f64,
) -> Result<f64> {
    if p == 0.0 {
        return Ok(0.0);
    }
    match model {
        GpModel::ConstantMpr(m) => {
            let th2 = m.theta() * m.theta();
            Ok(p * v.powf(p - 1.0) * (0.5 * th2 * p * (p + 1.0) * (s - t)).exp())
        }
        GpModel::Mmm(m) => {
            if p == 1.0 {
                return Ok(1.0);
            }
            if p <= -2.0 {
                return Err(Error::Divergent(format!(
                    "E[V^p] is infinite under the MMM for p <= -2 (p = {p})"
                )));
            }
            if !(-1.0..=0.0).contains(&p) {
                return Err(Error::UnsupportedMethod(format!(
                    "no analytic MMM moment for p = {p}"
                )));
            }
            let dphi = m.phi(s)? - m.phi(t)?;
            series::mmm_moment_dv(p, v, dphi, tol)
        }
    }
}

/// GP-denominated value: `benchmark(a, g) = a / g`.
pub fn benchmark(value: f64, gp_value: f64) -> Result<f64> {
    if !(gp_value > 0.0 && gp_value.is_finite()) {
        return Err(Error::Domain(format!(
            "GP value must be strictly positive, got {gp_value}"
        )));
    }
    Ok(value / gp_value)
}

/// Payoff families priced by [`fair_price`]. Exponents refer to the
/// *benchmarked* payoff: `PowerPayout { exponent: p, .. }` delivers
/// `V_T^{p+1}` at `T`, whose benchmarked value is `V_T^p`.
#[derive(Debug, Clone, Copy)]
pub enum PayoffSpec {
    /// Single payout `V_T^{exponent + 1}` at `maturity`.
    PowerPayout { exponent: f64, maturity: f64 },
    /// Stream with benchmarked rate `e^{-discount_rate * s} V_s^{exponent}`
    /// plus `bequest_weight` units of the benchmarked terminal power at
    /// `maturity`.
    ConsumptionStream {
        exponent: f64,
        discount_rate: f64,
        maturity: f64,
        bequest_weight: f64,
    },
}

/// Minimum (fair) price at time `t`, GP value `v`, of the given payoff:
/// the GP value times the benchmarked conditional expectation. Stream
/// payoffs integrate on [`DEFAULT_STREAM_QUAD_NODES`] Simpson nodes; see
/// [`fair_price_with_nodes`] to change that.
pub fn fair_price(model: &GpModel, t: f64, v: f64, payoff: &PayoffSpec, tol: f64) -> Result<f64> {
    fair_price_with_nodes(model, t, v, payoff, tol, DEFAULT_STREAM_QUAD_NODES)
}

/// [`fair_price`] with an explicit Simpson node count for stream payoffs.
pub fn fair_price_with_nodes(
    model: &GpModel,
    t: f64,
    v: f64,
    payoff: &PayoffSpec,
    tol: f64,
    quad_nodes: usize,
) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Domain(format!("GP value must be positive, got {v}")));
    }
    match *payoff {
        PayoffSpec::PowerPayout { exponent, maturity } => {
            if maturity < t {
                return Err(Error::Domain(format!(
                    "maturity {maturity} precedes valuation time {t}"
                )));
            }
            Ok(v * analytic_moment(model, exponent, t, v, maturity, tol)?)
        }
        PayoffSpec::ConsumptionStream {
            exponent,
            discount_rate,
            maturity,
            bequest_weight,
        } => {
            if maturity < t {
                return Err(Error::Domain(format!(
                    "maturity {maturity} precedes valuation time {t}"
                )));
            }
            if bequest_weight < 0.0 {
                return Err(Error::Domain(format!(
                    "bequest weight must be nonnegative, got {bequest_weight}"
                )));
            }
            let integral = simpson(
                |s| {
                    Ok((-discount_rate * s).exp()
                        * analytic_moment(model, exponent, t, v, s, tol)?)
                },
                t,
                maturity,
                quad_nodes,
            )?;
            let bequest = if bequest_weight > 0.0 {
                bequest_weight
                    * (-discount_rate * maturity).exp()
                    * analytic_moment(model, exponent, t, v, maturity, tol)?
            } else {
                0.0
            };
            Ok(v * (integral + bequest))
        }
    }
}

/// Verdict of a martingale drift test at the three-standard-error level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MartingaleVerdict {
    ConsistentWithMartingale,
    StrictSupermartingaleSignal,
    Inconsistent,
}

/// Mean terminal-minus-initial drift of a set of benchmarked paths.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MartingaleDiagnostic {
    pub mean_drift: f64,
    pub standard_error: f64,
    pub n_paths: usize,
    pub verdict: MartingaleVerdict,
}

/// Tests whether benchmarked paths are consistent with zero drift.
///
/// Each row is one path of benchmarked values (at least initial and
/// terminal entries). The verdict is `ConsistentWithMartingale` when
/// `|mean| <= 3 SE`, `StrictSupermartingaleSignal` when `mean < -3 SE`,
/// and `Inconsistent` when `mean > +3 SE`.
pub fn martingale_check(benchmarked_paths: &[Vec<f64>]) -> Result<MartingaleDiagnostic> {
    if benchmarked_paths.len() < 100 {
        return Err(Error::InsufficientSample(format!(
            "martingale check needs >= 100 paths, got {}",
            benchmarked_paths.len()
        )));
    }
    let mut drifts = Vec::with_capacity(benchmarked_paths.len());
    for (i, row) in benchmarked_paths.iter().enumerate() {
        if row.len() < 2 {
            return Err(Error::Data(format!(
                "path {i} has fewer than 2 benchmarked values"
            )));
        }
        drifts.push(row.last().unwrap() - row.first().unwrap());
    }
    let (mean_drift, standard_error) = mean_and_se(&drifts);
    let verdict = if mean_drift.abs() <= 3.0 * standard_error {
        MartingaleVerdict::ConsistentWithMartingale
    } else if mean_drift < 0.0 {
        MartingaleVerdict::StrictSupermartingaleSignal
    } else {
        MartingaleVerdict::Inconsistent
    };
    Ok(MartingaleDiagnostic {
        mean_drift,
        standard_error,
        n_paths: benchmarked_paths.len(),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{simulate_gp, TimeGrid};
    use approx::assert_relative_eq;

    fn mmm() -> GpModel {
        GpModel::mmm(0.1828, 0.0520).unwrap()
    }

    fn bs() -> GpModel {
        GpModel::constant_mpr(0.2).unwrap()
    }

    #[test]
    fn log_investor_moment_is_exactly_one() {
        for model in [mmm(), bs()] {
            for method in [Method::ClosedForm, Method::Series, Method::MonteCarlo] {
                let q = PowerMomentQuery::for_gamma(model, 1.0, 0.3, 2.7, 8.1).unwrap();
                assert_eq!(gp_power_moment(&q, method, 1e-12).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn mmm_half_gamma_matches_phi_increment() {
        let model = mmm();
        let m = match model {
            GpModel::Mmm(m) => m,
            _ => unreachable!(),
        };
        let q = PowerMomentQuery::for_gamma(model, 0.5, 0.0, 1.0, 10.0).unwrap();
        let expect = 1.0 + 4.0 * m.phi(10.0).unwrap();
        let closed = gp_power_moment(&q, Method::ClosedForm, 1e-12).unwrap();
        assert_relative_eq!(closed, expect, epsilon = 1e-14);
        assert_relative_eq!(closed, 3.39760, epsilon = 1e-4);
    }

    #[test]
    fn constant_mpr_closed_form_example() {
        // gamma = 3 (p = -2/3), theta = 0.2, nine years.
        let q = PowerMomentQuery::for_gamma(bs(), 3.0, 0.0, 1.0, 9.0).unwrap();
        let got = gp_power_moment(&q, Method::ClosedForm, 1e-12).unwrap();
        assert_relative_eq!(got, (-0.04f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(got, 0.96079, epsilon = 1e-5);
    }

    #[test]
    fn series_matches_monte_carlo_for_gamma_three() {
        let q = PowerMomentQuery::for_gamma(mmm(), 3.0, 0.0, 1.0, 10.0).unwrap();
        let series = gp_power_moment(&q, Method::Series, 1e-12).unwrap();
        let mc = gp_power_moment_mc(&q, 100_000, 7).unwrap();
        assert!(
            (series - mc.mean).abs() <= 3.0 * mc.std_error,
            "series {series} vs mc {} +- {}",
            mc.mean,
            mc.std_error
        );
    }

    #[test]
    fn series_matches_monte_carlo_at_interior_states() {
        for (k, &(gamma, t, v, s)) in
            [(2.0, 2.0, 1.7, 12.0), (5.0, 0.5, 0.6, 3.5)].iter().enumerate()
        {
            let q = PowerMomentQuery::for_gamma(mmm(), gamma, t, v, s).unwrap();
            let series = gp_power_moment(&q, Method::Series, 1e-12).unwrap();
            let mc = gp_power_moment_mc(&q, 100_000, 300 + k as u64).unwrap();
            assert!(
                (series - mc.mean).abs() <= 3.0 * mc.std_error,
                "({gamma}, {t}, {v}, {s}): series {series} vs mc {} +- {}",
                mc.mean,
                mc.std_error
            );
        }
    }

    #[test]
    fn series_rejects_unsupported_exponents() {
        // gamma in (0, 1), gamma != 1/2 is outside the stated domain; the
        // Monte Carlo route still covers it.
        let q = PowerMomentQuery::for_gamma(mmm(), 0.7, 0.0, 1.0, 5.0).unwrap();
        assert!(matches!(
            gp_power_moment(&q, Method::Series, 1e-12),
            Err(Error::UnsupportedMethod(_))
        ));
        let mc = gp_power_moment_mc(&q, 5_000, 1).unwrap();
        assert!(mc.mean > 0.0 && mc.std_error > 0.0);
        let q = PowerMomentQuery::new(bs(), -0.5, 0.0, 1.0, 5.0).unwrap();
        assert!(matches!(
            gp_power_moment(&q, Method::Series, 1e-12),
            Err(Error::UnsupportedMethod(_))
        ));
    }

    #[test]
    fn martingale_check_rejects_degenerate_paths() {
        let mut paths = vec![vec![1.0, 1.1]; 150];
        paths[3] = vec![1.0];
        assert!(matches!(martingale_check(&paths), Err(Error::Data(_))));
    }

    #[test]
    fn mmm_divergent_exponent_is_flagged() {
        let q = PowerMomentQuery::new(mmm(), -2.5, 0.0, 1.0, 5.0).unwrap();
        assert!(matches!(
            gp_power_moment(&q, Method::Series, 1e-12),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn gamma_infinity_is_the_inverse_gp_moment() {
        let m = match mmm() {
            GpModel::Mmm(m) => m,
            _ => unreachable!(),
        };
        let q = PowerMomentQuery::for_gamma(mmm(), f64::INFINITY, 0.0, 1.0, 50.0).unwrap();
        assert_eq!(q.p, -1.0);
        let got = gp_power_moment(&q, Method::Series, 1e-13).unwrap();
        let x = 1.0 / (2.0 * m.phi(50.0).unwrap());
        assert_relative_eq!(got, 1.0 - (-x).exp(), max_relative = 1e-10);
    }

    #[test]
    fn tower_property_constant_mpr_is_exact() {
        // Exponents add across an intermediate date.
        let (t, u, s, v, p) = (0.5, 3.0, 9.0, 1.4, -2.0 / 3.0);
        let direct = analytic_moment(&bs(), p, t, v, s, 1e-12).unwrap();
        // E[m(u, V_u, s) | V_t = v] = e^{c(s-u)} E[V_u^p | V_t = v].
        let inner_const = analytic_moment(&bs(), p, u, 1.0, s, 1e-12).unwrap();
        let outer = analytic_moment(&bs(), p, t, v, u, 1e-12).unwrap();
        assert_relative_eq!(direct, inner_const * outer, epsilon = 1e-12);
    }

    #[test]
    fn tower_property_mmm_within_monte_carlo_error() {
        let model = mmm();
        let (t, u, s, v, p) = (0.0, 4.0, 12.0, 1.0, -2.0 / 3.0);
        let direct = analytic_moment(&model, p, t, v, s, 1e-12).unwrap();
        // Nested: average the analytic inner moment over exact draws of V_u.
        let grid = TimeGrid::new(t, u, 1).unwrap();
        let paths = simulate_gp(&model, &grid, 60_000, 17).unwrap();
        let inner: Vec<f64> = paths
            .terminal()
            .iter()
            .map(|&vu| analytic_moment(&model, p, u, vu, s, 1e-12).unwrap())
            .collect();
        let (mean, se) = mean_and_se(&inner);
        assert!(
            (direct - mean).abs() <= 3.0 * se,
            "direct {direct} vs nested {mean} +- {se}"
        );
    }

    #[test]
    fn benchmark_rejects_nonpositive_gp() {
        assert!(benchmark(1.0, 0.0).is_err());
        assert!(benchmark(1.0, -2.0).is_err());
        assert_eq!(benchmark(5.0, 1.0).unwrap(), 5.0);
        assert_eq!(benchmark(865.14, 865.14 * 2.0).unwrap(), 0.5);
    }

    #[test]
    fn fair_price_of_gp_unit_is_v() {
        // Benchmarked payoff V_T^0 = 1: one unit of GP delivered at T.
        for model in [mmm(), bs()] {
            for &(t, v) in &[(0.0, 1.0), (2.0, 3.7), (5.0, 0.4)] {
                let price = fair_price(
                    &model,
                    t,
                    v,
                    &PayoffSpec::PowerPayout {
                        exponent: 0.0,
                        maturity: 20.0,
                    },
                    1e-12,
                )
                .unwrap();
                assert_relative_eq!(price, v, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn fair_price_of_mmm_sqrt_gamma_payoff() {
        // Payoff V_T^{1/gamma} with gamma = 1/2: benchmarked exponent 1.
        let m = match mmm() {
            GpModel::Mmm(m) => m,
            _ => unreachable!(),
        };
        let price = fair_price(
            &mmm(),
            0.0,
            1.0,
            &PayoffSpec::PowerPayout {
                exponent: 1.0,
                maturity: 10.0,
            },
            1e-12,
        )
        .unwrap();
        assert_relative_eq!(price, 1.0 + 4.0 * m.phi(10.0).unwrap(), epsilon = 1e-13);
    }

    #[test]
    fn empty_stream_prices_to_zero() {
        let price = fair_price(
            &mmm(),
            3.0,
            1.5,
            &PayoffSpec::ConsumptionStream {
                exponent: -2.0 / 3.0,
                discount_rate: 0.01,
                maturity: 3.0,
                bequest_weight: 0.0,
            },
            1e-12,
        )
        .unwrap();
        assert_eq!(price, 0.0);
    }

    #[test]
    fn martingale_check_classifies_flat_paths() {
        let paths = vec![vec![1.0, 1.0, 1.0]; 200];
        let diag = martingale_check(&paths).unwrap();
        assert_eq!(diag.mean_drift, 0.0);
        assert_eq!(diag.verdict, MartingaleVerdict::ConsistentWithMartingale);
    }

    #[test]
    fn martingale_check_needs_enough_paths() {
        let paths = vec![vec![1.0, 1.0]; 99];
        assert!(matches!(
            martingale_check(&paths),
            Err(Error::InsufficientSample(_))
        ));
    }

    #[test]
    fn benchmarked_savings_account_under_mmm_is_a_strict_supermartingale() {
        // 1/V over a long horizon: mean drift is significantly negative.
        let model = mmm();
        let grid = TimeGrid::new(0.0, 50.0, 1).unwrap();
        let paths = simulate_gp(&model, &grid, 100_000, 5).unwrap();
        let rows: Vec<Vec<f64>> = paths
            .terminal()
            .iter()
            .map(|&vt| vec![1.0, 1.0 / vt])
            .collect();
        let diag = martingale_check(&rows).unwrap();
        assert_eq!(diag.verdict, MartingaleVerdict::StrictSupermartingaleSignal);
    }
}
