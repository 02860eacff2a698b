//! Optimal value functions, the budget multiplier, optimal plans, and fund
//! holdings.
//!
//! A CRRA investor with risk aversion `gamma`, time preference `delta`,
//! bequest weight `epsilon`, consumption indicator `chi` and horizon `T`
//! consumes and bequeaths power functions of the GP,
//! ```text
//! C*_s = (e^{delta s} lambda)^{-1/gamma} V_s^{1/gamma},
//! V*_T = epsilon^{1/gamma} (e^{delta T} lambda)^{-1/gamma} V_T^{1/gamma},
//! ```
//! where `lambda` clears the initial budget. Pricing that plan off the GP
//! gives the wealth surface as a ratio of moment functionals with exponent
//! `p = 1/gamma - 1`:
//! ```text
//! V*(t,v)/v = V0 * F(t,v) / F(0,1),
//! F(t,v) = chi Int_t^T e^{-(delta/gamma) s} E[V_s^p | V_t=v] ds
//!        + epsilon^{1/gamma} e^{-(delta/gamma) T} E[V_T^p | V_t=v].
//! ```
//! The ratio construction absorbs `lambda`, so `V*(0,1) = V0` holds by
//! construction; the explicit multiplier is `lambda = (F(0,1)/V0)^gamma`.
//!
//! When the discounted GP is scalar Markov, the optimal portfolio holds
//! `dV*/dv (t, V_t)` units of the GP and the remainder in the baseline
//! security (two-fund separation); with an `n`-component Markov state the
//! holdings are the gradient of the value surface (multiple funds).

mod epstein_zin;

pub use epstein_zin::{
    ez_aggregator, ez_aggregator_dc, ez_inverse_dc, ez_plan_crra_reduction, ez_reduction_d,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::{central_diff_richardson, simpson};
use crate::models::{simulate_path, GpModel, TimeGrid};
use crate::pricing::{self, PayoffSpec};

/// Sanity bound on portfolio weights (leverage/shorting cap).
pub const WEIGHT_BOUND: f64 = 5.0;

/// Preference parameters of the investor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preferences {
    gamma: f64,
    delta: f64,
    epsilon: f64,
    chi: u8,
    horizon: f64,
    psi: Option<f64>,
}

impl Preferences {
    fn validate(gamma: f64, delta: f64, epsilon: f64, chi: u8, horizon: f64) -> Result<()> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "risk aversion must be positive, got {gamma}"
            )));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time preference must be nonnegative, got {delta}"
            )));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bequest weight must be nonnegative, got {epsilon}"
            )));
        }
        if chi == 0 && epsilon == 0.0 {
            return Err(Error::InvalidParameter(
                "no objective: terminal-wealth preferences need a positive bequest weight".into(),
            ));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(())
    }

    /// Preferences over terminal wealth only (`chi = 0`).
    pub fn terminal_wealth(gamma: f64, delta: f64, epsilon: f64, horizon: f64) -> Result<Self> {
        Self::validate(gamma, delta, epsilon, 0, horizon)?;
        Ok(Self {
            gamma,
            delta,
            epsilon,
            chi: 0,
            horizon,
            psi: None,
        })
    }

    /// Consumption-savings preferences (`chi = 1`), with or without bequest.
    pub fn consumption(gamma: f64, delta: f64, epsilon: f64, horizon: f64) -> Result<Self> {
        Self::validate(gamma, delta, epsilon, 1, horizon)?;
        Ok(Self {
            gamma,
            delta,
            epsilon,
            chi: 1,
            horizon,
            psi: None,
        })
    }

    /// Attaches an elasticity of intertemporal substitution for the
    /// Epstein-Zin aggregator toolkit.
    pub fn with_psi(mut self, psi: f64) -> Result<Self> {
        if !(psi > 0.0 && psi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "elasticity of intertemporal substitution must be positive, got {psi}"
            )));
        }
        self.psi = Some(psi);
        Ok(self)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn chi(&self) -> u8 {
        self.chi
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn psi(&self) -> Option<f64> {
        self.psi
    }

    /// Moment exponent `p = 1/gamma - 1` of the optimal plan.
    pub fn power_exponent(&self) -> f64 {
        1.0 / self.gamma - 1.0
    }
}

/// The optimal wealth surface `V*(t, v)` for CRRA preferences under a GP
/// model, with the budget multiplier attached.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    prefs: Preferences,
    model: GpModel,
    v0: f64,
    /// `F(0, 1)`: time-0 price factor of the unit-multiplier plan.
    norm: f64,
    lambda: f64,
    quad_nodes: usize,
    tol: f64,
}

impl ValueFunction {
    pub fn new(prefs: Preferences, model: GpModel, v0: f64) -> Result<Self> {
        Self::with_quad_nodes(prefs, model, v0, pricing::DEFAULT_STREAM_QUAD_NODES)
    }

    pub fn with_quad_nodes(
        prefs: Preferences,
        model: GpModel,
        v0: f64,
        quad_nodes: usize,
    ) -> Result<Self> {
        if !(v0 > 0.0 && v0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial wealth must be positive, got {v0}"
            )));
        }
        let tol = 1e-12;
        let mut vf = Self {
            prefs,
            model,
            v0,
            norm: f64::NAN,
            lambda: f64::NAN,
            quad_nodes,
            tol,
        };
        let norm = vf.plan_factor(0.0, 1.0)?;
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numerical(format!(
                "plan price factor at (0, 1) must be positive, got {norm}"
            )));
        }
        vf.norm = norm;
        vf.lambda = (norm / v0).powf(prefs.gamma);
        Ok(vf)
    }

    pub fn prefs(&self) -> &Preferences {
        &self.prefs
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    /// Budget multiplier solving `V*(0,1) = V0`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Price factor `F(t, v)` (see the module docs).
    fn plan_factor(&self, t: f64, v: f64) -> Result<f64> {
        let p = self.prefs.power_exponent();
        let (delta, gamma, t_end) = (self.prefs.delta, self.prefs.gamma, self.prefs.horizon);
        let rate = delta / gamma;
        let mut factor = 0.0;
        if self.prefs.chi == 1 {
            factor += simpson(
                |s| {
                    Ok((-rate * s).exp()
                        * pricing::analytic_moment(&self.model, p, t, v, s, self.tol)?)
                },
                t,
                t_end,
                self.quad_nodes,
            )?;
        }
        if self.prefs.epsilon > 0.0 {
            factor += self.prefs.epsilon.powf(1.0 / gamma)
                * (-rate * t_end).exp()
                * pricing::analytic_moment(&self.model, p, t, v, t_end, self.tol)?;
        }
        Ok(factor)
    }

    /// Derivative of the price factor in `v`.
    fn plan_factor_dv(&self, t: f64, v: f64) -> Result<f64> {
        let p = self.prefs.power_exponent();
        let (delta, gamma, t_end) = (self.prefs.delta, self.prefs.gamma, self.prefs.horizon);
        let rate = delta / gamma;
        let mut factor = 0.0;
        if self.prefs.chi == 1 {
            factor += simpson(
                |s| {
                    Ok((-rate * s).exp()
                        * pricing::analytic_moment_dv(&self.model, p, t, v, s, self.tol)?)
                },
                t,
                t_end,
                self.quad_nodes,
            )?;
        }
        if self.prefs.epsilon > 0.0 {
            factor += self.prefs.epsilon.powf(1.0 / gamma)
                * (-rate * t_end).exp()
                * pricing::analytic_moment_dv(&self.model, p, t, v, t_end, self.tol)?;
        }
        Ok(factor)
    }

    fn check_state(&self, t: f64, v: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.prefs.horizon + 1e-12) {
            return Err(Error::Domain(format!(
                "time {t} outside [0, {}]",
                self.prefs.horizon
            )));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("GP value must be positive, got {v}")));
        }
        Ok(())
    }

    /// Optimal wealth `V*(t, v)`.
    pub fn value(&self, t: f64, v: f64) -> Result<f64> {
        self.check_state(t, v)?;
        Ok(self.v0 * v * self.plan_factor(t, v)? / self.norm)
    }

    /// Benchmarked optimal wealth `V*(t, v) / v`.
    pub fn benchmarked_value(&self, t: f64, v: f64) -> Result<f64> {
        self.check_state(t, v)?;
        Ok(self.v0 * self.plan_factor(t, v)? / self.norm)
    }

    /// Units of the GP to hold at `(t, v)`: `dV*/dv`.
    ///
    /// Uses the analytic moment derivative where available and falls back
    /// to a Richardson-extrapolated central difference otherwise.
    pub fn units_gp(&self, t: f64, v: f64) -> Result<f64> {
        self.check_state(t, v)?;
        match self.plan_factor_dv(t, v) {
            Ok(dv) => Ok(self.v0 * (self.plan_factor(t, v)? + v * dv) / self.norm),
            Err(Error::UnsupportedMethod(_)) => {
                let h = (1e-5 * v.abs()).max(1e-5);
                central_diff_richardson(|x| self.value(t, x), v, h)
            }
            Err(e) => Err(e),
        }
    }

    /// Optimal consumption rate `C*(t, v)`; zero for terminal-wealth
    /// preferences.
    pub fn consumption_rate(&self, t: f64, v: f64) -> Result<f64> {
        self.check_state(t, v)?;
        if self.prefs.chi == 0 {
            return Ok(0.0);
        }
        let g = self.prefs.gamma;
        Ok(((self.prefs.delta * t).exp() * self.lambda).powf(-1.0 / g) * v.powf(1.0 / g))
    }

    /// Optimal bequest for terminal GP value `v`.
    pub fn terminal_wealth(&self, v: f64) -> f64 {
        let g = self.prefs.gamma;
        self.prefs.epsilon.powf(1.0 / g)
            * ((self.prefs.delta * self.prefs.horizon).exp() * self.lambda).powf(-1.0 / g)
            * v.powf(1.0 / g)
    }

    /// Lifetime utility surface `J(t, v)` of the optimal plan.
    ///
    /// For `gamma != 1` this is `lambda V*(t,v) / ((1 - gamma) v)` for any
    /// model; for the log investor it is available in closed form under the
    /// constant-MPR model only.
    pub fn lifetime_utility(&self, t: f64, v: f64) -> Result<f64> {
        self.check_state(t, v)?;
        let g = self.prefs.gamma;
        if g != 1.0 {
            return Ok(self.lambda * self.value(t, v)? / ((1.0 - g) * v));
        }
        let theta = match &self.model {
            GpModel::ConstantMpr(m) => m.theta(),
            GpModel::Mmm(_) => {
                return Err(Error::UnsupportedMethod(
                    "log-investor lifetime utility needs E[ln V], not available in closed \
                     form under the MMM"
                        .into(),
                ))
            }
        };
        // J = Int_t^T e^{-d s} [ln v + th^2 (s-t)/2 - d s - ln l] ds
        //   + eps e^{-d T} [ln eps - d T - ln l + ln v + th^2 (T-t)/2]
        let (d, t_end, eps, l) = (self.prefs.delta, self.prefs.horizon, self.prefs.epsilon, self.lambda);
        let th2 = theta * theta;
        let mut j = 0.0;
        if self.prefs.chi == 1 {
            let (i0, i1) = if d > 0.0 {
                let i0 = ((-d * t).exp() - (-d * t_end).exp()) / d;
                let i1 = (t * (-d * t).exp() - t_end * (-d * t_end).exp()) / d + i0 / d;
                (i0, i1)
            } else {
                (t_end - t, 0.5 * (t_end * t_end - t * t))
            };
            j += (v.ln() - l.ln()) * i0 + 0.5 * th2 * (i1 - t * i0) - d * i1;
        }
        if eps > 0.0 {
            j += eps
                * (-d * t_end).exp()
                * (eps.ln() - d * t_end - l.ln() + v.ln() + 0.5 * th2 * (t_end - t));
        }
        Ok(j)
    }
}

/// Optimal wealth for terminal-wealth CRRA preferences (`chi = 0`).
pub fn value_terminal_crra(
    prefs: &Preferences,
    model: &GpModel,
    v0: f64,
    t: f64,
    v: f64,
) -> Result<f64> {
    if prefs.chi() != 0 {
        return Err(Error::InvalidParameter(
            "value_terminal_crra needs terminal-wealth preferences (chi = 0)".into(),
        ));
    }
    ValueFunction::new(*prefs, *model, v0)?.value(t, v)
}

/// Optimal wealth for consumption-savings CRRA preferences (`chi = 1`).
pub fn value_consumption_crra(
    prefs: &Preferences,
    model: &GpModel,
    v0: f64,
    t: f64,
    v: f64,
) -> Result<f64> {
    if prefs.chi() != 1 {
        return Err(Error::InvalidParameter(
            "value_consumption_crra needs consumption preferences (chi = 1)".into(),
        ));
    }
    ValueFunction::new(*prefs, *model, v0)?.value(t, v)
}

/// Time-0 fair price of the CRRA plan with multiplier `lambda`.
pub fn plan_price(prefs: &Preferences, model: &GpModel, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "multiplier must be positive, got {lambda}"
        )));
    }
    let g = prefs.gamma();
    let p = prefs.power_exponent();
    let scale = lambda.powf(-1.0 / g);
    let price = if prefs.chi() == 1 {
        pricing::fair_price(
            model,
            0.0,
            1.0,
            &PayoffSpec::ConsumptionStream {
                exponent: p,
                discount_rate: prefs.delta() / g,
                maturity: prefs.horizon(),
                bequest_weight: prefs.epsilon().powf(1.0 / g),
            },
            1e-12,
        )?
    } else {
        prefs.epsilon().powf(1.0 / g)
            * (-prefs.delta() / g * prefs.horizon()).exp()
            * pricing::fair_price(
                model,
                0.0,
                1.0,
                &PayoffSpec::PowerPayout {
                    exponent: p,
                    maturity: prefs.horizon(),
                },
                1e-12,
            )?
    };
    Ok(scale * price)
}

/// Solves the initial budget `plan_price(lambda) = v0` for the multiplier.
///
/// The priced plan is strictly decreasing in `lambda`, so a bracket on
/// `[1e-12, 1e12]` plus bisection in `ln lambda` converges. `tol` is the
/// absolute tolerance on the priced budget.
pub fn solve_budget_lambda(
    prefs: &Preferences,
    model: &GpModel,
    v0: f64,
    tol: f64,
) -> Result<f64> {
    if !(v0 > 0.0 && v0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "initial wealth must be positive, got {v0}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let (mut lo, mut hi) = (1e-12f64.ln(), 1e12f64.ln());
    let g_at = |ln_l: f64| -> Result<f64> { Ok(plan_price(prefs, model, ln_l.exp())? - v0) };
    let (g_lo, g_hi) = (g_at(lo)?, g_at(hi)?);
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::Solver(format!(
            "failed to bracket the budget multiplier in [1e-12, 1e12]: \
             price range [{}, {}] around target {v0}",
            g_hi + v0,
            g_lo + v0
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g_mid = g_at(mid)?;
        if g_mid.abs() <= tol {
            return Ok(mid.exp());
        }
        if g_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() < 1e-15 {
            break;
        }
    }
    let l = (0.5 * (lo + hi)).exp();
    if (plan_price(prefs, model, l)? - v0).abs() <= tol {
        Ok(l)
    } else {
        Err(Error::Solver(
            "budget bisection did not reach the requested tolerance".into(),
        ))
    }
}

/// Optimal terminal wealth and consumption rate for given GP values.
///
/// Both outputs are strictly increasing in the GP value; consumption is
/// identically zero for terminal-wealth preferences.
pub fn optimal_plan_crra(
    prefs: &Preferences,
    lambda: f64,
    gp_terminal: f64,
    s: f64,
    gp_at_s: f64,
) -> Result<(f64, f64)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "multiplier must be positive, got {lambda}"
        )));
    }
    if !(gp_terminal > 0.0 && gp_at_s > 0.0) {
        return Err(Error::Domain("GP values must be positive".into()));
    }
    if !(0.0..=prefs.horizon()).contains(&s) {
        return Err(Error::Domain(format!(
            "time {s} outside [0, {}]",
            prefs.horizon()
        )));
    }
    let g = prefs.gamma();
    let terminal = prefs.epsilon().powf(1.0 / g)
        * ((prefs.delta() * prefs.horizon()).exp() * lambda).powf(-1.0 / g)
        * gp_terminal.powf(1.0 / g);
    let consumption = if prefs.chi() == 1 {
        ((prefs.delta() * s).exp() * lambda).powf(-1.0 / g) * gp_at_s.powf(1.0 / g)
    } else {
        0.0
    };
    Ok((terminal, consumption))
}

/// Two-fund decomposition at `(t, v)`: units of GP and the value parked in
/// the riskless baseline security. The two legs recompose to `V*(t, v)`.
pub fn two_fund_holdings(vf: &ValueFunction, t: f64, v: f64) -> Result<(f64, f64)> {
    let units = vf.units_gp(t, v)?;
    if !units.is_finite() {
        return Err(Error::Numerical(format!(
            "GP holding at ({t}, {v}) is not finite"
        )));
    }
    let value = vf.value(t, v)?;
    Ok((units, value - units * v))
}

/// Gradient holdings for a multi-fund value surface: component `i` is the
/// number of units of fund `i`, estimated by Richardson-extrapolated
/// central differences.
pub fn multi_fund_holdings<F>(surface: F, t: f64, m: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> f64,
{
    let mut grad = Vec::with_capacity(m.len());
    let mut state = m.to_vec();
    for i in 0..m.len() {
        let h = (1e-5 * m[i].abs()).max(1e-5);
        let base = m[i];
        let d = central_diff_richardson(
            |x| {
                state[i] = x;
                let y = surface(t, &state);
                if y.is_finite() {
                    Ok(y)
                } else {
                    Err(Error::Numerical(format!(
                        "surface evaluation at fund {i} is not finite"
                    )))
                }
            },
            base,
            h,
        )?;
        state[i] = base;
        grad.push(d);
    }
    Ok(grad)
}

/// Root-mean-square relative replication error of discrete two-fund
/// rebalancing against the optimal terminal payout.
///
/// Simulates `n_paths` exact GP paths over the preference horizon with
/// `steps_per_year` rebalances per year; between rebalances holdings stay
/// fixed and (for consumption preferences) consumption is withdrawn at the
/// start-of-step rate.
pub fn two_fund_replication_rms(
    vf: &ValueFunction,
    n_paths: usize,
    steps_per_year: usize,
    seed: u64,
) -> Result<f64> {
    if n_paths == 0 || steps_per_year == 0 {
        return Err(Error::InvalidParameter(
            "need at least one path and one step per year".into(),
        ));
    }
    if vf.prefs().epsilon() <= 0.0 {
        return Err(Error::InvalidParameter(
            "replication target needs a positive bequest".into(),
        ));
    }
    let t_end = vf.prefs().horizon();
    let n_steps = (t_end * steps_per_year as f64).round().max(1.0) as usize;
    let grid = TimeGrid::new(0.0, t_end, n_steps)?;
    let dt = grid.dt();
    let withdraw = vf.prefs().chi() == 1;
    let mut sum_sq = 0.0;
    for p in 0..n_paths {
        let path = simulate_path(vf.model(), &grid, seed, p as u64);
        let mut wealth = vf.value(0.0, 1.0)?;
        for i in 0..n_steps {
            let (t, v) = (grid.time(i), path[i]);
            let units = vf.units_gp(t, v)?;
            if withdraw {
                wealth -= vf.consumption_rate(t, v)? * dt;
            }
            wealth += units * (path[i + 1] - v);
        }
        let target = vf.terminal_wealth(path[n_steps]);
        let rel = (wealth - target) / target;
        sum_sq += rel * rel;
    }
    Ok((sum_sq / n_paths as f64).sqrt())
}

/// A rebalancing rule for the backtester.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StrategySpec {
    /// Two-fund optimal strategy driven by a [`ValueFunction`].
    OptimalTwoFund,
    /// Everything in the GP proxy at all times.
    GpAllIn,
    /// Constant fraction of wealth in the GP proxy.
    FixedMix { weight: f64 },
    /// Constant mean-variance weight `mu / (sigma^2 A)`.
    MeanVariance { mu: f64, sigma: f64, risk_aversion: f64 },
    /// Everything in the baseline security.
    RiskFree,
}

impl StrategySpec {
    pub fn fixed_mix(weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight.abs() <= WEIGHT_BOUND) {
            return Err(Error::Strategy(format!(
                "fixed-mix weight must lie in [-{WEIGHT_BOUND}, {WEIGHT_BOUND}], got {weight}"
            )));
        }
        Ok(Self::FixedMix { weight })
    }

    pub fn mean_variance(mu: f64, sigma: f64, risk_aversion: f64) -> Result<Self> {
        if !(sigma > 0.0 && risk_aversion > 0.0 && mu.is_finite()) {
            return Err(Error::Strategy(format!(
                "mean-variance needs sigma > 0 and A > 0, got mu={mu}, sigma={sigma}, A={risk_aversion}"
            )));
        }
        let s = Self::MeanVariance {
            mu,
            sigma,
            risk_aversion,
        };
        let w = s.constant_weight().unwrap();
        if !(w.is_finite() && w.abs() <= WEIGHT_BOUND) {
            return Err(Error::Strategy(format!(
                "mean-variance weight {w} outside [-{WEIGHT_BOUND}, {WEIGHT_BOUND}]"
            )));
        }
        Ok(s)
    }

    /// The constant risky weight, if the rule has one.
    pub fn constant_weight(&self) -> Option<f64> {
        match self {
            StrategySpec::OptimalTwoFund => None,
            StrategySpec::GpAllIn => Some(1.0),
            StrategySpec::FixedMix { weight } => Some(*weight),
            StrategySpec::MeanVariance {
                mu,
                sigma,
                risk_aversion,
            } => Some(mu / (sigma * sigma * risk_aversion)),
            StrategySpec::RiskFree => Some(0.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::OptimalTwoFund => "optimal_two_fund",
            StrategySpec::GpAllIn => "gp_all_in",
            StrategySpec::FixedMix { .. } => "fixed_mix",
            StrategySpec::MeanVariance { .. } => "mean_variance",
            StrategySpec::RiskFree => "risk_free",
        }
    }

    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![("kind".to_string(), self.name().to_string())];
        match self {
            StrategySpec::FixedMix { weight } => {
                kv.push(("weight".into(), format!("{weight:.16e}")));
            }
            StrategySpec::MeanVariance {
                mu,
                sigma,
                risk_aversion,
            } => {
                kv.push(("mu".into(), format!("{mu:.16e}")));
                kv.push(("sigma".into(), format!("{sigma:.16e}")));
                kv.push(("risk_aversion".into(), format!("{risk_aversion:.16e}")));
            }
            _ => {}
        }
        kv
    }

    pub fn from_key_values(pairs: &[(String, String)]) -> Result<Self> {
        let get = |key: &str| -> Result<f64> {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .ok_or_else(|| Error::Data(format!("missing key `{key}`")))?
                .1
                .parse::<f64>()
                .map_err(|e| Error::Data(format!("bad value for `{key}`: {e}")))
        };
        let kind = pairs
            .iter()
            .find(|(k, _)| k == "kind")
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Data("missing key `kind`".into()))?;
        match kind {
            "optimal_two_fund" => Ok(Self::OptimalTwoFund),
            "gp_all_in" => Ok(Self::GpAllIn),
            "risk_free" => Ok(Self::RiskFree),
            "fixed_mix" => Self::fixed_mix(get("weight")?),
            "mean_variance" => Self::mean_variance(get("mu")?, get("sigma")?, get("risk_aversion")?),
            other => Err(Error::Data(format!("unknown strategy kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests;
