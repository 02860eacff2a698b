//! Discounted growth-optimal-portfolio (GP) process models and exact path
//! simulation.
//!
//! Both models describe the GP denominated in the locally risk-free
//! baseline security, normalized to `V_0 = 1`. The defining property of a
//! GP is that its instantaneous drift equals its squared volatility, so
//! each model is pinned down by a volatility specification:
//!
//! * [`ConstantMprModel`]: constant market price of risk `theta`:
//!   ```text
//!   dV = V (theta^2 dt + theta dW)
//!   ```
//!   `ln V` increments are Gaussian with mean `theta^2 dt / 2` and variance
//!   `theta^2 dt`, so steps are drawn exactly.
//!
//! * [`MmmModel`]: the minimal market model. The discounted GP is a
//!   squared Bessel process of dimension four run in the transformed time
//!   ```text
//!   phi(t) = alpha0 / (4 eta) * (exp(eta t) - 1),
//!   ```
//!   i.e. `V_t = X_{phi(t)}` with `dX = 4 du + 2 sqrt(X) dW_u`. Transitions
//!   are exact noncentral chi-square draws: dimension four permits sampling
//!   a step of size `dphi` from state `v` as
//!   ```text
//!   (sqrt(dphi) Z1 + sqrt(v))^2 + dphi (Z2^2 + Z3^2 + Z4^2)
//!   ```
//!   with independent standard normals `Z`. The squared absolute diffusion
//!   of `V` is `alpha(t) v` with `alpha(t) = alpha0 exp(eta t)`, a
//!   state-dependent market price of risk `sqrt(alpha(t) / v)`.
//!
//! Simulation derives one random substream per path from `(seed, path)`,
//! so path `p` is a function of the seed and its index alone: results are
//! bit-reproducible and independent of how many paths are requested or how
//! work is scheduled across threads.

mod calibrate;

pub use calibrate::calibrate_mmm;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::splitmix64;

/// Identifier of the per-path substream derivation rule stored in
/// [`PathSet`].
pub const STREAM_RULE: &str = "chacha8(splitmix64 chain over (seed, path))";

/// Constant market-price-of-risk GP model (lognormal discounted GP).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantMprModel {
    theta: f64,
}

impl ConstantMprModel {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "market price of risk must be positive and finite, got {theta}"
            )));
        }
        Ok(Self { theta })
    }

    /// Market price of risk per square-root year.
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Minimal market model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MmmModel {
    alpha0: f64,
    eta: f64,
}

impl MmmModel {
    pub fn new(alpha0: f64, eta: f64) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha0 must be positive and finite, got {alpha0}"
            )));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eta must be positive and finite, got {eta}"
            )));
        }
        Ok(Self { alpha0, eta })
    }

    /// Initial scaling parameter.
    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// Net growth rate per year.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Exponential scaling function `alpha(t) = alpha0 exp(eta t)`.
    pub fn alpha(&self, t: f64) -> f64 {
        self.alpha0 * (self.eta * t).exp()
    }

    /// Transformed time `phi(t) = alpha0 / (4 eta) * (exp(eta t) - 1)`.
    ///
    /// Strictly increasing and convex with `phi(0) = 0`; this is the clock
    /// under which the discounted GP is a standard squared Bessel process
    /// of dimension four.
    pub fn phi(&self, t: f64) -> Result<f64> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::Domain(format!(
                "phi requires a nonnegative finite time, got {t}"
            )));
        }
        // exp_m1 keeps the eta -> 0 limit (alpha0 t / 4) accurate.
        Ok(self.alpha0 / (4.0 * self.eta) * (self.eta * t).exp_m1())
    }
}

/// Discounted GP model: either parametrization behind one interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GpModel {
    ConstantMpr(ConstantMprModel),
    Mmm(MmmModel),
}

impl GpModel {
    pub fn constant_mpr(theta: f64) -> Result<Self> {
        Ok(Self::ConstantMpr(ConstantMprModel::new(theta)?))
    }

    pub fn mmm(alpha0: f64, eta: f64) -> Result<Self> {
        Ok(Self::Mmm(MmmModel::new(alpha0, eta)?))
    }

    /// All models are normalized to start at one.
    pub fn initial_value(&self) -> f64 {
        1.0
    }

    /// Squared absolute diffusion coefficient of `dV` at `(t, v)`:
    /// `theta^2 v^2` for the constant-MPR model, `alpha(t) v` for the MMM.
    pub fn squared_diffusion(&self, t: f64, v: f64) -> f64 {
        match self {
            GpModel::ConstantMpr(m) => m.theta * m.theta * v * v,
            GpModel::Mmm(m) => m.alpha(t) * v,
        }
    }

    /// Draws `V_{t1}` given `V_{t0} = v` from the exact transition law.
    pub fn step_exact<R: rand::Rng + ?Sized>(&self, v: f64, t0: f64, t1: f64, rng: &mut R) -> f64 {
        debug_assert!(t1 >= t0);
        match self {
            GpModel::ConstantMpr(m) => {
                let dt = t1 - t0;
                let z: f64 = StandardNormal.sample(rng);
                v * (0.5 * m.theta * m.theta * dt + m.theta * dt.sqrt() * z).exp()
            }
            GpModel::Mmm(m) => {
                let dphi = m.alpha0 / (4.0 * m.eta)
                    * ((m.eta * t1).exp() - (m.eta * t0).exp());
                if dphi == 0.0 {
                    return v;
                }
                let z1: f64 = StandardNormal.sample(rng);
                let z2: f64 = StandardNormal.sample(rng);
                let z3: f64 = StandardNormal.sample(rng);
                let z4: f64 = StandardNormal.sample(rng);
                let radial = dphi.sqrt() * z1 + v.sqrt();
                radial * radial + dphi * (z2 * z2 + z3 * z3 + z4 * z4)
            }
        }
    }

    /// Flat key-value serialization of the parameters.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        match self {
            GpModel::ConstantMpr(m) => vec![
                ("model".into(), "bs".into()),
                ("theta".into(), format!("{:.16e}", m.theta)),
            ],
            GpModel::Mmm(m) => vec![
                ("model".into(), "mmm".into()),
                ("alpha0".into(), format!("{:.16e}", m.alpha0)),
                ("eta".into(), format!("{:.16e}", m.eta)),
            ],
        }
    }

    /// Parses the output of [`GpModel::to_key_values`].
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
            .find(|(k, _)| k == "model")
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Data("missing key `model`".into()))?;
        match kind {
            "bs" => Self::constant_mpr(get("theta")?),
            "mmm" => Self::mmm(get("alpha0")?, get("eta")?),
            other => Err(Error::Data(format!("unknown model kind `{other}`"))),
        }
    }
}

impl From<ConstantMprModel> for GpModel {
    fn from(m: ConstantMprModel) -> Self {
        GpModel::ConstantMpr(m)
    }
}

impl From<MmmModel> for GpModel {
    fn from(m: MmmModel) -> Self {
        GpModel::Mmm(m)
    }
}

/// Equally spaced time grid on `[t0, t1]` with `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(Error::InvalidParameter(format!(
                "need t0 < t1, got [{t0}, {t1}]"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
        }
        Ok(Self { t0, t1, n_steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }

    /// Node `i` for `i` in `0..=n_steps`.
    pub fn time(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n_steps);
        if i == self.n_steps {
            self.t1
        } else {
            self.t0 + self.dt() * i as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }
}

/// Simulated discounted-GP trajectories with their RNG provenance.
#[derive(Debug, Clone)]
pub struct PathSet {
    pub grid: TimeGrid,
    /// `values[p][i]` is path `p` at grid node `i`; column 0 is the common
    /// initial value.
    pub values: Vec<Vec<f64>>,
    pub seed: u64,
    pub stream_rule: &'static str,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        self.values.len()
    }

    pub fn path(&self, p: usize) -> &[f64] {
        &self.values[p]
    }

    /// Terminal value of every path.
    pub fn terminal(&self) -> Vec<f64> {
        self.values.iter().map(|row| *row.last().unwrap()).collect()
    }
}

/// Dedicated RNG for path `p` under `seed`.
fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed) ^ splitmix64(path ^ 0x5851_F42D_4C95_7F2D);
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Simulates one path on `grid` using the substream for `(seed, path)`.
///
/// The returned vector has `grid.n_steps() + 1` entries starting at the
/// model's initial value.
pub fn simulate_path(model: &GpModel, grid: &TimeGrid, seed: u64, path: u64) -> Vec<f64> {
    let mut rng = path_rng(seed, path);
    let mut out = Vec::with_capacity(grid.n_steps() + 1);
    let mut v = model.initial_value();
    out.push(v);
    for i in 0..grid.n_steps() {
        v = model.step_exact(v, grid.time(i), grid.time(i + 1), &mut rng);
        out.push(v);
    }
    out
}

/// Simulates `n_paths` exact trajectories of the discounted GP.
///
/// Per-step conditional distributions match the model transition law, and
/// output is a deterministic function of `(model, grid, n_paths, seed)`.
pub fn simulate_gp(model: &GpModel, grid: &TimeGrid, n_paths: usize, seed: u64) -> Result<PathSet> {
    simulate_gp_threaded(model, grid, n_paths, seed, 1)
}

/// Same as [`simulate_gp`] with paths split across `threads` workers.
///
/// The per-path substream rule makes the result identical to the
/// single-threaded one.
pub fn simulate_gp_threaded(
    model: &GpModel,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    threads: usize,
) -> Result<PathSet> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be >= 1".into()));
    }
    let threads = threads.max(1).min(n_paths);
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); n_paths];
    if threads == 1 {
        for (p, row) in values.iter_mut().enumerate() {
            *row = simulate_path(model, grid, seed, p as u64);
        }
    } else {
        let chunk = n_paths.div_ceil(threads);
        std::thread::scope(|scope| {
            for (c, slot) in values.chunks_mut(chunk).enumerate() {
                let model = *model;
                let grid = *grid;
                scope.spawn(move || {
                    for (off, row) in slot.iter_mut().enumerate() {
                        let p = (c * chunk + off) as u64;
                        *row = simulate_path(&model, &grid, seed, p);
                    }
                });
            }
        });
    }
    Ok(PathSet {
        grid: *grid,
        values,
        seed,
        stream_rule: STREAM_RULE,
    })
}
