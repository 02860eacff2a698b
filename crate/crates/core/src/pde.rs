//! Finite-difference verification of constructed value surfaces.
//!
//! The benchmarked consumption-adjusted wealth of a self-financing
//! strategy is driftless, which forces the optimal wealth surface of a
//! scalar-Markov GP to satisfy
//! ```text
//! dV*/dt + 1/2 sigma^2(t, v) d2V*/dv2 + chi C*(t, v) = 0,
//! ```
//! where `sigma^2(t, v)` is the squared absolute diffusion of the GP
//! (`theta^2 v^2` for the constant-MPR model, `alpha(t) v` for the MMM),
//! with terminal condition `V*(T, v)` equal to the inverse marginal
//! bequest and spatial limits `V* -> 0` as `v -> 0`, `V* -> infinity` as
//! `v -> infinity`. Alongside it, the consumption plan must satisfy the
//! HJB first-order condition `dJ*/dV* = f'(C*)`.
//!
//! This module verifies surfaces against those conditions with central
//! differences; it deliberately does not solve the PDE (the expectation
//! representation in `strategy` already constructs `V*` more accurately
//! than a grid scheme would).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::strategy::{Preferences, ValueFunction};

/// Rectangular verification grid; both axes strictly increasing, values
/// strictly positive.
#[derive(Debug, Clone, Serialize)]
pub struct Grid2D {
    t_nodes: Vec<f64>,
    v_nodes: Vec<f64>,
}

impl Grid2D {
    pub fn new(t_nodes: Vec<f64>, v_nodes: Vec<f64>) -> Result<Self> {
        if t_nodes.len() < 5 || v_nodes.len() < 5 {
            return Err(Error::InvalidParameter(format!(
                "need at least 5 nodes per axis, got {} x {}",
                t_nodes.len(),
                v_nodes.len()
            )));
        }
        if !t_nodes.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(
                "time nodes must be strictly increasing".into(),
            ));
        }
        if !(v_nodes[0] > 0.0 && v_nodes.windows(2).all(|w| w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "state nodes must be strictly positive and increasing".into(),
            ));
        }
        Ok(Self { t_nodes, v_nodes })
    }

    pub fn uniform(t0: f64, t1: f64, nt: usize, v_lo: f64, v_hi: f64, nv: usize) -> Result<Self> {
        if !(t0 < t1 && v_lo < v_hi) {
            return Err(Error::InvalidParameter(
                "grid bounds must be ordered".into(),
            ));
        }
        let t_nodes = (0..nt)
            .map(|i| t0 + (t1 - t0) * i as f64 / (nt - 1) as f64)
            .collect();
        let v_nodes = (0..nv)
            .map(|j| v_lo + (v_hi - v_lo) * j as f64 / (nv - 1) as f64)
            .collect();
        Self::new(t_nodes, v_nodes)
    }

    /// The same domain with both axes refined twofold.
    pub fn refined(&self) -> Result<Self> {
        Self::uniform(
            self.t_nodes[0],
            *self.t_nodes.last().unwrap(),
            2 * self.t_nodes.len() - 1,
            self.v_nodes[0],
            *self.v_nodes.last().unwrap(),
            2 * self.v_nodes.len() - 1,
        )
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t_nodes
    }

    pub fn v_nodes(&self) -> &[f64] {
        &self.v_nodes
    }
}

/// Residual statistics of a surface against the pricing PDE.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub max_abs_residual: f64,
    pub interior_rms: f64,
    /// Max relative mismatch of the surface against the terminal condition.
    pub boundary_max_error: f64,
    pub grid: Grid2D,
}

/// Evaluates the PDE residual of `value` on the interior of `grid`.
///
/// `consumption` must return `chi C*(t, v)` (identically zero for
/// terminal-wealth preferences), `squared_diffusion` the squared absolute
/// diffusion of the GP, and `terminal` the required terminal value
/// `V*(T, v)`. Central differences on the grid; edges enter only through
/// their neighbors.
pub fn pde_residual<FV, FC, FS, FT>(
    value: FV,
    consumption: FC,
    squared_diffusion: FS,
    terminal: FT,
    grid: &Grid2D,
) -> Result<ResidualReport>
where
    FV: Fn(f64, f64) -> Result<f64>,
    FC: Fn(f64, f64) -> Result<f64>,
    FS: Fn(f64, f64) -> f64,
    FT: Fn(f64) -> f64,
{
    let (ts, vs) = (&grid.t_nodes, &grid.v_nodes);
    let mut table = vec![vec![0.0; vs.len()]; ts.len()];
    for (i, &t) in ts.iter().enumerate() {
        for (j, &v) in vs.iter().enumerate() {
            let val = value(t, v)?;
            if !val.is_finite() {
                return Err(Error::Numerical(format!(
                    "surface value at ({t}, {v}) is not finite"
                )));
            }
            table[i][j] = val;
        }
    }

    let mut max_abs: f64 = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for i in 1..ts.len() - 1 {
        for j in 1..vs.len() - 1 {
            let (t, v) = (ts[i], vs[j]);
            let dt = (table[i + 1][j] - table[i - 1][j]) / (ts[i + 1] - ts[i - 1]);
            let (h_m, h_p) = (vs[j] - vs[j - 1], vs[j + 1] - vs[j]);
            let dvv = 2.0
                * (h_m * table[i][j + 1] - (h_m + h_p) * table[i][j] + h_p * table[i][j - 1])
                / (h_p * h_m * (h_p + h_m));
            let r = dt + 0.5 * squared_diffusion(t, v) * dvv + consumption(t, v)?;
            max_abs = max_abs.max(r.abs());
            sum_sq += r * r;
            count += 1;
        }
    }

    let mut boundary_max_error: f64 = 0.0;
    for (j, &v) in vs.iter().enumerate() {
        let target = terminal(v);
        let err = (table[ts.len() - 1][j] - target).abs() / target.abs().max(1e-300);
        boundary_max_error = boundary_max_error.max(err);
    }

    Ok(ResidualReport {
        max_abs_residual: max_abs,
        interior_rms: (sum_sq / count as f64).sqrt(),
        boundary_max_error,
        grid: grid.clone(),
    })
}

/// Checks a constructed value function against its terminal condition and
/// spatial limits.
///
/// Returns the maximal relative error of `V*(T, v)` against the inverse
/// marginal bequest over `v_grid`; fails if the surface is not strictly
/// increasing in `v` or does not decay toward zero at the small-`v` end.
pub fn boundary_check(vf: &ValueFunction, v_grid: &[f64]) -> Result<f64> {
    if vf.prefs().epsilon() <= 0.0 {
        return Err(Error::InvalidParameter(
            "terminal condition needs a positive bequest weight".into(),
        ));
    }
    if v_grid.len() < 3 || !(v_grid[0] > 0.0) || !v_grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter(
            "v_grid must be >= 3 strictly increasing positive values".into(),
        ));
    }
    let t_end = vf.prefs().horizon();
    let mut max_err: f64 = 0.0;
    for &v in v_grid {
        let target = vf.terminal_wealth(v);
        let got = vf.value(t_end, v)?;
        max_err = max_err.max((got - target).abs() / target);
    }
    // Spatial behavior at a few interior dates: strictly increasing with
    // small values vanishing relative to the midpoint.
    let mid = v_grid[v_grid.len() / 2];
    for &t in &[0.0, 0.5 * t_end, t_end] {
        let mut last = 0.0;
        for &v in v_grid {
            let val = vf.value(t, v)?;
            if val <= last {
                return Err(Error::Domain(format!(
                    "value surface is not strictly increasing in v at t = {t}"
                )));
            }
            last = val;
        }
        let lo = vf.value(t, v_grid[0] * 1e-3)?;
        if lo >= vf.value(t, mid)? {
            return Err(Error::Domain(format!(
                "value surface does not decay toward v = 0 at t = {t}"
            )));
        }
    }
    Ok(max_err)
}

/// Max violation of the HJB first-order condition `f'(C*) = dJ*/dV*` on
/// the grid interior, with both surface derivatives taken by central
/// differences in `v` and `f'` the time-additive CRRA marginal utility.
pub fn hjb_foc_check<FJ, FV, FC>(
    j_surface: FJ,
    v_surface: FV,
    consumption: FC,
    prefs: &Preferences,
    grid: &Grid2D,
) -> Result<f64>
where
    FJ: Fn(f64, f64) -> Result<f64>,
    FV: Fn(f64, f64) -> Result<f64>,
    FC: Fn(f64, f64) -> Result<f64>,
{
    if prefs.chi() != 1 {
        return Err(Error::InvalidParameter(
            "the first-order condition concerns consumption plans (chi = 1)".into(),
        ));
    }
    let (ts, vs) = (&grid.t_nodes, &grid.v_nodes);
    let mut max_violation: f64 = 0.0;
    for &t in &ts[1..ts.len() - 1] {
        for j in 1..vs.len() - 1 {
            let v = vs[j];
            let dj = j_surface(t, vs[j + 1])? - j_surface(t, vs[j - 1])?;
            let dv = v_surface(t, vs[j + 1])? - v_surface(t, vs[j - 1])?;
            if dv == 0.0 {
                return Err(Error::Numerical(format!(
                    "flat wealth surface at ({t}, {v}); cannot form dJ/dV"
                )));
            }
            let dj_dv = dj / dv;
            let c = consumption(t, v)?;
            let marginal = (-prefs.delta() * t).exp() * c.powf(-prefs.gamma());
            max_violation = max_violation.max((marginal - dj_dv).abs());
        }
    }
    Ok(max_violation)
}
