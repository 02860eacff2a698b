//! Growth-optimal-portfolio (GP) based minimum pricing and long-run
//! investment strategies.
//!
//! The discounted GP is the strictly positive portfolio with maximal
//! expected log growth; its inverse is the tradeable stochastic discount
//! factor, so the minimal price of a payoff is the GP value times the
//! conditional expectation of the GP-denominated ("benchmarked") payoff
//! under the physical measure. Everything in this crate is built on that
//! pricing rule:
//!
//! * [`models`]: discounted-GP process models (constant market price of
//!   risk, minimal market model), exact path simulation, and calibration
//!   from a historical proxy series.
//! * [`pricing`]: conditional power-moment engines (closed forms, a
//!   gamma-function series, Monte Carlo), the fair-pricing operator, and
//!   martingale diagnostics for benchmarked processes.
//! * [`strategy`]: CRRA/log optimal value functions, the budget
//!   multiplier, optimal consumption/terminal-wealth plans, two-fund and
//!   multi-fund holdings, and the Epstein-Zin aggregator toolkit.
//! * [`pde`]: finite-difference residual verification of constructed
//!   value surfaces against the pricing PDE, boundary conditions, and the
//!   HJB first-order condition.
//! * [`backtest`]: historical data ingestion and a monthly-rebalancing
//!   engine comparing the optimal strategy with common alternatives.

// Negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod error;
pub mod math;
pub mod models;
pub mod pde;
pub mod pricing;
pub mod strategy;

pub use error::{Error, Result};
