//! `longrun verify`: the built-in diagnostic suite.
//!
//! Runs the pricing identities, budget identities, PDE residual, martingale
//! diagnostics and hedge-replication checks on synthetic cases, printing
//! one PASS/FAIL line per check. Exit code 1 when anything fails.
//! `--perturb` injects a surface perturbation so the PDE residual detector
//! must fail (a self-test of the verifier).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use serde::Serialize;

use longrun::models::{simulate_gp, GpModel, MmmModel, TimeGrid};
use longrun::pde::{pde_residual, Grid2D};
use longrun::pricing::{
    fair_price, gp_power_moment, gp_power_moment_mc, martingale_check, MartingaleVerdict, Method,
    PayoffSpec, PowerMomentQuery,
};
use longrun::strategy::{
    ez_aggregator_dc, ez_plan_crra_reduction, optimal_plan_crra, plan_price, solve_budget_lambda,
    two_fund_holdings, two_fund_replication_rms, Preferences, ValueFunction,
};

use crate::config::ConfigOverlay;
use crate::{emit_exit, CliError, CliResult, DEFAULT_SEED};

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Series truncation tolerance used throughout
    #[arg(long)]
    tol: Option<f64>,
    /// Reduced path counts for fast runs
    #[arg(long)]
    quick: bool,
    /// Inject a value-surface perturbation (the PDE check must then fail)
    #[arg(long)]
    perturb: bool,
    /// JSON report path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct CheckResult {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    perturb: bool,
    checks: Vec<CheckResult>,
    all_passed: bool,
}

struct Suite {
    seed: u64,
    tol: f64,
    paths: usize,
    perturb: bool,
    checks: Vec<CheckResult>,
}

impl Suite {
    fn record(&mut self, name: &str, passed: bool, detail: String) {
        println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    fn run_all(&mut self) -> CliResult<()> {
        let mmm = GpModel::Mmm(MmmModel::new(0.1828, 0.0520).map_err(CliError::from)?);
        let bs = GpModel::constant_mpr(0.2).map_err(CliError::from)?;

        // Log-investor moments are identically one.
        {
            let mut worst = 0.0f64;
            for model in [mmm, bs] {
                for &(t, v, s) in &[(0.0, 1.0, 10.0), (3.0, 0.4, 55.0), (12.0, 7.0, 12.5)] {
                    let q = PowerMomentQuery::for_gamma(model, 1.0, t, v, s)?;
                    worst = worst.max(
                        (gp_power_moment(&q, Method::ClosedForm, self.tol)? - 1.0).abs(),
                    );
                }
            }
            self.record(
                "log_moment_identity",
                worst == 0.0,
                format!("max |E[V^0] - 1| = {worst:.2e}"),
            );
        }

        // gamma = 1/2 first-moment identity under the MMM.
        {
            let m = MmmModel::new(0.1828, 0.0520)?;
            let mut worst = 0.0f64;
            for &(t, v, s) in &[(0.0, 1.0, 10.0), (2.0, 2.5, 30.0)] {
                let expect = v + 4.0 * (m.phi(s)? - m.phi(t)?);
                for method in [Method::ClosedForm, Method::Series] {
                    let q = PowerMomentQuery::for_gamma(mmm, 0.5, t, v, s)?;
                    let got = gp_power_moment(&q, method, self.tol)?;
                    worst = worst.max((got - expect).abs() / expect);
                }
            }
            self.record(
                "mmm_first_moment_identity",
                worst <= 1e-10,
                format!("max rel err {worst:.2e}"),
            );
        }

        // Series against Monte Carlo at gamma = 3.
        {
            let q = PowerMomentQuery::for_gamma(mmm, 3.0, 0.0, 1.0, 10.0)?;
            let series = gp_power_moment(&q, Method::Series, self.tol)?;
            let mc = gp_power_moment_mc(&q, self.paths, self.seed)?;
            let z = (series - mc.mean) / mc.std_error;
            self.record(
                "series_vs_monte_carlo",
                z.abs() <= 3.0,
                format!("series {series:.6} vs MC {:.6} (z = {z:+.2})", mc.mean),
            );
        }

        // Constant-MPR closed form against Monte Carlo.
        {
            let q = PowerMomentQuery::for_gamma(bs, 3.0, 0.0, 1.0, 9.0)?;
            let closed = gp_power_moment(&q, Method::ClosedForm, self.tol)?;
            let mc = gp_power_moment_mc(&q, self.paths, self.seed + 1)?;
            let z = (closed - mc.mean) / mc.std_error;
            self.record(
                "constant_mpr_closed_vs_monte_carlo",
                z.abs() <= 3.0,
                format!("closed {closed:.6} vs MC {:.6} (z = {z:+.2})", mc.mean),
            );
        }

        // The GP itself prices fairly at its current value.
        {
            let mut worst = 0.0f64;
            for model in [mmm, bs] {
                for &(t, v) in &[(0.0, 1.0), (5.0, 3.3)] {
                    let price = fair_price(
                        &model,
                        t,
                        v,
                        &PayoffSpec::PowerPayout {
                            exponent: 0.0,
                            maturity: 30.0,
                        },
                        self.tol,
                    )?;
                    worst = worst.max((price - v).abs() / v);
                }
            }
            self.record(
                "fair_price_of_gp",
                worst <= 1e-14,
                format!("max rel err {worst:.2e}"),
            );
        }

        // Budget identities across preferences and models.
        {
            let mut worst = 0.0f64;
            for model in [mmm, bs] {
                for &gamma in &[0.5, 1.0, 3.0] {
                    for &chi in &[0u8, 1] {
                        for &eps in &[0.0, 1.0] {
                            if chi == 0 && eps == 0.0 {
                                continue;
                            }
                            let prefs = if chi == 0 {
                                Preferences::terminal_wealth(gamma, 0.03, eps, 10.0)?
                            } else {
                                Preferences::consumption(gamma, 0.03, eps, 10.0)?
                            };
                            let vf = ValueFunction::new(prefs, model, 1.0)?;
                            worst = worst.max((vf.value(0.0, 1.0)? - 1.0).abs());
                            let lambda = solve_budget_lambda(&prefs, &model, 1.0, 1e-10)?;
                            worst = worst.max((plan_price(&prefs, &model, lambda)? - 1.0).abs());
                        }
                    }
                }
            }
            self.record(
                "budget_identity",
                worst <= 1e-8,
                format!("max |V*(0,1) - V0| = {worst:.2e}"),
            );
        }

        // Log-investor closed form and model-invariant holdings.
        {
            let prefs = Preferences::consumption(1.0, 0.03, 1.0, 10.0)?;
            let vf_a = ValueFunction::new(prefs, mmm, 1.0)?;
            let vf_b = ValueFunction::new(prefs, bs, 1.0)?;
            let mut worst = 0.0f64;
            let mut invariant = true;
            for &t in &[0.0f64, 4.0, 9.0] {
                for &v in &[0.5f64, 1.0, 2.0] {
                    let expect = (0.03 + (-0.03 * (t - 10.0)).exp() - 1.0)
                        / (0.03 + (0.03f64 * 10.0).exp() - 1.0)
                        * v;
                    worst = worst.max((vf_a.value(t, v)? - expect).abs() / expect);
                }
                let (ua, _) = two_fund_holdings(&vf_a, t, 1.3)?;
                let (ub, _) = two_fund_holdings(&vf_b, t, 2.6)?;
                invariant &= ua == ub;
            }
            self.record(
                "log_investor_closed_form",
                worst <= 1e-12 && invariant,
                format!("max rel err {worst:.2e}, holdings model-invariant: {invariant}"),
            );
        }

        // PDE residual for the log consumption solution; with --perturb
        // the detector must trip, which fails the suite by design.
        {
            let prefs = Preferences::consumption(1.0, 0.03, 1.0, 10.0)?;
            let vf = ValueFunction::new(prefs, mmm, 1.0)?;
            let grid = Grid2D::uniform(0.0, 10.0, 101, 0.5, 3.0, 101)?;
            let perturb = self.perturb;
            let report = pde_residual(
                |t, v| {
                    let base = vf.value(t, v)?;
                    Ok(if perturb { base + 0.01 * v * t.sin() } else { base })
                },
                |t, v| vf.consumption_rate(t, v),
                |t, v| mmm.squared_diffusion(t, v),
                |v| vf.terminal_wealth(v),
                &grid,
            )?;
            self.record(
                "pde_residual_log_consumption",
                report.interior_rms < 1e-6,
                format!(
                    "interior rms {:.2e}{}",
                    report.interior_rms,
                    if perturb { " (perturbed surface)" } else { "" }
                ),
            );
        }

        // Martingale diagnostics: flat benchmarked GP and the long-horizon
        // benchmarked savings account.
        {
            let flat = vec![vec![1.0, 1.0]; 200];
            let diag = martingale_check(&flat)?;
            let grid = TimeGrid::new(0.0, 50.0, 1)?;
            let paths = simulate_gp(&mmm, &grid, self.paths, self.seed + 2)?;
            let rows: Vec<Vec<f64>> = paths
                .terminal()
                .iter()
                .map(|&vt| vec![1.0, 1.0 / vt])
                .collect();
            let savings = martingale_check(&rows)?;
            let ok = diag.verdict == MartingaleVerdict::ConsistentWithMartingale
                && savings.verdict == MartingaleVerdict::StrictSupermartingaleSignal;
            self.record(
                "martingale_diagnostics",
                ok,
                format!(
                    "benchmarked GP consistent; savings-account drift {:.3} flagged {:?}",
                    savings.mean_drift, savings.verdict
                ),
            );
        }

        // Epstein-Zin reduction to the CRRA plan.
        {
            let gamma = 3.0;
            let crra = Preferences::consumption(gamma, 0.03, 0.0, 10.0)?;
            let vf = ValueFunction::new(crra, mmm, 1.0)?;
            let ez = crra.with_psi(1.0 / gamma)?;
            let mut worst = 0.0f64;
            for &s in &[0.0, 5.0, 9.5] {
                for &v in &[0.5, 2.0] {
                    let c_ez = ez_plan_crra_reduction(&ez, 0.03 * vf.lambda(), s, v)?;
                    let (_, c_crra) = optimal_plan_crra(&crra, vf.lambda(), 1.0, s, v)?;
                    worst = worst.max((c_ez - c_crra).abs() / c_crra);
                }
            }
            let l = -1.0;
            let c = 2.0;
            let h = 1e-5 * c;
            let psi = 1.0 / gamma;
            let prefs = crra.with_psi(psi)?;
            let fd = (ez_aggregator_dc(c + h, l, &prefs)? - ez_aggregator_dc(c - h, l, &prefs)?)
                / (2.0 * h);
            let ident = -ez_aggregator_dc(c, l, &prefs)? / (psi * c);
            let ident_err = (fd - ident).abs() / ident.abs();
            self.record(
                "epstein_zin_reduction",
                worst <= 1e-12 && ident_err <= 1e-6,
                format!("plan mismatch {worst:.2e}, curvature identity err {ident_err:.2e}"),
            );
        }

        // Discrete hedge replication improves with rebalancing frequency.
        {
            let prefs = Preferences::terminal_wealth(3.0, 0.0, 1.0, 2.0)?;
            let vf = ValueFunction::new(prefs, mmm, 1.0)?;
            let n = (self.paths / 50).max(200);
            let monthly = two_fund_replication_rms(&vf, n, 12, self.seed + 3)?;
            let weekly = two_fund_replication_rms(&vf, n, 52, self.seed + 3)?;
            self.record(
                "hedge_replication",
                weekly < monthly,
                format!("RMS rel err monthly {monthly:.4} -> weekly {weekly:.4}"),
            );
        }

        Ok(())
    }
}

pub fn run(args: &VerifyArgs) -> CliResult<ExitCode> {
    let cfg = ConfigOverlay::load(args.config.as_deref())?;
    let seed = cfg.pick("seed", args.seed, DEFAULT_SEED)?;
    let tol = cfg.pick("tol", args.tol, 1e-12)?;
    let out = cfg.pick_opt::<PathBuf>("out", args.out.clone())?;
    cfg.finish()?;

    let mut suite = Suite {
        seed,
        tol,
        paths: if args.quick { 20_000 } else { 100_000 },
        perturb: args.perturb,
        checks: Vec::new(),
    };
    suite.run_all()?;

    let all_passed = suite.checks.iter().all(|c| c.passed);
    let report = VerifyReport {
        seed,
        perturb: args.perturb,
        checks: suite.checks,
        all_passed,
    };
    if let Some(path) = &out {
        let text = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Run(format!("serialization failed: {e}")))?;
        std::fs::write(path, format!("{text}\n")).map_err(|e| CliError::Run(e.to_string()))?;
    }
    println!(
        "{}: {}/{} checks passed",
        if all_passed { "OK" } else { "FAILED" },
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len()
    );
    emit_exit(all_passed)
}
