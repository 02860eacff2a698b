//! `longrun`: reproducible experiments on growth-optimal-portfolio
//! pricing and long-run investment strategies.
//!
//! Subcommands: `calibrate`, `simulate`, `price`, `solve`, `verify`,
//! `backtest`. Every command is deterministic given its flags, config
//! file, input data and seed (default seed: 42). Exit codes: 0 success,
//! 1 verification failure, 2 I/O or data error, 64 usage error.

mod backtest_cmd;
mod config;
mod verify_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use longrun::backtest::{load_return_series, MonthDate, SeriesFormat};
use longrun::models::{calibrate_mmm, simulate_gp_threaded, GpModel, TimeGrid};
use longrun::pricing::{self, Method, PowerMomentQuery};
use longrun::strategy::{solve_budget_lambda, two_fund_holdings, Preferences, ValueFunction};

use config::ConfigOverlay;

/// Fixed default seed, so runs reproduce without any flags.
pub const DEFAULT_SEED: u64 = 42;

pub enum CliError {
    Usage(String),
    Run(String),
}

impl From<longrun::Error> for CliError {
    fn from(e: longrun::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "longrun",
    version,
    about = "Growth-optimal-portfolio pricing, optimal strategies, and backtests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit minimal-market-model parameters from a monthly series
    Calibrate(CalibrateArgs),
    /// Simulate exact discounted-GP paths to CSV
    Simulate(SimulateArgs),
    /// Evaluate a conditional power moment and its fair price
    Price(PriceArgs),
    /// Solve the budget multiplier and report the value function
    Solve(SolveArgs),
    /// Run the built-in verification suite
    Verify(verify_cmd::VerifyArgs),
    /// Backtest strategies on a historical series
    Backtest(backtest_cmd::BacktestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Generic,
    Shiller,
}

impl FormatArg {
    pub fn to_series_format(self) -> SeriesFormat {
        match self {
            FormatArg::Generic => SeriesFormat::GenericCsv,
            FormatArg::Shiller => SeriesFormat::ShillerCsv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// Constant market price of risk (lognormal GP)
    Bs,
    /// Minimal market model
    Mmm,
}

/// Model flags shared by several commands.
#[derive(Args, Debug, Clone)]
pub struct ModelFlags {
    /// GP model kind
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Market price of risk for --model bs
    #[arg(long)]
    theta: Option<f64>,
    /// Initial scaling for --model mmm
    #[arg(long)]
    alpha0: Option<f64>,
    /// Net growth rate for --model mmm
    #[arg(long)]
    eta: Option<f64>,
}

impl ModelFlags {
    /// Resolves flags (with config fallback) into a model; defaults to the
    /// fitted MMM parameters alpha0 = 0.1828, eta = 0.0520.
    pub fn resolve(&self, cfg: &ConfigOverlay) -> CliResult<GpModel> {
        let kind = match cfg.pick_enum("model", self.model)? {
            Some(k) => k,
            None => ModelArg::Mmm,
        };
        match kind {
            ModelArg::Bs => {
                let theta = cfg.pick("theta", self.theta, 0.2)?;
                GpModel::constant_mpr(theta).map_err(|e| CliError::Usage(e.to_string()))
            }
            ModelArg::Mmm => {
                let alpha0 = cfg.pick("alpha0", self.alpha0, 0.1828)?;
                let eta = cfg.pick("eta", self.eta, 0.0520)?;
                GpModel::mmm(alpha0, eta).map_err(|e| CliError::Usage(e.to_string()))
            }
        }
    }
}

#[derive(Args)]
struct CalibrateArgs {
    /// Flat key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV path
    #[arg(long)]
    data: Option<PathBuf>,
    /// Input layout
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// First month of the calibration window (YYYY-MM; default: series start)
    #[arg(long)]
    calib_start: Option<String>,
    /// Last month of the calibration window (YYYY-MM; default: series end)
    #[arg(long)]
    calib_end: Option<String>,
    /// Output file for the fitted parameters
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_calibrate(args: &CalibrateArgs) -> CliResult<ExitCode> {
    let cfg = ConfigOverlay::load(args.config.as_deref())?;
    let data = cfg
        .pick_opt::<PathBuf>("data", args.data.clone())?
        .ok_or_else(|| CliError::Usage("--data is required".into()))?;
    let format = cfg
        .pick_enum("format", args.format)?
        .unwrap_or(FormatArg::Generic);
    let calib_start = cfg.pick_opt::<String>("calib_start", args.calib_start.clone())?;
    let calib_end = cfg.pick_opt::<String>("calib_end", args.calib_end.clone())?;
    let out = cfg.pick_opt::<PathBuf>("out", args.out.clone())?;
    cfg.finish()?;

    let series = load_return_series(&data, format.to_series_format())?;
    let parse_date = |s: &str| -> CliResult<MonthDate> {
        s.parse::<MonthDate>()
            .map_err(|e| CliError::Usage(format!("bad date `{s}`: {e}")))
    };
    let lo = match &calib_start {
        Some(s) => series
            .position_of(parse_date(s)?)
            .ok_or_else(|| CliError::Run(format!("calibration start {s} outside series")))?,
        None => 0,
    };
    let hi = match &calib_end {
        Some(s) => series
            .position_of(parse_date(s)?)
            .ok_or_else(|| CliError::Run(format!("calibration end {s} outside series")))?,
        None => series.index().len() - 1,
    };
    if hi <= lo {
        return Err(CliError::Usage("empty calibration window".into()));
    }
    let fitted = calibrate_mmm(&series.index()[lo..=hi], 1.0 / 12.0)?;
    let model = GpModel::Mmm(fitted);
    let mut text = String::new();
    for (k, v) in model.to_key_values() {
        text.push_str(&format!("{k}={v}\n"));
    }
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(&path, text).map_err(|e| CliError::Run(e.to_string()))?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    /// Horizon in years
    #[arg(long)]
    horizon: Option<f64>,
    /// Number of time steps
    #[arg(long)]
    steps: Option<usize>,
    /// Number of paths
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for path simulation
    #[arg(long)]
    threads: Option<usize>,
    /// Output CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<ExitCode> {
    let cfg = ConfigOverlay::load(args.config.as_deref())?;
    let model = args.model.resolve(&cfg)?;
    let horizon = cfg.pick("horizon", args.horizon, 10.0)?;
    let steps = cfg.pick("steps", args.steps, 120usize)?;
    let paths = cfg.pick("paths", args.paths, 8usize)?;
    let seed = cfg.pick("seed", args.seed, DEFAULT_SEED)?;
    let threads = cfg.pick("threads", args.threads, 1usize)?;
    let out = cfg.pick_opt::<PathBuf>("out", args.out.clone())?;
    cfg.finish()?;

    let grid = TimeGrid::new(0.0, horizon, steps).map_err(|e| CliError::Usage(e.to_string()))?;
    let set = simulate_gp_threaded(&model, &grid, paths, seed, threads)?;
    let mut csv = String::from("t");
    for p in 0..set.n_paths() {
        csv.push_str(&format!(",path_{p}"));
    }
    csv.push('\n');
    for (i, t) in grid.times().iter().enumerate() {
        csv.push_str(&format!("{t:.16e}"));
        for p in 0..set.n_paths() {
            csv.push_str(&format!(",{:.16e}", set.path(p)[i]));
        }
        csv.push('\n');
    }
    match out {
        Some(path) => std::fs::write(&path, csv).map_err(|e| CliError::Run(e.to_string()))?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    Closed,
    Series,
    Mc,
}

#[derive(Args)]
struct PriceArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    /// Risk aversion (exponent p = 1/gamma - 1)
    #[arg(long)]
    gamma: Option<f64>,
    /// Valuation time
    #[arg(long)]
    t: Option<f64>,
    /// Current GP value
    #[arg(long)]
    v: Option<f64>,
    /// Target date
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Series truncation tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Monte Carlo path count for --method mc
    #[arg(long)]
    mc_paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct PriceOutput {
    model: GpModel,
    gamma: f64,
    p: f64,
    t: f64,
    v: f64,
    s: f64,
    method: String,
    moment: f64,
    std_error: Option<f64>,
    fair_price: f64,
}

fn cmd_price(args: &PriceArgs) -> CliResult<ExitCode> {
    let cfg = ConfigOverlay::load(args.config.as_deref())?;
    let model = args.model.resolve(&cfg)?;
    let gamma = cfg.pick("gamma", args.gamma, 3.0)?;
    let t = cfg.pick("t", args.t, 0.0)?;
    let v = cfg.pick("v", args.v, 1.0)?;
    let s = cfg.pick("s", args.s, 10.0)?;
    let method = cfg.pick_enum("method", args.method)?.unwrap_or(MethodArg::Auto);
    let tol = cfg.pick("tol", args.tol, 1e-12)?;
    let mc_paths = cfg.pick("mc_paths", args.mc_paths, 100_000usize)?;
    let seed = cfg.pick("seed", args.seed, DEFAULT_SEED)?;
    let out = cfg.pick_opt::<PathBuf>("out", args.out.clone())?;
    cfg.finish()?;

    let query = PowerMomentQuery::for_gamma(model, gamma, t, v, s)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (moment, std_error, used) = match method {
        MethodArg::Closed => (gp_price(&query, Method::ClosedForm, tol)?, None, "closed_form"),
        MethodArg::Series => (gp_price(&query, Method::Series, tol)?, None, "series"),
        MethodArg::Mc => {
            let est = pricing::gp_power_moment_mc(&query, mc_paths, seed)?;
            (est.mean, Some(est.std_error), "monte_carlo")
        }
        MethodArg::Auto => match gp_price(&query, Method::ClosedForm, tol) {
            Ok(m) => (m, None, "closed_form"),
            Err(_) => match gp_price(&query, Method::Series, tol) {
                Ok(m) => (m, None, "series"),
                Err(_) => {
                    let est = pricing::gp_power_moment_mc(&query, mc_paths, seed)?;
                    (est.mean, Some(est.std_error), "monte_carlo")
                }
            },
        },
    };
    let output = PriceOutput {
        model,
        gamma,
        p: query.p,
        t,
        v,
        s,
        method: used.to_string(),
        moment,
        std_error,
        fair_price: v * moment,
    };
    emit_json(&output, out.as_deref())
}

fn gp_price(q: &PowerMomentQuery, method: Method, tol: f64) -> CliResult<f64> {
    Ok(pricing::gp_power_moment(q, method, tol)?)
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long)]
    gamma: Option<f64>,
    /// Time preference rate
    #[arg(long)]
    delta: Option<f64>,
    /// Bequest weight
    #[arg(long)]
    epsilon: Option<f64>,
    /// 1 for consumption-savings, 0 for terminal wealth
    #[arg(long)]
    chi: Option<u8>,
    /// Horizon in years
    #[arg(long)]
    horizon: Option<f64>,
    /// Initial wealth
    #[arg(long)]
    v0: Option<f64>,
    /// Budget solver tolerance
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SolveOutput {
    model: GpModel,
    gamma: f64,
    delta: f64,
    epsilon: f64,
    chi: u8,
    horizon: f64,
    v0: f64,
    lambda: f64,
    lambda_bisection: f64,
    value_at_origin: f64,
    units_gp_at_origin: f64,
    riskfree_value_at_origin: f64,
    consumption_rate_at_origin: f64,
}

fn cmd_solve(args: &SolveArgs) -> CliResult<ExitCode> {
    let cfg = ConfigOverlay::load(args.config.as_deref())?;
    let model = args.model.resolve(&cfg)?;
    let gamma = cfg.pick("gamma", args.gamma, 3.0)?;
    let delta = cfg.pick("delta", args.delta, 0.0)?;
    let epsilon = cfg.pick("epsilon", args.epsilon, 1.0)?;
    let chi = cfg.pick("chi", args.chi, 0u8)?;
    let horizon = cfg.pick("horizon", args.horizon, 10.0)?;
    let v0 = cfg.pick("v0", args.v0, 1.0)?;
    let tol = cfg.pick("tol", args.tol, 1e-10)?;
    let out = cfg.pick_opt::<PathBuf>("out", args.out.clone())?;
    cfg.finish()?;

    let prefs = match chi {
        0 => Preferences::terminal_wealth(gamma, delta, epsilon, horizon),
        1 => Preferences::consumption(gamma, delta, epsilon, horizon),
        other => return Err(CliError::Usage(format!("chi must be 0 or 1, got {other}"))),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let vf = ValueFunction::new(prefs, model, v0)?;
    let lambda_bisection = solve_budget_lambda(&prefs, &model, v0, tol)?;
    let (units, riskfree) = two_fund_holdings(&vf, 0.0, 1.0)?;
    let output = SolveOutput {
        model,
        gamma,
        delta,
        epsilon,
        chi,
        horizon,
        v0,
        lambda: vf.lambda(),
        lambda_bisection,
        value_at_origin: vf.value(0.0, 1.0)?,
        units_gp_at_origin: units,
        riskfree_value_at_origin: riskfree,
        consumption_rate_at_origin: vf.consumption_rate(0.0, 1.0)?,
    };
    emit_json(&output, out.as_deref())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&std::path::Path>) -> CliResult<ExitCode> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Run(format!("serialization failed: {e}")))?;
    println!("{text}");
    if let Some(path) = out {
        std::fs::write(path, format!("{text}\n")).map_err(|e| CliError::Run(e.to_string()))?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Exit 0 on success, 1 on verification failure.
pub fn emit_exit(passed: bool) -> CliResult<ExitCode> {
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    // Die quietly when stdout is a closed pipe (`longrun ... | head`),
    // like other line-oriented unix tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successful exits; anything else is
            // a usage error (exit 64).
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    let result = match &cli.command {
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Price(args) => cmd_price(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => verify_cmd::run(args),
        Command::Backtest(args) => backtest_cmd::run(args),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(64)
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
