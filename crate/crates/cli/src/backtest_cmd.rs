//! `longrun backtest`: wealth paths and total-return tables on a
//! historical monthly series.
//!
//! Emits plot-ready CSV of the wealth paths, optional start/end-decade
//! total-return matrices, and a JSON envelope; numbers in machine formats
//! carry 17 significant digits, the stdout table two decimals. Outputs are
//! byte-identical across runs with the same inputs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use serde::Serialize;

use longrun::backtest::{
    load_return_series, run_strategy, total_return_table, wealth_paths_csv, year_window,
    BacktestReport, MonthDate, OptimalConfig, ReturnSeries, TotalReturnTable,
};
use longrun::models::{calibrate_mmm, GpModel};
use longrun::strategy::StrategySpec;

use crate::config::ConfigOverlay;
use crate::{CliError, CliResult, FormatArg};

#[derive(Args)]
pub struct BacktestArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV path
    #[arg(long)]
    data: Option<PathBuf>,
    /// Input layout
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Comma list of strategies (all, optimal, gp, sixty_forty,
    /// mean_variance, risk_free, `fixed_mix=<w>`)
    #[arg(long)]
    strategy: Option<String>,
    /// Window start: YYYY (meaning December of that year) or YYYY-MM
    #[arg(long)]
    start: Option<String>,
    /// Window end: YYYY (meaning January of that year) or YYYY-MM
    #[arg(long)]
    end: Option<String>,
    /// Risk aversion of the optimal strategy
    #[arg(long)]
    gamma: Option<f64>,
    /// Time preference of the optimal strategy
    #[arg(long)]
    delta: Option<f64>,
    /// MMM initial scaling for the optimal strategy
    #[arg(long)]
    alpha0: Option<f64>,
    /// MMM net growth rate for the optimal strategy
    #[arg(long)]
    eta: Option<f64>,
    /// Fit the MMM from the data instead of using --alpha0/--eta
    #[arg(long)]
    calibrate: bool,
    /// Calibration window start (YYYY-MM), with --calibrate
    #[arg(long)]
    calib_start: Option<String>,
    /// Calibration window end (YYYY-MM), with --calibrate
    #[arg(long)]
    calib_end: Option<String>,
    /// Also emit decade-by-decade total-return tables
    #[arg(long)]
    table: bool,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct StrategyEnvelope {
    strategy: StrategySpec,
    params: Vec<(String, String)>,
    total_return: f64,
    wealth_path: Vec<f64>,
    matrix: Option<TotalReturnTable>,
}

#[derive(Serialize)]
struct BacktestEnvelope {
    data_rows: usize,
    start: MonthDate,
    end: MonthDate,
    model: GpModel,
    gamma: f64,
    dates: Vec<MonthDate>,
    strategies: Vec<StrategyEnvelope>,
}

fn parse_window_date(raw: &str, start_of_window: bool) -> CliResult<MonthDate> {
    if raw.contains('-') || raw.contains('.') {
        raw.parse::<MonthDate>()
            .map_err(|e| CliError::Usage(format!("bad date `{raw}`: {e}")))
    } else {
        let year: i32 = raw
            .parse()
            .map_err(|_| CliError::Usage(format!("bad year `{raw}`")))?;
        let (s, e) = year_window(year, year);
        Ok(if start_of_window { s } else { e })
    }
}

fn parse_strategies(raw: &str) -> CliResult<Vec<StrategySpec>> {
    let mut specs = Vec::new();
    for token in raw.split(',').map(|t| t.trim()).filter(|t| !t.is_empty()) {
        match token {
            "all" => {
                specs.extend([
                    StrategySpec::OptimalTwoFund,
                    StrategySpec::GpAllIn,
                    StrategySpec::fixed_mix(0.6).map_err(CliError::from)?,
                    StrategySpec::mean_variance(0.06, 0.2, 6.0).map_err(CliError::from)?,
                    StrategySpec::RiskFree,
                ]);
            }
            "optimal" => specs.push(StrategySpec::OptimalTwoFund),
            "gp" => specs.push(StrategySpec::GpAllIn),
            "sixty_forty" => specs.push(StrategySpec::fixed_mix(0.6).map_err(CliError::from)?),
            "mean_variance" => {
                specs.push(StrategySpec::mean_variance(0.06, 0.2, 6.0).map_err(CliError::from)?)
            }
            "risk_free" => specs.push(StrategySpec::RiskFree),
            other => {
                if let Some(w) = other.strip_prefix("fixed_mix=") {
                    let weight: f64 = w
                        .parse()
                        .map_err(|_| CliError::Usage(format!("bad fixed_mix weight `{w}`")))?;
                    specs.push(StrategySpec::fixed_mix(weight).map_err(CliError::from)?);
                } else {
                    return Err(CliError::Usage(format!("unknown strategy `{other}`")));
                }
            }
        }
    }
    if specs.is_empty() {
        return Err(CliError::Usage("no strategies selected".into()));
    }
    Ok(specs)
}

fn slice_for_calibration(
    series: &ReturnSeries,
    start: Option<&str>,
    end: Option<&str>,
) -> CliResult<(usize, usize)> {
    let lo = match start {
        Some(s) => {
            let d = s
                .parse::<MonthDate>()
                .map_err(|e| CliError::Usage(format!("bad date `{s}`: {e}")))?;
            series
                .position_of(d)
                .ok_or_else(|| CliError::Run(format!("calibration start {s} outside series")))?
        }
        None => 0,
    };
    let hi = match end {
        Some(s) => {
            let d = s
                .parse::<MonthDate>()
                .map_err(|e| CliError::Usage(format!("bad date `{s}`: {e}")))?;
            series
                .position_of(d)
                .ok_or_else(|| CliError::Run(format!("calibration end {s} outside series")))?
        }
        None => series.index().len() - 1,
    };
    if hi <= lo {
        return Err(CliError::Usage("empty calibration window".into()));
    }
    Ok((lo, hi))
}

pub fn run(args: &BacktestArgs) -> CliResult<ExitCode> {
    let cfg = ConfigOverlay::load(args.config.as_deref())?;
    let data = cfg
        .pick_opt::<PathBuf>("data", args.data.clone())?
        .ok_or_else(|| CliError::Usage("--data is required".into()))?;
    let format = cfg
        .pick_enum("format", args.format)?
        .unwrap_or(FormatArg::Shiller);
    let strategy_raw = cfg.pick("strategy", args.strategy.clone(), "all".to_string())?;
    let start_raw = cfg.pick_opt::<String>("start", args.start.clone())?;
    let end_raw = cfg.pick_opt::<String>("end", args.end.clone())?;
    let gamma = cfg.pick("gamma", args.gamma, 3.0)?;
    let delta = cfg.pick("delta", args.delta, 0.0)?;
    let alpha0 = cfg.pick("alpha0", args.alpha0, 0.1828)?;
    let eta = cfg.pick("eta", args.eta, 0.0520)?;
    let calib_start = cfg.pick_opt::<String>("calib_start", args.calib_start.clone())?;
    let calib_end = cfg.pick_opt::<String>("calib_end", args.calib_end.clone())?;
    let out_dir = cfg.pick("out", args.out.clone(), PathBuf::from("backtest_out"))?;
    cfg.finish()?;

    let series = load_return_series(&data, format.to_series_format())?;
    let start = match &start_raw {
        Some(raw) => parse_window_date(raw, true)?,
        None => series.first_date(),
    };
    let end = match &end_raw {
        Some(raw) => parse_window_date(raw, false)?,
        None => series.last_date(),
    };

    let model = if args.calibrate {
        let (lo, hi) = slice_for_calibration(&series, calib_start.as_deref(), calib_end.as_deref())?;
        let fitted = calibrate_mmm(&series.index()[lo..=hi], 1.0 / 12.0)?;
        println!(
            "calibrated MMM on {}..{}: alpha0 = {:.6}, eta = {:.6}",
            series.dates()[lo],
            series.dates()[hi],
            fitted.alpha0(),
            fitted.eta()
        );
        GpModel::Mmm(fitted)
    } else {
        GpModel::mmm(alpha0, eta).map_err(|e| CliError::Usage(e.to_string()))?
    };
    let optimal_cfg = OptimalConfig {
        model,
        gamma,
        delta,
    };

    let specs = parse_strategies(&strategy_raw)?;
    let months = end.months_since(start);
    if months <= 0 {
        return Err(CliError::Usage(format!(
            "window [{start}, {end}] is empty"
        )));
    }

    let mut reports: Vec<BacktestReport> = Vec::with_capacity(specs.len());
    for spec in &specs {
        let vf = match spec {
            StrategySpec::OptimalTwoFund => Some(optimal_cfg.value_function(months as usize)?),
            _ => None,
        };
        reports.push(run_strategy(&series, spec, vf.as_ref(), start, end)?);
    }

    // Decade tables over the years the window spans.
    let tables = if args.table {
        let mut start_years = Vec::new();
        let mut y = start.year;
        while y + 10 <= end.year {
            start_years.push(y);
            y += 10;
        }
        let end_years: Vec<i32> = start_years.iter().map(|y| y + 10).collect();
        if start_years.is_empty() {
            return Err(CliError::Usage(
                "--table needs a window of at least ten years".into(),
            ));
        }
        Some(total_return_table(
            &series,
            &specs,
            Some(&optimal_cfg),
            &start_years,
            &end_years,
        )?)
    } else {
        None
    };

    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Run(e.to_string()))?;
    let paths_csv = wealth_paths_csv(&reports)?;
    std::fs::write(out_dir.join("wealth_paths.csv"), &paths_csv)
        .map_err(|e| CliError::Run(e.to_string()))?;

    println!("backtest {start} -> {end} ({months} months)");
    for report in &reports {
        println!(
            "  {:<18} total return {:>10.2}",
            report.strategy.name(),
            report.total_return()
        );
    }

    let mut envelopes = Vec::with_capacity(reports.len());
    for (i, report) in reports.iter().enumerate() {
        let matrix = tables.as_ref().map(|ts| ts[i].clone());
        if let Some(m) = &matrix {
            let file = out_dir.join(format!("table_{}.csv", report.strategy.name()));
            std::fs::write(&file, m.to_csv()).map_err(|e| CliError::Run(e.to_string()))?;
            println!("{}:\n{}", report.strategy.name(), m.to_text());
        }
        envelopes.push(StrategyEnvelope {
            strategy: report.strategy,
            params: report.strategy.to_key_values(),
            total_return: report.total_return(),
            wealth_path: report.wealth_path.clone(),
            matrix,
        });
    }
    let envelope = BacktestEnvelope {
        data_rows: series.index().len(),
        start,
        end,
        model,
        gamma,
        dates: reports[0].dates.clone(),
        strategies: envelopes,
    };
    let json = serde_json::to_string_pretty(&envelope)
        .map_err(|e| CliError::Run(format!("serialization failed: {e}")))?;
    std::fs::write(out_dir.join("report.json"), format!("{json}\n"))
        .map_err(|e| CliError::Run(e.to_string()))?;
    println!("wrote {}", out_dir.display());
    Ok(ExitCode::SUCCESS)
}
