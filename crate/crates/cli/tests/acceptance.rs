//! Acceptance criterion 11: `backtest` and `verify` produce byte-identical
//! outputs across two runs with identical config and seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use longrun::backtest::{generic_csv_string, Denomination, MonthDate, ReturnSeries};
use longrun::models::{simulate_gp, GpModel, TimeGrid};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_longrun")
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("longrun_acc_{tag}_{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_synthetic_series(path: &Path, seed: u64) {
    let model = GpModel::mmm(0.1828, 0.0520).unwrap();
    let months = 92 * 12;
    let grid = TimeGrid::new(0.0, months as f64 / 12.0, months).unwrap();
    let paths = simulate_gp(&model, &grid, 1, seed).unwrap();
    let mut dates = Vec::with_capacity(months + 1);
    let mut d = MonthDate::new(1924, 1).unwrap();
    for _ in 0..=months {
        dates.push(d);
        d = d.next();
    }
    let series =
        ReturnSeries::new(dates, paths.path(0).to_vec(), Denomination::Discounted).unwrap();
    fs::write(path, generic_csv_string(&series)).unwrap();
}

fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

#[test]
fn criterion_11_reproducibility() {
    let dir = scratch_dir("repro");
    let data = dir.join("series.csv");
    write_synthetic_series(&data, 7);

    // Backtest: identical command twice, snapshot outputs in between.
    let bt_out = dir.join("bt");
    let bt_args: Vec<String> = [
        "backtest",
        "--data",
        data.to_str().unwrap(),
        "--format",
        "generic",
        "--start",
        "1930",
        "--end",
        "2010",
        "--table",
        "--out",
        bt_out.to_str().unwrap(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let bt_a = Command::new(bin()).args(&bt_args).output().unwrap();
    assert_eq!(bt_a.status.code(), Some(0), "{}", String::from_utf8_lossy(&bt_a.stderr));
    let files_a = dir_snapshot(&bt_out);
    let bt_b = Command::new(bin()).args(&bt_args).output().unwrap();
    let files_b = dir_snapshot(&bt_out);
    assert_eq!(bt_a.stdout, bt_b.stdout, "backtest stdout differs");
    assert_eq!(files_a.len(), 7, "wealth csv + 5 tables + json envelope");
    assert_eq!(files_a, files_b, "backtest files differ between runs");

    // Verify: identical command twice, including the JSON report.
    let report = dir.join("verify.json");
    let v_args: Vec<String> = [
        "verify",
        "--quick",
        "--seed",
        "42",
        "--out",
        report.to_str().unwrap(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let v_a = Command::new(bin()).args(&v_args).output().unwrap();
    assert_eq!(v_a.status.code(), Some(0), "{}", String::from_utf8_lossy(&v_a.stderr));
    let json_a = fs::read(&report).unwrap();
    let v_b = Command::new(bin()).args(&v_args).output().unwrap();
    let json_b = fs::read(&report).unwrap();
    assert_eq!(v_a.stdout, v_b.stdout, "verify stdout differs");
    assert_eq!(json_a, json_b, "verify report differs");

    println!(
        "ACCEPTANCE 11 PASS  reproducibility: backtest ({} files) and verify outputs byte-identical across reruns",
        files_a.len()
    );
}
