//! CSV ingestion of monthly total-return series.
//!
//! Two layouts are supported:
//!
//! * `generic_csv`: header `Date,Index`; one row per month with a
//!   positive total-return index level.
//! * `shiller_csv`: a header naming at least `Date`, `P` (price level)
//!   and `D` (annualized dividend level); the loader compounds monthly
//!   price returns with one twelfth of the dividend yield into a
//!   total-return index.
//!
//! Dates are `YYYY-MM` or the fractional `YYYY.MM` convention where the
//! decimal digits name the month and a single trailing digit `1` means
//! October (`1871.1` is 1871-10, while `1871.01` is January).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::backtest::{Denomination, ReturnSeries};
use crate::error::{Error, Result};

/// Calendar month used to index monthly observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MonthDate {
    pub year: i32,
    pub month: u32,
}

impl MonthDate {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Data(format!("month out of range: {month}")));
        }
        Ok(Self { year, month })
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    /// Signed number of months from `other` to `self`.
    pub fn months_since(self, other: Self) -> i64 {
        (self.year as i64 - other.year as i64) * 12 + self.month as i64 - other.month as i64
    }
}

impl fmt::Display for MonthDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthDate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (year_s, month_s, fractional) = if let Some((y, m)) = s.split_once('-') {
            (y, m, false)
        } else if let Some((y, m)) = s.split_once('.') {
            (y, m, true)
        } else {
            return Err(Error::Data(format!(
                "cannot parse `{s}` as YYYY-MM or YYYY.MM"
            )));
        };
        let year: i32 = year_s
            .parse()
            .map_err(|_| Error::Data(format!("bad year in `{s}`")))?;
        let month: u32 = if fractional && month_s.len() == 1 {
            // Trailing zero dropped by the numeric format: ".1" is October.
            month_s
                .parse::<u32>()
                .map_err(|_| Error::Data(format!("bad month in `{s}`")))?
                * 10
        } else {
            month_s
                .parse()
                .map_err(|_| Error::Data(format!("bad month in `{s}`")))?
        };
        MonthDate::new(year, month)
    }
}

/// Supported input layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    ShillerCsv,
    GenericCsv,
}

/// Minimum number of monthly rows a series must supply.
pub const MIN_ROWS: usize = 3;

fn split_row(line: &str) -> Vec<&str> {
    line.split(',').map(|c| c.trim()).collect()
}

fn parse_value(cell: &str, line_no: usize, what: &str) -> Result<f64> {
    if cell.is_empty() {
        return Err(Error::Parse {
            line: line_no,
            message: format!("missing {what}"),
        });
    }
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("cannot parse {what} `{cell}`"),
    })?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Parse {
            line: line_no,
            message: format!("{what} must be positive, got {v}"),
        });
    }
    Ok(v)
}

/// Loads and normalizes a monthly return series from `path`.
pub fn load_return_series(path: &Path, format: SeriesFormat) -> Result<ReturnSeries> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_return_series(&text, format)
}

/// Parses series text; see [`load_return_series`].
pub fn parse_return_series(text: &str, format: SeriesFormat) -> Result<ReturnSeries> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| Error::Data("empty input".into()))?;
    let cols = split_row(header);
    let col_index = |name: &str| -> Result<usize> {
        cols.iter()
            .position(|c| c.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse {
                line: header_no + 1,
                message: format!("header column `{name}` not found in {cols:?}"),
            })
    };

    let mut dates = Vec::new();
    match format {
        SeriesFormat::GenericCsv => {
            let (c_date, c_index) = (col_index("Date")?, col_index("Index")?);
            let mut index = Vec::new();
            for (no, line) in lines {
                let line_no = no + 1;
                let cells = split_row(line);
                if cells.len() <= c_date.max(c_index) {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected at least {} columns", c_date.max(c_index) + 1),
                    });
                }
                dates.push(cells[c_date].parse::<MonthDate>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?);
                index.push(parse_value(cells[c_index], line_no, "index value")?);
            }
            finish_series(dates, index)
        }
        SeriesFormat::ShillerCsv => {
            let (c_date, c_p, c_d) = (col_index("Date")?, col_index("P")?, col_index("D")?);
            let mut prices = Vec::new();
            let mut dividends = Vec::new();
            for (no, line) in lines {
                let line_no = no + 1;
                let cells = split_row(line);
                if cells.len() <= c_date.max(c_p).max(c_d) {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "row has too few columns".into(),
                    });
                }
                dates.push(cells[c_date].parse::<MonthDate>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?);
                prices.push(parse_value(cells[c_p], line_no, "price")?);
                dividends.push(parse_value(cells[c_d], line_no, "dividend")?);
            }
            // Total return: compound the price return with one twelfth of
            // the annualized dividend, paid on last month's price.
            let mut index = Vec::with_capacity(prices.len());
            index.push(1.0);
            for i in 1..prices.len() {
                let gross = (prices[i] + dividends[i] / 12.0) / prices[i - 1];
                index.push(index[i - 1] * gross);
            }
            finish_series(dates, index)
        }
    }
}

fn finish_series(dates: Vec<MonthDate>, index: Vec<f64>) -> Result<ReturnSeries> {
    if dates.len() < MIN_ROWS {
        return Err(Error::Data(format!(
            "need at least {MIN_ROWS} monthly rows, got {}",
            dates.len()
        )));
    }
    for w in dates.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Data(format!(
                "dates not strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        if w[1].months_since(w[0]) != 1 {
            return Err(Error::Data(format!(
                "dates must be consecutive months: gap between {} and {}",
                w[0], w[1]
            )));
        }
    }
    ReturnSeries::new(dates, index, Denomination::Discounted)
}

/// Writes a series back in the `generic_csv` layout (17 significant
/// digits, so a reload reproduces it bit for bit).
pub fn generic_csv_string(series: &ReturnSeries) -> String {
    let mut out = String::from("Date,Index\n");
    for (d, v) in series.dates().iter().zip(series.index()) {
        out.push_str(&format!("{d},{v:.16e}\n"));
    }
    out
}

pub fn write_generic_csv(series: &ReturnSeries, path: &Path) -> Result<()> {
    fs::write(path, generic_csv_string(series))?;
    Ok(())
}
