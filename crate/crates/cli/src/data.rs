// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV datasets: a `y` column followed by `x_0 .. x_{p-1}` curve values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use frbs_core::{make_grid, FunctionalSeries};

use crate::error::{CliError, CliResult};

pub fn read_dataset(path: &Path) -> CliResult<FunctionalSeries> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .clone();
    check_header(&header)?;
    let p = header.len() - 1;

    let mut responses = Vec::new();
    let mut curves = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::input(format!("line {line}: {e}")))?;
        let mut values = Vec::with_capacity(p + 1);
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::input(format!("line {line}, column {}: not a number: {cell:?}", col + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::input(format!("line {line}, column {}: non-finite value", col + 1)));
            }
            values.push(v);
        }
        responses.push(values[0]);
        curves.push(values.split_off(1));
    }
    if responses.is_empty() {
        return Err(CliError::input(format!("{}: no data rows", path.display())));
    }
    let grid = make_grid(p).map_err(|e| CliError::input(e.to_string()))?;
    FunctionalSeries::new(grid, responses, curves).map_err(|e| CliError::input(e.to_string()))
}

fn check_header(header: &csv::StringRecord) -> CliResult<()> {
    if header.len() < 3 {
        return Err(CliError::input("header needs y and at least two curve columns"));
    }
    if header.get(0).map(str::trim) != Some("y") {
        return Err(CliError::input("first column must be named y"));
    }
    for (u, name) in header.iter().skip(1).enumerate() {
        if name.trim() != format!("x_{u}") {
            return Err(CliError::input(format!(
                "column {} should be x_{u}, found {name:?}",
                u + 2
            )));
        }
    }
    Ok(())
}

pub fn write_dataset(path: &Path, series: &FunctionalSeries) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    let p = series.grid().len();
    let io = |e: csv::Error| CliError::input(format!("{}: {e}", path.display()));
    let mut header = vec!["y".to_string()];
    header.extend((0..p).map(|u| format!("x_{u}")));
    writer.write_record(&header).map_err(io)?;
    for row in 0..series.len() {
        let mut record = Vec::with_capacity(p + 1);
        record.push(series.responses()[row].to_string());
        record.extend(series.curve(row).iter().map(f64::to_string));
        writer.write_record(&record).map_err(io)?;
    }
    writer
        .flush()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Reads the `price` column of a CSV file.
pub fn read_prices(path: &Path) -> CliResult<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let col = header
        .iter()
        .position(|h| h.trim() == "price")
        .ok_or_else(|| CliError::input("no column named price"))?;
    let mut prices = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::input(format!("line {line}: {e}")))?;
        let cell = record.get(col).unwrap_or("");
        let v: f64 = cell
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("line {line}: not a number: {cell:?}")))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::input(format!("line {line}: price must be positive, got {v}")));
        }
        prices.push(v);
    }
    Ok(prices)
}

/// Number of lagged returns per curve.
pub const RETURN_LAGS: usize = 20;

/// `y_j = 100 log(P_j / P_{j-1})` and `X_j(k) = 100 log(P_{j-k} / P_{j-21})`
/// for `k = 1..=20`, one row per `j = 22..=T` (1-based).
pub fn returns_dataset(prices: &[f64]) -> CliResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let history = RETURN_LAGS + 1;
    if prices.len() <= history {
        return Err(CliError::input(format!(
            "need at least {} prices, got {}",
            history + 1,
            prices.len()
        )));
    }
    let log_ratio = |a: f64, b: f64| 100.0 * (a / b).ln();
    // 0-based index i corresponds to day j = i + 1
    let mut y = Vec::with_capacity(prices.len() - history);
    let mut x = Vec::with_capacity(prices.len() - history);
    for i in history..prices.len() {
        y.push(log_ratio(prices[i], prices[i - 1]));
        x.push(
            (1..=RETURN_LAGS)
                .map(|k| log_ratio(prices[i - k], prices[i - history]))
                .collect(),
        );
    }
    Ok((y, x))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut file = File::create(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
