//! Generic early-warning statistics.

mod kendall;
mod lowess;
mod rolling;

use std::io::{Read, Write};

pub use kendall::{kendall_tau, kendall_tau_missing};
pub use lowess::{detrend, lowess_smooth, ResidualSeries, DEFAULT_SPAN};
pub use rolling::{rolling_lag1_ac, rolling_variance, window_len, IndicatorSeries, DEFAULT_WINDOW};

use crate::error::{Error, Result};
use crate::sde::csv_err;

/// Writes `t,variance,lag1_ac`, leaving undefined entries empty.
///
/// `times[i]` labels series index `i`; both indicators must come from the
/// same series and window.
pub fn write_indicator_csv<W: Write>(
    times: &[f64],
    variance: &IndicatorSeries,
    lag1_ac: &IndicatorSeries,
    out: W,
) -> Result<()> {
    if variance.start != lag1_ac.start || variance.values.len() != lag1_ac.values.len() {
        return Err(Error::contract("indicator series are not aligned"));
    }
    if variance.start + variance.values.len() > times.len() {
        return Err(Error::contract("indicator series longer than the time axis"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "variance", "lag1_ac"]).map_err(csv_err)?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (k, (v, a)) in variance.values.iter().zip(&lag1_ac.values).enumerate() {
        let t = times[variance.start + k];
        w.write_record([t.to_string(), fmt(*v), fmt(*a)]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<indicators>", e))?;
    Ok(())
}

/// A single numeric column of a CSV whose first column is time.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Reads the first column as time and `column` as values. Every cell
/// must be a finite number.
pub fn read_series_csv<R: Read>(input: R, column: &str) -> Result<Series> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.len() < 2 {
        return Err(Error::Schema {
            column: header.get(0).unwrap_or("<missing>").to_string(),
            message: "series CSV needs a time column and a value column".into(),
        });
    }
    let idx = header
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::Schema {
            column: column.to_string(),
            message: format!("not found among {}", header.iter().collect::<Vec<_>>().join(",")),
        })?;
    let mut series = Series {
        times: Vec::new(),
        values: Vec::new(),
    };
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(csv_err)?;
        let cell = |i: usize| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("").trim();
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    line,
                    message: format!("column `{}`: `{raw}` is not a finite number", &header[i]),
                }),
            }
        };
        series.times.push(cell(0)?);
        series.values.push(cell(idx)?);
    }
    Ok(series)
}
