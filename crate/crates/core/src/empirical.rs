//! Daily case counts, renewal-equation reproduction numbers and
//! sub-series slicing around sub-unity periods.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};
use crate::scenario::Class;
use crate::sde::csv_err;

pub const SERIAL_INTERVAL_MEAN: f64 = 6.3;
pub const SERIAL_INTERVAL_SD: f64 = 4.2;
pub const RE_WINDOW: usize = 14;
/// Gamma prior shape for R (mean `a·b` = 5, sd `√a·b` = 5).
pub const PRIOR_SHAPE: f64 = 1.0;
pub const PRIOR_SCALE: f64 = 5.0;
/// Shortest kept sub-series, in days.
pub const MIN_RUN: usize = 56;
/// Days removed from a transcritical sub-series to form its null twin.
pub const NULL_TRIM: usize = 28;

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Contiguous daily case counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseSeries {
    pub start: NaiveDate,
    pub counts: Vec<u64>,
}

impl CaseSeries {
    pub fn new(start: NaiveDate, counts: Vec<u64>) -> Self {
        CaseSeries { start, counts }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start + Duration::days(day as i64)
    }

    /// Reads `date,cases` CSV. Dates must be consecutive days.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rdr.headers().map_err(csv_err)?.clone();
        for (i, name) in ["date", "cases"].iter().enumerate() {
            match header.get(i) {
                Some(h) if h.trim() == *name => {}
                other => {
                    return Err(Error::Schema {
                        column: other.unwrap_or("<missing>").to_string(),
                        message: format!("expected column {} to be `{name}`", i + 1),
                    })
                }
            }
        }
        let mut start = None;
        let mut prev: Option<NaiveDate> = None;
        let mut counts = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let line = n + 2;
            let rec = rec.map_err(csv_err)?;
            let field = |i: usize| rec.get(i).map(str::trim).unwrap_or("");
            let date = NaiveDate::parse_from_str(field(0), DATE_FORMAT).map_err(|_| Error::Parse {
                line,
                message: format!("column `date`: `{}` is not an ISO-8601 date", field(0)),
            })?;
            let cases: u64 = field(1).parse().map_err(|_| Error::Parse {
                line,
                message: format!("column `cases`: `{}` is not a nonnegative integer", field(1)),
            })?;
            if let Some(p) = prev {
                if date <= p {
                    return Err(Error::Parse {
                        line,
                        message: format!("date {date} does not follow {p}"),
                    });
                }
                if date != p + Duration::days(1) {
                    return Err(Error::Parse {
                        line,
                        message: format!("missing days between {p} and {date}"),
                    });
                }
            }
            start.get_or_insert(date);
            prev = Some(date);
            counts.push(cases);
        }
        match start {
            Some(start) => Ok(CaseSeries { start, counts }),
            None => Err(Error::Parse {
                line: 1,
                message: "case series has no rows".into(),
            }),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "cases"]).map_err(csv_err)?;
        for (day, c) in self.counts.iter().enumerate() {
            w.write_record([self.date(day).format(DATE_FORMAT).to_string(), c.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<cases>", e))?;
        Ok(())
    }
}

/// Discretized serial-interval distribution; `weights[k - 1]` is the
/// probability of a lag of `k` days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialInterval {
    pub mean: f64,
    pub sd: f64,
    pub shape: f64,
    pub scale: f64,
    pub weights: Vec<f64>,
}

impl SerialInterval {
    pub fn truncation(&self) -> usize {
        self.weights.len()
    }

    /// Mean lag with each daily bin at its midpoint.
    pub fn discrete_mean(&self) -> f64 {
        self.weights.iter().enumerate().map(|(k, w)| (k as f64 + 0.5) * w).sum()
    }
}

/// Moment-matched gamma integrated over `[s−1, s]` for `s = 1..K`, with
/// `K` the first day whose upper tail is below `1e-4`, then renormalized.
pub fn discretize_serial_interval(mean: f64, sd: f64) -> Result<SerialInterval> {
    if !(mean > 1.0 && mean.is_finite()) || !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::contract(format!(
            "serial interval needs mean > 1 and sd > 0, got mean {mean}, sd {sd}"
        )));
    }
    let shape = (mean / sd).powi(2);
    let scale = sd * sd / mean;
    let gamma = Gamma::new(shape, 1.0 / scale).map_err(|e| Error::contract(format!("serial interval: {e}")))?;
    let mut weights = Vec::new();
    let mut lower = 0.0;
    let mut s = 1.0;
    loop {
        let upper = gamma.cdf(s);
        weights.push(upper - lower);
        lower = upper;
        if 1.0 - upper < 1e-4 {
            break;
        }
        s += 1.0;
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(SerialInterval {
        mean,
        sd,
        shape,
        scale,
        weights,
    })
}

/// Posterior-mean Rₑ for each day, from the trailing window ending that
/// day. Days before a full window, and windows without infectivity, are
/// undefined.
pub fn estimate_re(cases: &CaseSeries, si: &SerialInterval, window: usize) -> Result<Vec<Option<f64>>> {
    if window == 0 {
        return Err(Error::contract("Rₑ window must be >= 1 day"));
    }
    let n = cases.len();
    if n <= window + si.truncation() {
        return Err(Error::contract(format!(
            "Rₑ estimation needs more than {} days, series has {n}",
            window + si.truncation()
        )));
    }
    let incidence: Vec<f64> = cases.counts.iter().map(|&c| c as f64).collect();
    let infectivity: Vec<f64> = (0..n)
        .map(|s| {
            si.weights
                .iter()
                .enumerate()
                .take_while(|(k, _)| *k < s)
                .map(|(k, w)| w * incidence[s - k - 1])
                .sum()
        })
        .collect();
    let mut out = vec![None; n];
    // Day 0 has no infectivity, so the first full window ends on day `window`.
    for (t, slot) in out.iter_mut().enumerate().skip(window) {
        let range = t + 1 - window..=t;
        let lambda: f64 = infectivity[range.clone()].iter().sum();
        if lambda > 0.0 {
            let new: f64 = incidence[range].iter().sum();
            *slot = Some((PRIOR_SHAPE + new) / (1.0 / PRIOR_SCALE + lambda));
        }
    }
    Ok(out)
}

pub fn write_re_csv<W: Write>(cases: &CaseSeries, re: &[Option<f64>], out: W) -> Result<()> {
    if re.len() != cases.len() {
        return Err(Error::Dimension {
            expected: cases.len(),
            got: re.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "re_mean"]).map_err(csv_err)?;
    for (day, r) in re.iter().enumerate() {
        let v = r.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([cases.date(day).format(DATE_FORMAT).to_string(), v])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<re>", e))?;
    Ok(())
}

/// Reads a `date,re_mean` export back, aligned to its first date.
pub fn read_re_csv<R: Read>(input: R) -> Result<(NaiveDate, Vec<Option<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.get(0) != Some("date") || header.get(1) != Some("re_mean") {
        return Err(Error::Schema {
            column: header.get(0).unwrap_or("<missing>").to_string(),
            message: "expected header `date,re_mean`".into(),
        });
    }
    let mut start = None;
    let mut values = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(csv_err)?;
        let date = NaiveDate::parse_from_str(rec.get(0).unwrap_or(""), DATE_FORMAT).map_err(|_| Error::Parse {
            line,
            message: "column `date`: not an ISO-8601 date".into(),
        })?;
        let first = *start.get_or_insert(date);
        if first.checked_add_signed(Duration::days(values.len() as i64)) != Some(date) {
            return Err(Error::Parse {
                line,
                message: format!("date {date} breaks the daily sequence"),
            });
        }
        let cell = rec.get(1).unwrap_or("").trim();
        let v = if cell.is_empty() {
            None
        } else {
            Some(cell.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("column `re_mean`: cannot parse `{cell}`"),
            })?)
        };
        values.push(v);
    }
    let start = start.ok_or_else(|| Error::Parse {
        line: 1,
        message: "Rₑ file has no rows".into(),
    })?;
    Ok((start, values))
}

/// A labeled slice of a case series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubSeries {
    pub label: Class,
    pub cases: CaseSeries,
}

impl SubSeries {
    pub fn end(&self) -> NaiveDate {
        self.cases.date(self.cases.len() - 1)
    }

    /// `<label>_<start>_<end>.csv`
    pub fn file_name(&self) -> String {
        format!(
            "{}_{}_{}.csv",
            self.label.as_str(),
            self.cases.start.format(DATE_FORMAT),
            self.end().format(DATE_FORMAT)
        )
    }
}

/// Maximal runs of `Rₑ < 1` that end on a day with `Rₑ >= 1`, that day
/// included. Runs of at least [`MIN_RUN`] days become transcritical
/// sub-series, each followed by a null twin without its last
/// [`NULL_TRIM`] days. Undefined days break runs; a run cut off by an
/// undefined day or the end of the data never reaches 1 and is dropped.
pub fn slice_subseries(cases: &CaseSeries, re: &[Option<f64>]) -> Result<Vec<SubSeries>> {
    if re.len() != cases.len() {
        return Err(Error::Dimension {
            expected: cases.len(),
            got: re.len(),
        });
    }
    let mut out = Vec::new();
    let mut run_start: Option<usize> = None;
    for (day, r) in re.iter().enumerate() {
        match *r {
            Some(v) if v < 1.0 => {
                run_start.get_or_insert(day);
            }
            Some(_) => {
                if let Some(start) = run_start.take() {
                    let len = day + 1 - start;
                    if len >= MIN_RUN {
                        let slice =
                            |n: usize| CaseSeries::new(cases.date(start), cases.counts[start..start + n].to_vec());
                        out.push(SubSeries {
                            label: Class::Transcritical,
                            cases: slice(len),
                        });
                        out.push(SubSeries {
                            label: Class::Null,
                            cases: slice(len - NULL_TRIM),
                        });
                    }
                }
            }
            None => run_start = None,
        }
    }
    Ok(out)
}
