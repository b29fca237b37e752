use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: f64 = 0.25;

/// A rolling statistic; `values[k]` belongs to series index `start + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub start: usize,
    pub window: usize,
    pub window_frac: f64,
    /// `None` marks an undefined statistic (for example 0/0).
    pub values: Vec<Option<f64>>,
}

impl IndicatorSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied().flatten()
    }

    pub fn first(&self) -> Option<f64> {
        self.values.first().copied().flatten()
    }
}

/// Points in a rolling window, `⌈frac·n⌉`.
pub fn window_len(frac: f64, n: usize) -> usize {
    super::lowess::neighbor_count(frac, n)
}

fn check(series: &[f64], frac: f64, min: usize) -> Result<usize> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::contract(format!(
            "window fraction must lie in (0, 1], got {frac}"
        )));
    }
    let w = window_len(frac, series.len());
    if w < min {
        return Err(Error::contract(format!(
            "rolling window of {w} points is too small (need {min})"
        )));
    }
    Ok(w)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance of each trailing window.
pub fn rolling_variance(series: &[f64], window_frac: f64) -> Result<IndicatorSeries> {
    let w = check(series, window_frac, 2)?;
    let values = series
        .windows(w)
        .map(|win| {
            let m = mean(win);
            Some(win.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / w as f64)
        })
        .collect();
    Ok(IndicatorSeries {
        start: w - 1,
        window: w,
        window_frac,
        values,
    })
}

/// Lag-1 autocorrelation of each trailing window,
/// `Σ(xₜ−x̄)(xₜ₊₁−x̄) / Σ(xₜ−x̄)²`.
pub fn rolling_lag1_ac(series: &[f64], window_frac: f64) -> Result<IndicatorSeries> {
    let w = check(series, window_frac, 3)?;
    let values = series
        .windows(w)
        .map(|win| {
            let m = mean(win);
            let denom: f64 = win.iter().map(|x| (x - m) * (x - m)).sum();
            if denom == 0.0 {
                return None;
            }
            let num: f64 = win.windows(2).map(|p| (p[0] - m) * (p[1] - m)).sum();
            Some(num / denom)
        })
        .collect();
    Ok(IndicatorSeries {
        start: w - 1,
        window: w,
        window_frac,
        values,
    })
}
