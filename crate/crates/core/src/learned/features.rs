use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{kendall_tau_missing, rolling_lag1_ac, rolling_variance, window_len, DEFAULT_WINDOW};
use crate::scenario::Window;

/// Shortest observed prefix that [`featurize`] accepts.
pub const MIN_PREFIX: usize = 20;

/// Number of classifier inputs produced by [`FeatureVector::inputs`].
pub const N_INPUTS: usize = 10;

/// Summary statistics of a window's observed prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Kendall τ of the rolling variance.
    pub variance_tau: Option<f64>,
    /// Kendall τ of the rolling lag-1 autocorrelation.
    pub ac_tau: Option<f64>,
    /// Last over first rolling variance.
    pub variance_ratio: Option<f64>,
    pub terminal_ac: Option<f64>,
    /// Mean of the final rolling window.
    pub terminal_mean: f64,
    /// Observed length over window length.
    pub length_fraction: f64,
}

impl FeatureVector {
    /// Classifier inputs: the six statistics (undefined → 0, the variance
    /// ratio on a log scale) followed by presence flags for the four
    /// optional ones.
    pub fn inputs(&self) -> [f64; N_INPUTS] {
        let val = |v: Option<f64>| v.unwrap_or(0.0);
        let flag = |v: Option<f64>| if v.is_some() { 1.0 } else { 0.0 };
        let log_ratio = self.variance_ratio.map(f64::ln);
        [
            val(self.variance_tau),
            val(self.ac_tau),
            val(log_ratio),
            val(self.terminal_ac),
            self.terminal_mean,
            self.length_fraction,
            flag(self.variance_tau),
            flag(self.ac_tau),
            flag(log_ratio),
            flag(self.terminal_ac),
        ]
    }
}

/// Features of a normalized window with at least [`MIN_PREFIX`] observed points.
pub fn featurize(w: &Window) -> Result<FeatureVector> {
    let n = w.observed().len();
    if n < MIN_PREFIX {
        return Err(Error::contract(format!(
            "featurize needs {MIN_PREFIX} observed points, window has {n}"
        )));
    }
    featurize_prefix(w)
}

/// Like [`featurize`], but short prefixes yield undefined statistics
/// instead of an error. Used on the early points of an expanding window.
pub(crate) fn featurize_lenient(w: &Window) -> Result<FeatureVector> {
    let observed = w.observed();
    if observed.len() >= MIN_PREFIX {
        return featurize_prefix(w);
    }
    let terminal_mean = if observed.is_empty() {
        0.0
    } else {
        observed.iter().sum::<f64>() / observed.len() as f64
    };
    Ok(FeatureVector {
        variance_tau: None,
        ac_tau: None,
        variance_ratio: None,
        terminal_ac: None,
        terminal_mean,
        length_fraction: observed.len() as f64 / w.len() as f64,
    })
}

fn featurize_prefix(w: &Window) -> Result<FeatureVector> {
    let x = w.observed();
    let var = rolling_variance(x, DEFAULT_WINDOW)?;
    let ac = rolling_lag1_ac(x, DEFAULT_WINDOW)?;
    let variance_ratio = match (var.first(), var.last()) {
        (Some(first), Some(last)) if first > 0.0 && last > 0.0 => Some(last / first),
        _ => None,
    };
    let tail = window_len(DEFAULT_WINDOW, x.len());
    let terminal = &x[x.len() - tail..];
    Ok(FeatureVector {
        variance_tau: kendall_tau_missing(&var.values)?,
        ac_tau: kendall_tau_missing(&ac.values)?,
        variance_ratio,
        terminal_ac: ac.last(),
        terminal_mean: terminal.iter().sum::<f64>() / tail as f64,
        length_fraction: x.len() as f64 / w.len() as f64,
    })
}
