//! ROC analysis of indicator scores and favored-class tallies.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{
    detrend, kendall_tau_missing, rolling_lag1_ac, rolling_variance, DEFAULT_SPAN, DEFAULT_WINDOW,
};
use crate::learned::{PredictionTrace, PREDICTION_STRIDE};
use crate::scenario::Class;
use crate::sde::csv_err;

/// Default number of trailing scores per trace.
pub const DEFAULT_LAST_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Score threshold for each point; the first is `+inf`.
    pub thresholds: Vec<f64>,
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl RocCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["threshold", "fpr", "tpr"]).map_err(csv_err)?;
        for (t, (fpr, tpr)) in self.thresholds.iter().zip(&self.points) {
            w.write_record([t.to_string(), fpr.to_string(), tpr.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<roc>", e))?;
        Ok(())
    }

    pub fn summary(&self, indicator: &str, model: &str) -> RocSummary {
        RocSummary {
            indicator: indicator.to_string(),
            model: model.to_string(),
            auc: self.auc,
            n_pos: self.n_pos,
            n_neg: self.n_neg,
        }
    }
}

/// One line of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSummary {
    pub indicator: String,
    pub model: String,
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// ROC curve of `scores` where `positive[i]` marks the positive class.
/// Tied scores move the curve diagonally, so they count one half.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<RocCurve> {
    if scores.len() != positive.len() {
        return Err(Error::Dimension {
            expected: scores.len(),
            got: positive.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::contract("scores contain NaN"));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::contract("ROC analysis needs both classes"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        auc += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        thresholds.push(s);
    }
    Ok(RocCurve {
        points,
        thresholds,
        auc: auc / (n_pos as f64 * n_neg as f64),
        n_pos,
        n_neg,
    })
}

/// The final `k` entries of a score trace (all of them when shorter).
pub fn last_k_scores(scores: &[f64], k: usize) -> Vec<f64> {
    scores[scores.len().saturating_sub(k)..].to_vec()
}

/// Generic indicator tracked through an expanding prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ewi {
    Variance,
    Lag1Ac,
}

impl Ewi {
    pub const ALL: [Ewi; 2] = [Ewi::Variance, Ewi::Lag1Ac];

    pub fn as_str(self) -> &'static str {
        match self {
            Ewi::Variance => "variance",
            Ewi::Lag1Ac => "lag1_ac",
        }
    }
}

/// Kendall τ of a rolling indicator at each prefix end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauTrace {
    pub indicator: Ewi,
    pub times: Vec<usize>,
    pub taus: Vec<Option<f64>>,
}

impl TauTrace {
    /// Defined τ values in time order.
    pub fn scores(&self) -> Vec<f64> {
        self.taus.iter().flatten().copied().collect()
    }
}

/// Recomputes the indicator trend on every prefix ending at a multiple of
/// the prediction stride: lowess residuals, normalized by their mean
/// absolute value, rolling indicator, Kendall τ.
pub fn expanding_tau(series: &[f64], indicator: Ewi) -> Result<TauTrace> {
    let mut times = Vec::new();
    let mut taus = Vec::new();
    for t in (PREDICTION_STRIDE..=series.len()).step_by(PREDICTION_STRIDE) {
        times.push(t);
        taus.push(prefix_tau(&series[..t], indicator)?);
    }
    Ok(TauTrace { indicator, times, taus })
}

fn prefix_tau(prefix: &[f64], indicator: Ewi) -> Result<Option<f64>> {
    let mut r = detrend(prefix, DEFAULT_SPAN)?.residuals;
    let scale = r.iter().map(|v| v.abs()).sum::<f64>() / r.len() as f64;
    if !(scale > 0.0) {
        return Ok(None);
    }
    for v in &mut r {
        *v /= scale;
    }
    let values = match indicator {
        Ewi::Variance => rolling_variance(&r, DEFAULT_WINDOW)?,
        Ewi::Lag1Ac => rolling_lag1_ac(&r, DEFAULT_WINDOW)?,
    };
    kendall_tau_missing(&values.values)
}

/// Counts of `(true class, favored class)` over the last `k` predictions
/// of each trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyTable {
    pub counts: BTreeMap<(Class, Class), usize>,
}

impl FrequencyTable {
    pub fn get(&self, truth: Class, favored: Class) -> usize {
        self.counts.get(&(truth, favored)).copied().unwrap_or(0)
    }

    /// All predictions tallied for one true class.
    pub fn total(&self, truth: Class) -> usize {
        Class::ALL.iter().map(|&f| self.get(truth, f)).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["true_class", "favored_class", "count"])
            .map_err(csv_err)?;
        for truth in Class::ALL {
            for favored in Class::ALL {
                w.write_record([truth.as_str(), favored.as_str(), &self.get(truth, favored).to_string()])
                    .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::io("<frequencies>", e))?;
        Ok(())
    }
}

pub fn favored_class_frequencies<'a, I>(traces: I, k: usize) -> FrequencyTable
where
    I: IntoIterator<Item = (Class, &'a PredictionTrace)>,
{
    let mut table = FrequencyTable::default();
    for (truth, trace) in traces {
        let n = trace.favored.len();
        for &favored in &trace.favored[n.saturating_sub(k)..] {
            *table.counts.entry((truth, favored)).or_insert(0) += 1;
        }
    }
    table
}
