//! Two-class indicator trained on labeled windows.
//!
//! The default architecture is a softmax regression on summary features
//! of the window ([`features`]); a small 1-D convolution over the raw
//! window is also available. Both output `[P(transcritical), P(null)]`.

mod features;
mod network;
mod train;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use features::{featurize, FeatureVector, MIN_PREFIX, N_INPUTS};
pub use network::{logits, loss_and_grad, softmax2, Architecture};
pub use train::{dataset_hash, fit, train, Fit, SplitMetrics, TrainConfig, TrainingManifest};

use crate::error::{Error, Result};
use crate::indicators::{detrend, DEFAULT_SPAN};
use crate::scenario::{extract_window, normalize_window, Class, Window};
use crate::sde::csv_err;

/// Output order of every classifier.
pub const CLASS_ORDER: [Class; 2] = [Class::Transcritical, Class::Null];

/// Spacing of prefix ends in [`expanding_predictions`].
pub const PREDICTION_STRIDE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub architecture: Architecture,
    /// Window length the classifier was trained on.
    pub window: usize,
    pub class_order: [Class; 2],
    pub params: Vec<f64>,
    /// Input standardization; empty for the convolutional model.
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub training: Option<TrainingManifest>,
}

impl Classifier {
    /// Untrained classifier with all parameters zero.
    pub fn zeroed(architecture: Architecture, window: usize) -> Result<Self> {
        let mut c = Classifier {
            architecture,
            window,
            class_order: CLASS_ORDER,
            params: Vec::new(),
            input_mean: Vec::new(),
            input_scale: Vec::new(),
            training: None,
        };
        c.params = vec![0.0; architecture.n_params(c.n_inputs())];
        c.validate()?;
        Ok(c)
    }

    pub fn n_inputs(&self) -> usize {
        match self.architecture {
            Architecture::Softmax => N_INPUTS,
            Architecture::Conv1d { .. } => self.window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::contract("classifier window must be >= 1"));
        }
        if self.class_order != CLASS_ORDER {
            return Err(Error::contract("classifier class order must be [transcritical, null]"));
        }
        self.architecture.validate(self.n_inputs())?;
        let expected = self.architecture.n_params(self.n_inputs());
        if self.params.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: self.params.len(),
            });
        }
        if !self.input_mean.is_empty() || !self.input_scale.is_empty() {
            let n = self.n_inputs();
            if self.input_mean.len() != n || self.input_scale.len() != n {
                return Err(Error::contract("standardization constants do not match the inputs"));
            }
            if self.input_scale.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::contract("standardization scales must be positive"));
            }
        }
        if self.params.iter().chain(&self.input_mean).any(|v| !v.is_finite()) {
            return Err(Error::contract("classifier parameters must be finite"));
        }
        Ok(())
    }

    pub(crate) fn raw_inputs(&self, w: &Window) -> Result<Vec<f64>> {
        if w.len() != self.window {
            return Err(Error::Dimension {
                expected: self.window,
                got: w.len(),
            });
        }
        Ok(match self.architecture {
            Architecture::Softmax => features::featurize_lenient(w)?.inputs().to_vec(),
            Architecture::Conv1d { .. } => w.values.clone(),
        })
    }

    /// `[P(transcritical), P(null)]` for a normalized window.
    pub fn predict(&self, w: &Window) -> Result<[f64; 2]> {
        let x = train::standardize(&self.raw_inputs(w)?, &self.input_mean, &self.input_scale);
        Ok(softmax2(logits(&self.architecture, &self.params, &x)))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::contract(format!("serializing classifier: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Classifier = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Mean of the members' probabilities.
pub fn ensemble_predict(models: &[Classifier], w: &Window) -> Result<[f64; 2]> {
    if models.is_empty() {
        return Err(Error::contract("ensemble has no members"));
    }
    let mut acc = [0.0; 2];
    for m in models {
        let p = m.predict(w)?;
        acc[0] += p[0];
        acc[1] += p[1];
    }
    let n = models.len() as f64;
    Ok([acc[0] / n, acc[1] / n])
}

/// Class with the larger probability; exact ties go to null.
pub fn favored_class(p: [f64; 2]) -> Class {
    if p[0] > p[1] {
        Class::Transcritical
    } else {
        Class::Null
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionTrace {
    /// Number of points in each prefix.
    pub times: Vec<usize>,
    pub probs: Vec<[f64; 2]>,
    pub favored: Vec<Class>,
}

impl PredictionTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Transcritical probabilities in time order.
    pub fn scores(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p[0]).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "p_transcritical", "p_null", "favored"])
            .map_err(csv_err)?;
        for ((t, p), f) in self.times.iter().zip(&self.probs).zip(&self.favored) {
            w.write_record([
                t.to_string(),
                p[0].to_string(),
                p[1].to_string(),
                f.as_str().to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<predictions>", e))?;
        Ok(())
    }
}

/// Ensemble predictions on each prefix of `series` ending at a multiple
/// of [`PREDICTION_STRIDE`]. Every prefix is detrended, cut or padded to
/// `len` points and normalized; a prefix with zero residuals is scored
/// as an all-zero window.
pub fn expanding_predictions(models: &[Classifier], series: &[f64], len: usize) -> Result<PredictionTrace> {
    if models.is_empty() {
        return Err(Error::contract("ensemble has no members"));
    }
    if let Some(m) = models.iter().find(|m| m.window != len) {
        return Err(Error::Dimension {
            expected: len,
            got: m.window,
        });
    }
    let mut trace = PredictionTrace {
        times: Vec::new(),
        probs: Vec::new(),
        favored: Vec::new(),
    };
    for t in (PREDICTION_STRIDE..=series.len()).step_by(PREDICTION_STRIDE) {
        let residuals = detrend(&series[..t], DEFAULT_SPAN)?.residuals;
        let w = extract_window(&residuals, Class::Null, len, 0)?;
        let w = match normalize_window(&w) {
            Ok(n) => n,
            Err(Error::DegenerateWindow) => w,
            Err(e) => return Err(e),
        };
        let p = ensemble_predict(models, &w)?;
        trace.times.push(t);
        trace.probs.push(p);
        trace.favored.push(favored_class(p));
    }
    Ok(trace)
}
