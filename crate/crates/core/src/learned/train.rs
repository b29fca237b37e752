use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::network::{logits, loss_and_grad, softmax2, Architecture};
use super::{Classifier, CLASS_ORDER};
use crate::error::{Error, Result};
use crate::evaluation::roc_auc;
use crate::scenario::Window;
use crate::stream::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub architecture: Architecture,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub seed: u64,
    pub test_frac: f64,
    pub validation_frac: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            architecture: Architecture::Softmax,
            epochs: 1500,
            learning_rate: 5e-4,
            batch_size: 32,
            weight_decay: 1e-4,
            seed: 0,
            test_frac: 0.01,
            validation_frac: 0.04,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::contract("epochs and batch size must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::contract("learning rate must be positive"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::contract("weight decay must be >= 0"));
        }
        let ok = |f: f64| (0.0..1.0).contains(&f);
        if !ok(self.test_frac) || !ok(self.validation_frac) || self.test_frac + self.validation_frac >= 1.0 {
            return Err(Error::contract("held-out fractions must be in [0, 1) and sum below 1"));
        }
        Ok(())
    }
}

/// Scores on one data split. AUC is undefined unless both classes occur.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub n: usize,
    pub loss: Option<f64>,
    pub accuracy: Option<f64>,
    pub auc: Option<f64>,
}

/// Provenance and held-out performance stored with a trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub dataset_sha256: String,
    pub config: TrainConfig,
    pub train: SplitMetrics,
    pub test: SplitMetrics,
    pub validation: SplitMetrics,
    /// Test and validation together.
    pub held_out: SplitMetrics,
}

/// SHA-256 over every window's values and label.
pub fn dataset_hash(windows: &[Window]) -> String {
    let mut h = Sha256::new();
    for w in windows {
        h.update((w.values.len() as u64).to_le_bytes());
        for v in &w.values {
            h.update(v.to_le_bytes());
        }
        h.update([w.label.index() as u8]);
    }
    format!("{:x}", h.finalize())
}

/// Fitted parameters before they are wrapped into a [`Classifier`].
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub params: Vec<f64>,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub train: SplitMetrics,
    pub test: SplitMetrics,
    pub validation: SplitMetrics,
    pub held_out: SplitMetrics,
}

/// Trains a classifier on labeled windows of a common length.
pub fn train(windows: &[Window], config: &TrainConfig) -> Result<Classifier> {
    let len = match windows.first() {
        Some(w) => w.len(),
        None => return Err(Error::contract("training set is empty")),
    };
    if let Some(w) = windows.iter().find(|w| w.len() != len) {
        return Err(Error::Dimension {
            expected: len,
            got: w.len(),
        });
    }
    let mut shell = Classifier {
        architecture: config.architecture,
        window: len,
        class_order: CLASS_ORDER,
        params: Vec::new(),
        input_mean: Vec::new(),
        input_scale: Vec::new(),
        training: None,
    };
    let inputs = windows
        .iter()
        .map(|w| shell.raw_inputs(w))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = windows.iter().map(|w| w.label.index()).collect();
    let fit = fit(&inputs, &labels, config)?;
    shell.params = fit.params;
    shell.input_mean = fit.input_mean;
    shell.input_scale = fit.input_scale;
    shell.training = Some(TrainingManifest {
        dataset_sha256: dataset_hash(windows),
        config: config.clone(),
        train: fit.train,
        test: fit.test,
        validation: fit.validation,
        held_out: fit.held_out,
    });
    Ok(shell)
}

/// Fits `config.architecture` to raw input vectors and class indices.
/// Softmax inputs are standardized with training-split statistics.
pub fn fit(inputs: &[Vec<f64>], labels: &[usize], config: &TrainConfig) -> Result<Fit> {
    config.validate()?;
    if inputs.len() != labels.len() {
        return Err(Error::Dimension {
            expected: inputs.len(),
            got: labels.len(),
        });
    }
    if inputs.is_empty() {
        return Err(Error::contract("training set is empty"));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::contract("labels must be 0 or 1"));
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::contract("training data must contain both classes"));
    }
    let dim = inputs[0].len();
    if let Some(x) = inputs.iter().find(|x| x.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: x.len(),
        });
    }
    if inputs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::contract("training inputs must be finite"));
    }
    let arch = config.architecture;
    arch.validate(dim)?;

    let n = inputs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(config.seed, 0));
    let n_test = (config.test_frac * n as f64).round() as usize;
    let n_val = (config.validation_frac * n as f64).round() as usize;
    let (test_idx, rest) = order.split_at(n_test);
    let (val_idx, train_idx) = rest.split_at(n_val.min(rest.len()));
    let mut train_idx = train_idx.to_vec();
    if !train_idx.iter().any(|&i| labels[i] == 0) || !train_idx.iter().any(|&i| labels[i] == 1) {
        return Err(Error::contract("training split lacks one of the classes"));
    }

    let (input_mean, input_scale) = match arch {
        Architecture::Softmax => standardization(inputs, &train_idx),
        Architecture::Conv1d { .. } => (Vec::new(), Vec::new()),
    };
    let xs: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| standardize(x, &input_mean, &input_scale))
        .collect();

    let mut params = init_params(&arch, dim, config.seed);
    let mut adam = Adam::new(params.len(), config.learning_rate);
    let mut shuffle = stream(config.seed, 1);
    for _ in 0..config.epochs {
        train_idx.shuffle(&mut shuffle);
        for batch in train_idx.chunks(config.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| xs[i].as_slice()).collect();
            let by: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (_, grad) = loss_and_grad(&arch, &params, &bx, &by, config.weight_decay);
            adam.step(&mut params, &grad);
        }
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::contract("training diverged to non-finite parameters"));
    }

    let held: Vec<usize> = test_idx.iter().chain(val_idx).copied().collect();
    let metrics = |idx: &[usize]| split_metrics(&arch, &params, &xs, labels, idx);
    Ok(Fit {
        train: metrics(&train_idx),
        test: metrics(test_idx),
        validation: metrics(val_idx),
        held_out: metrics(&held),
        params,
        input_mean,
        input_scale,
    })
}

fn standardization(inputs: &[Vec<f64>], idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let dim = inputs[0].len();
    let n = idx.len() as f64;
    let mut mean = vec![0.0; dim];
    for &i in idx {
        for (m, v) in mean.iter_mut().zip(&inputs[i]) {
            *m += v / n;
        }
    }
    let mut scale = vec![0.0; dim];
    for &i in idx {
        for ((s, v), m) in scale.iter_mut().zip(&inputs[i]).zip(&mean) {
            *s += (v - m).powi(2) / n;
        }
    }
    // Constant columns (presence flags on clean data) keep unit scale.
    for (s, m) in scale.iter_mut().zip(&mean) {
        let sd = s.sqrt();
        *s = if sd > 1e-9 * m.abs().max(1.0) { sd } else { 1.0 };
    }
    (mean, scale)
}

pub(crate) fn standardize(x: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    if mean.is_empty() {
        return x.to_vec();
    }
    x.iter().zip(mean).zip(scale).map(|((v, m), s)| (v - m) / s).collect()
}

fn init_params(arch: &Architecture, dim: usize, seed: u64) -> Vec<f64> {
    let mut params = vec![0.0; arch.n_params(dim)];
    if let Architecture::Conv1d { filters, width } = *arch {
        let mut rng = stream(seed, 2);
        let kernel = (1.0 / width as f64).sqrt();
        for p in &mut params[..filters * width] {
            *p = kernel * rng.sample::<f64, _>(StandardNormal);
        }
        let dense_start = filters * width + filters;
        let dense = (1.0 / (2 * filters) as f64).sqrt();
        for p in &mut params[dense_start..dense_start + 4 * filters] {
            *p = dense * rng.sample::<f64, _>(StandardNormal);
        }
    }
    params
}

fn split_metrics(
    arch: &Architecture,
    params: &[f64],
    xs: &[Vec<f64>],
    labels: &[usize],
    idx: &[usize],
) -> SplitMetrics {
    if idx.is_empty() {
        return SplitMetrics {
            n: 0,
            loss: None,
            accuracy: None,
            auc: None,
        };
    }
    let probs: Vec<[f64; 2]> = idx.iter().map(|&i| softmax2(logits(arch, params, &xs[i]))).collect();
    let ys: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
    let n = idx.len() as f64;
    let loss = probs
        .iter()
        .zip(&ys)
        .map(|(p, &y)| -p[y].max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / n;
    let correct = probs
        .iter()
        .zip(&ys)
        .filter(|(p, &y)| usize::from(p[0] <= p[1]) == y)
        .count();
    let scores: Vec<f64> = probs.iter().map(|p| p[0]).collect();
    let positive: Vec<bool> = ys.iter().map(|&y| y == 0).collect();
    SplitMetrics {
        n: idx.len(),
        loss: Some(loss),
        accuracy: Some(correct as f64 / n),
        auc: roc_auc(&scores, &positive).ok().map(|r| r.auc),
    }
}

struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}
