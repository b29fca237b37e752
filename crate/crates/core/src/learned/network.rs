//! Classifier architectures with hand-written gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Architecture {
    /// Affine map from window features to two logits.
    Softmax,
    /// `filters` valid convolutions of `width` over the raw window, ReLU,
    /// mean-pooled over each half of the window, then an affine map to two
    /// logits.
    Conv1d { filters: usize, width: usize },
}

impl Architecture {
    pub fn tag(&self) -> &'static str {
        match self {
            Architecture::Softmax => "softmax",
            Architecture::Conv1d { .. } => "conv1d",
        }
    }

    /// Parameter count for inputs of length `n_inputs`.
    pub fn n_params(&self, n_inputs: usize) -> usize {
        match *self {
            Architecture::Softmax => 2 * n_inputs + 2,
            Architecture::Conv1d { filters, width } => filters * width + filters + 2 * 2 * filters + 2,
        }
    }

    pub fn validate(&self, n_inputs: usize) -> Result<()> {
        if let Architecture::Conv1d { filters, width } = *self {
            if filters == 0 || width == 0 {
                return Err(Error::contract("conv1d needs at least one filter of width >= 1"));
            }
            if n_inputs < width + 1 {
                return Err(Error::contract(format!(
                    "conv1d width {width} needs inputs longer than the kernel, got {n_inputs}"
                )));
            }
        }
        Ok(())
    }
}

/// Numerically stable two-way softmax.
pub fn softmax2(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e0 = (z[0] - m).exp();
    let e1 = (z[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// Logits for one input vector.
pub fn logits(arch: &Architecture, params: &[f64], x: &[f64]) -> [f64; 2] {
    match *arch {
        Architecture::Softmax => {
            let f = x.len();
            let mut z = [params[2 * f], params[2 * f + 1]];
            for (c, zc) in z.iter_mut().enumerate() {
                *zc += params[c * f..(c + 1) * f]
                    .iter()
                    .zip(x)
                    .map(|(w, v)| w * v)
                    .sum::<f64>();
            }
            z
        }
        Architecture::Conv1d { filters, width } => {
            let conv = ConvLayout::new(filters, width, x.len());
            let pooled = conv.forward(params, x, None);
            conv.dense(params, &pooled)
        }
    }
}

/// Mean cross-entropy plus `weight_decay/2 · ‖θ‖²`, and its gradient.
pub fn loss_and_grad(
    arch: &Architecture,
    params: &[f64],
    inputs: &[&[f64]],
    labels: &[usize],
    weight_decay: f64,
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    let n = inputs.len() as f64;
    for (x, &y) in inputs.iter().zip(labels) {
        match *arch {
            Architecture::Softmax => {
                let z = logits(arch, params, x);
                let p = softmax2(z);
                loss -= p[y].max(f64::MIN_POSITIVE).ln();
                let f = x.len();
                for c in 0..2 {
                    let dz = p[c] - if c == y { 1.0 } else { 0.0 };
                    for (g, v) in grad[c * f..(c + 1) * f].iter_mut().zip(x.iter()) {
                        *g += dz * v;
                    }
                    grad[2 * f + c] += dz;
                }
            }
            Architecture::Conv1d { filters, width } => {
                let conv = ConvLayout::new(filters, width, x.len());
                let mut pre = vec![0.0; filters * conv.positions];
                let pooled = conv.forward(params, x, Some(&mut pre));
                let p = softmax2(conv.dense(params, &pooled));
                loss -= p[y].max(f64::MIN_POSITIVE).ln();
                let dz = [
                    p[0] - if y == 0 { 1.0 } else { 0.0 },
                    p[1] - if y == 1 { 1.0 } else { 0.0 },
                ];
                conv.backward(params, x, &pre, &pooled, dz, &mut grad);
            }
        }
    }
    loss /= n;
    for g in grad.iter_mut() {
        *g /= n;
    }
    if weight_decay > 0.0 {
        loss += 0.5 * weight_decay * params.iter().map(|p| p * p).sum::<f64>();
        for (g, p) in grad.iter_mut().zip(params) {
            *g += weight_decay * p;
        }
    }
    (loss, grad)
}

/// Offsets of each parameter block in the conv parameter vector:
/// kernels, kernel biases, dense weights, dense biases.
struct ConvLayout {
    filters: usize,
    width: usize,
    positions: usize,
    half: usize,
    kernels: usize,
    biases: usize,
    dense: usize,
    out: usize,
}

impl ConvLayout {
    fn new(filters: usize, width: usize, len: usize) -> Self {
        let positions = len - width + 1;
        let kernels = 0;
        let biases = filters * width;
        let dense = biases + filters;
        let out = dense + 2 * 2 * filters;
        ConvLayout {
            filters,
            width,
            positions,
            half: positions / 2,
            kernels,
            biases,
            dense,
            out,
        }
    }

    fn pooled_len(&self) -> usize {
        2 * self.filters
    }

    /// Pooled activations; fills `pre` with pre-activations when given.
    fn forward(&self, params: &[f64], x: &[f64], mut pre: Option<&mut Vec<f64>>) -> Vec<f64> {
        let mut pooled = vec![0.0; self.pooled_len()];
        let counts = [self.half.max(1) as f64, (self.positions - self.half) as f64];
        for k in 0..self.filters {
            let kernel = &params[self.kernels + k * self.width..self.kernels + (k + 1) * self.width];
            let bias = params[self.biases + k];
            for t in 0..self.positions {
                let a = bias
                    + kernel
                        .iter()
                        .zip(&x[t..t + self.width])
                        .map(|(w, v)| w * v)
                        .sum::<f64>();
                if let Some(pre) = pre.as_deref_mut() {
                    pre[k * self.positions + t] = a;
                }
                let side = usize::from(t >= self.half);
                pooled[2 * k + side] += a.max(0.0);
            }
            pooled[2 * k] /= counts[0];
            pooled[2 * k + 1] /= counts[1];
        }
        pooled
    }

    fn dense(&self, params: &[f64], pooled: &[f64]) -> [f64; 2] {
        let q = pooled.len();
        let mut z = [params[self.out], params[self.out + 1]];
        for (c, zc) in z.iter_mut().enumerate() {
            let row = &params[self.dense + c * q..self.dense + (c + 1) * q];
            *zc += row.iter().zip(pooled).map(|(w, v)| w * v).sum::<f64>();
        }
        z
    }

    fn backward(&self, params: &[f64], x: &[f64], pre: &[f64], pooled: &[f64], dz: [f64; 2], grad: &mut [f64]) {
        let q = pooled.len();
        let mut dq = vec![0.0; q];
        for c in 0..2 {
            for i in 0..q {
                grad[self.dense + c * q + i] += dz[c] * pooled[i];
                dq[i] += params[self.dense + c * q + i] * dz[c];
            }
            grad[self.out + c] += dz[c];
        }
        let counts = [self.half.max(1) as f64, (self.positions - self.half) as f64];
        for k in 0..self.filters {
            for t in 0..self.positions {
                if pre[k * self.positions + t] <= 0.0 {
                    continue;
                }
                let side = usize::from(t >= self.half);
                let da = dq[2 * k + side] / counts[side];
                for j in 0..self.width {
                    grad[self.kernels + k * self.width + j] += da * x[t + j];
                }
                grad[self.biases + k] += da;
            }
        }
    }
}
