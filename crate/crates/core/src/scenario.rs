//! Labeled transcritical/null scenarios and the windows cut from them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Triangular};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{detrend, DEFAULT_SPAN};
use crate::models::{Model, SeirParams, SirParams};
use crate::noise::NoiseSpec;
use crate::sde::{BetaSchedule, Simulation, Trajectory};

/// Length of the ramp phase; null scenarios run this long.
pub const MAX_HORIZON: f64 = 1500.0;
pub const BURN_IN: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Transcritical,
    Null,
}

impl Class {
    pub const ALL: [Class; 2] = [Class::Transcritical, Class::Null];

    pub fn as_str(self) -> &'static str {
        match self {
            Class::Transcritical => "transcritical",
            Class::Null => "null",
        }
    }

    /// Position in the two-class probability vector.
    pub fn index(self) -> usize {
        match self {
            Class::Transcritical => 0,
            Class::Null => 1,
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transcritical" => Ok(Class::Transcritical),
            "null" => Ok(Class::Null),
            other => Err(Error::InvalidValue {
                key: "class".into(),
                message: format!("unknown class `{other}` (expected transcritical or null)"),
            }),
        }
    }
}

/// Model and noise combination a scenario is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SirWhite,
    SirEnvironmental,
    SirDemographic,
    SeirWhite,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::SirWhite,
        ModelKind::SirEnvironmental,
        ModelKind::SirDemographic,
        ModelKind::SeirWhite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::SirWhite => "sir-white",
            ModelKind::SirEnvironmental => "sir-environmental",
            ModelKind::SirDemographic => "sir-demographic",
            ModelKind::SeirWhite => "seir-white",
        }
    }

    pub fn model(self) -> Model {
        match self {
            ModelKind::SeirWhite => Model::Seir(SeirParams::standard()),
            _ => Model::Sir(SirParams::standard()),
        }
    }

    pub fn initial_state(self) -> Vec<f64> {
        match self {
            ModelKind::SeirWhite => vec![500.0, 1.0, 2.0, 2.0],
            _ => vec![500.0, 7.0],
        }
    }

    /// Number of noise intensities drawn per scenario.
    pub fn noise_dim(self) -> usize {
        match self {
            ModelKind::SirDemographic => 0,
            ModelKind::SeirWhite => 4,
            _ => 2,
        }
    }

    pub fn noise(self, sigmas: Vec<f64>) -> Result<NoiseSpec> {
        match self {
            ModelKind::SirWhite | ModelKind::SeirWhite => NoiseSpec::additive(sigmas),
            ModelKind::SirEnvironmental => NoiseSpec::environmental(sigmas),
            ModelKind::SirDemographic => Ok(NoiseSpec::demographic()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidValue {
                key: "model".into(),
                message: format!(
                    "unknown model `{s}` (valid models: sir-white, sir-environmental, sir-demographic, seir-white)"
                ),
            })
    }
}

/// One inverse-CDF draw from the triangular distribution on `[lo, hi]`.
pub fn sample_triangular<R: Rng + ?Sized>(rng: &mut R, lo: f64, mode: f64, hi: f64) -> Result<f64> {
    if !(lo <= mode && mode <= hi && lo < hi) {
        return Err(Error::contract(format!(
            "triangular parameters must satisfy lo <= mode <= hi, lo < hi (got {lo}, {mode}, {hi})"
        )));
    }
    let dist = Triangular::new(lo, hi, mode).map_err(|e| Error::contract(e.to_string()))?;
    Ok(dist.sample(rng).clamp(lo, hi))
}

/// Sampled parameters of one labeled simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: u64,
    pub class: Class,
    pub kind: ModelKind,
    pub model: Model,
    pub beta: BetaSchedule,
    pub beta_c: f64,
    pub sigmas: Vec<f64>,
    /// Seed of the integration stream.
    pub seed: u64,
    /// Deterministic crossing `(β_c − β₀)/β₁`, transcritical only.
    pub transition_time: Option<f64>,
}

impl Scenario {
    /// Time at which recording stops.
    pub fn end_time(&self) -> f64 {
        match self.transition_time {
            Some(t) => t.floor(),
            None => MAX_HORIZON,
        }
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        self.kind.noise(self.sigmas.clone())
    }
}

/// Draws a scenario of the given class.
///
/// `β₀ ~ Tri(0, β_c/4, β_c/2)`. Null scenarios take
/// `β₁ ~ Tri(0, u/2, u)` with `u = (β_c − β₀)/1500`; transcritical ones take
/// `β₁ ~ Tri((β_c − β₀)/1500, u'/2, u')` with `u' = (2β_c − β₀)/1500`.
/// Each noise intensity is `Tri(0, s/2, s)` with `s = sigma_upper`.
pub fn sample_scenario<R: Rng + ?Sized>(
    rng: &mut R,
    id: u64,
    class: Class,
    kind: ModelKind,
    sigma_upper: f64,
) -> Result<Scenario> {
    if !(sigma_upper > 0.0 && sigma_upper.is_finite()) {
        return Err(Error::contract(format!(
            "sigma upper limit must be > 0, got {sigma_upper}"
        )));
    }
    let model = kind.model();
    let beta_c = model.critical_beta();
    loop {
        let beta0 = sample_triangular(rng, 0.0, beta_c / 4.0, beta_c / 2.0)?;
        let beta1 = match class {
            Class::Null => {
                let hi = (beta_c - beta0) / MAX_HORIZON;
                sample_triangular(rng, 0.0, hi / 2.0, hi)?
            }
            Class::Transcritical => {
                let lo = (beta_c - beta0) / MAX_HORIZON;
                let hi = (2.0 * beta_c - beta0) / MAX_HORIZON;
                sample_triangular(rng, lo, hi / 2.0, hi)?
            }
        };
        let sigmas = (0..kind.noise_dim())
            .map(|_| sample_triangular(rng, 0.0, sigma_upper / 2.0, sigma_upper))
            .collect::<Result<Vec<_>>>()?;
        let seed: u64 = rng.random();
        let beta = BetaSchedule::linear(beta0, beta1);
        let transition_time = match class {
            Class::Transcritical => {
                let t = (beta_c - beta0) / beta1;
                // Only the closed endpoint β₁ = lo can land on (or round past) 1500.
                if !(t.is_finite() && t > 0.0 && t <= MAX_HORIZON) {
                    continue;
                }
                Some(t)
            }
            Class::Null => {
                if beta.at(MAX_HORIZON) >= beta_c {
                    continue;
                }
                None
            }
        };
        return Ok(Scenario {
            id,
            class,
            kind,
            model,
            beta,
            beta_c,
            sigmas,
            seed,
            transition_time,
        });
    }
}

/// Integration settings shared by every scenario of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub dt: f64,
    pub burn_in: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            dt: 0.01,
            burn_in: BURN_IN,
        }
    }
}

impl RunSettings {
    /// Integration steps per unit of time.
    pub fn steps_per_unit(&self) -> Result<usize> {
        let per = 1.0 / self.dt;
        let rounded = per.round();
        if !(self.dt > 0.0) || rounded < 1.0 || (per - rounded).abs() > 1e-6 * rounded {
            return Err(Error::contract(format!(
                "dt = {} must divide one time unit evenly",
                self.dt
            )));
        }
        if !(self.burn_in >= 0.0 && self.burn_in.fract() == 0.0) {
            return Err(Error::contract("burn-in must be a whole number of time units"));
        }
        Ok(rounded as usize)
    }
}

/// Simulates a scenario from `t = −burn_in` and keeps the unit-time
/// records at `t = 1, 2, …, end_time`.
pub fn run_scenario(s: &Scenario, settings: &RunSettings) -> Result<Trajectory> {
    let wrap = |e: Error| Error::Scenario {
        scenario: s.id,
        source: Box::new(e),
    };
    let stride = settings.steps_per_unit().map_err(wrap)?;
    let sim = Simulation::new(s.model, s.noise().map_err(wrap)?, s.beta, s.kind.initial_state())
        .span(-settings.burn_in, s.end_time())
        .dt(settings.dt)
        .stride(stride);
    let mut traj = sim.run(s.seed).map_err(wrap)?;
    let skip = settings.burn_in as usize + 1;
    traj.times.drain(..skip.min(traj.times.len()));
    traj.states.drain(..skip.min(traj.states.len()));
    Ok(traj)
}

/// A fixed-length labeled window.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub values: Vec<f64>,
    pub label: Class,
    /// Trailing zeros appended after the observed values.
    pub pad_count: usize,
    pub source: u64,
}

impl Window {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The observed (non-padded) values.
    pub fn observed(&self) -> &[f64] {
        &self.values[..self.values.len() - self.pad_count]
    }
}

/// Lowess residuals of a whole series.
pub fn make_residuals(series: &[f64], span: f64) -> Result<Vec<f64>> {
    Ok(detrend(series, span)?.residuals)
}

/// The final `L` points of `series`, or all of it followed by zeros when
/// shorter, so the last observed point (the transition) is always kept.
pub fn extract_window(series: &[f64], label: Class, len: usize, source: u64) -> Result<Window> {
    if series.is_empty() {
        return Err(Error::contract("cannot window an empty series"));
    }
    if len == 0 {
        return Err(Error::contract("window length must be >= 1"));
    }
    let take = series.len().min(len);
    let mut values = series[series.len() - take..].to_vec();
    values.resize(len, 0.0);
    Ok(Window {
        values,
        label,
        pad_count: len - take,
        source,
    })
}

/// Divides the observed values by their mean absolute value.
pub fn normalize_window(w: &Window) -> Result<Window> {
    if w.pad_count >= w.values.len() {
        return Err(Error::contract("window has no observed values"));
    }
    let observed = w.observed();
    let scale = observed.iter().map(|v| v.abs()).sum::<f64>() / observed.len() as f64;
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateWindow);
    }
    let mut out = w.clone();
    let n = observed.len();
    for v in &mut out.values[..n] {
        *v /= scale;
    }
    Ok(out)
}

/// Residuals, window and normalization in one pass.
pub fn labeled_window(series: &[f64], label: Class, len: usize, source: u64) -> Result<Window> {
    let residuals = make_residuals(series, DEFAULT_SPAN)?;
    normalize_window(&extract_window(&residuals, label, len, source)?)
}
