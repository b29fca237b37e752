//! Euler–Maruyama integration of the noise-driven compartment models.
//!
//! One step is `X ← X + f(X, t)·dt + G(X)·ΔW`, with `β` evaluated at the
//! left endpoint and every compartment clamped to zero from below after
//! the update. Values below the smallest normal `f64` are flushed to zero
//! as well, so a compartment that decays past double precision is extinct.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Model;
use crate::noise::{DemographicTerms, NoiseFamily, NoiseSpec};
use crate::stream::{self, fill_wiener};

/// Linear transmission ramp `β(t) = β₀ + β₁·t`, held at `β₀` for `t < 0`
/// so a burn-in phase runs at the initial rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub beta0: f64,
    pub beta1: f64,
}

impl BetaSchedule {
    pub fn constant(beta: f64) -> Self {
        BetaSchedule {
            beta0: beta,
            beta1: 0.0,
        }
    }

    pub fn linear(beta0: f64, beta1: f64) -> Self {
        BetaSchedule { beta0, beta1 }
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        self.beta0 + self.beta1 * t.max(0.0)
    }

    /// Checks `β(t) ≥ 0` over `[0, horizon]`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        if !(self.beta0 >= 0.0 && self.beta0.is_finite() && self.beta1.is_finite()) {
            return Err(Error::contract(format!("invalid beta schedule {self:?}")));
        }
        if self.at(horizon.max(0.0)) < 0.0 {
            return Err(Error::contract("beta(t) turns negative within the horizon"));
        }
        Ok(())
    }
}

/// A recorded sample path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Integration step.
    pub dt: f64,
    /// Steps between recorded states.
    pub stride: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub seed: u64,
    pub model: Model,
    pub noise: Option<NoiseFamily>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The time series of one compartment.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[index]).collect()
    }

    pub fn infected(&self) -> Vec<f64> {
        self.component(self.model.infected_index())
    }

    /// Writes `t,<compartments...>` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.model.compartment_names().iter().map(|s| s.to_string()));
        w.write_record(&header).map_err(csv_err)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let mut row = vec![t.to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<trajectory>", e))?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Everything needed to integrate one path except the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub model: Model,
    pub noise: NoiseSpec,
    pub beta: BetaSchedule,
    pub init: Vec<f64>,
    pub t_start: f64,
    /// Absolute end time.
    pub t_end: f64,
    pub dt: f64,
    /// Record every `stride`-th step (1 records every step).
    pub stride: usize,
    /// Multiplier on the diffusion matrix; 0 disables noise for any family.
    pub diffusion_scale: f64,
}

impl Simulation {
    pub fn new(model: Model, noise: NoiseSpec, beta: BetaSchedule, init: Vec<f64>) -> Self {
        Simulation {
            model,
            noise,
            beta,
            init,
            t_start: 0.0,
            t_end: 100.0,
            dt: 0.01,
            stride: 1,
            diffusion_scale: 1.0,
        }
    }

    pub fn span(mut self, t_start: f64, t_end: f64) -> Self {
        self.t_start = t_start;
        self.t_end = t_end;
        self
    }

    pub fn dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn diffusion_scale(mut self, scale: f64) -> Self {
        self.diffusion_scale = scale;
        self
    }

    /// Number of integration steps spanning `[t_start, t_end]`.
    pub fn steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let dim = self.model.dim();
        if self.init.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: self.init.len(),
            });
        }
        if let Some(bad) = self.init.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::contract(format!("initial compartment {bad} must be >= 0")));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::contract(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end - self.t_start >= self.dt) {
            return Err(Error::contract("horizon must cover at least one step"));
        }
        if self.stride == 0 {
            return Err(Error::contract("stride must be >= 1"));
        }
        if !(self.diffusion_scale >= 0.0 && self.diffusion_scale.is_finite()) {
            return Err(Error::contract("diffusion scale must be >= 0"));
        }
        self.beta.validate(self.t_end)?;
        self.noise.validate(Some(dim))?;
        if self.noise.family == NoiseFamily::Demographic && !matches!(self.model, Model::Sir(_)) {
            return Err(Error::contract("demographic noise requires the SIR model"));
        }
        Ok(())
    }

    /// Integrates with a generator seeded from `seed`.
    pub fn run(&self, seed: u64) -> Result<Trajectory> {
        let mut rng = stream::stream(seed, 0);
        let mut traj = self.run_with(&mut rng)?;
        traj.seed = seed;
        Ok(traj)
    }

    /// Integrates drawing increments from `rng`.
    pub fn run_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Trajectory> {
        self.validate()?;
        let dim = self.model.dim();
        let n = self.steps();
        let mut x = self.init.clone();
        let mut drift = vec![0.0; dim];
        let mut dw = vec![0.0; dim];
        let mut noise = vec![0.0; dim];
        let capacity = n / self.stride + 1;
        let mut times = Vec::with_capacity(capacity);
        let mut states = Vec::with_capacity(capacity);
        times.push(self.t_start);
        states.push(x.clone());
        let scale = self.diffusion_scale;
        for k in 0..n {
            let t = self.t_start + k as f64 * self.dt;
            let beta = self.beta.at(t);
            self.model.rhs_into(&x, beta, &mut drift)?;
            fill_wiener(rng, &mut dw, self.dt)?;
            self.diffusion_times(&x, beta, &dw, &mut noise)?;
            for j in 0..dim {
                let next = x[j] + drift[j] * self.dt + scale * noise[j];
                if !next.is_finite() {
                    return Err(Error::Divergence { step: k + 1 });
                }
                // Clamp negatives, and flush subnormals so extinct compartments read as 0.
                x[j] = if next < f64::MIN_POSITIVE { 0.0 } else { next };
            }
            if (k + 1) % self.stride == 0 {
                times.push(self.t_start + (k + 1) as f64 * self.dt);
                states.push(x.clone());
            }
        }
        Ok(Trajectory {
            dt: self.dt,
            stride: self.stride,
            times,
            states,
            seed: 0,
            model: self.model,
            noise: Some(self.noise.family),
        })
    }

    /// `G(x)·dw` without materializing `G`.
    fn diffusion_times(&self, x: &[f64], beta: f64, dw: &[f64], out: &mut [f64]) -> Result<()> {
        if self.diffusion_scale == 0.0 {
            out.fill(0.0);
            return Ok(());
        }
        match self.noise.family {
            NoiseFamily::AdditiveWhite => {
                for ((o, s), w) in out.iter_mut().zip(&self.noise.intensities).zip(dw) {
                    *o = s * w;
                }
            }
            NoiseFamily::MultiplicativeEnvironmental => {
                for (((o, s), xi), w) in out.iter_mut().zip(&self.noise.intensities).zip(x).zip(dw) {
                    *o = s * xi * w;
                }
            }
            NoiseFamily::Demographic => {
                let Model::Sir(p) = &self.model else {
                    return Err(Error::contract("demographic noise requires the SIR model"));
                };
                let g = DemographicTerms::compute(x[0], x[1], p, beta)?.sqrt();
                out[0] = g[0][0] * dw[0] + g[0][1] * dw[1];
                out[1] = g[1][0] * dw[0] + g[1][1] * dw[1];
            }
        }
        Ok(())
    }
}

/// Explicit Euler integration of the deterministic model.
pub fn integrate_ode(
    model: &Model,
    beta: &BetaSchedule,
    init: &[f64],
    t_start: f64,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    let dim = model.dim();
    let sim = Simulation {
        model: *model,
        noise: NoiseSpec::additive(vec![0.0; dim])?,
        beta: *beta,
        init: init.to_vec(),
        t_start,
        t_end,
        dt,
        stride,
        diffusion_scale: 0.0,
    };
    sim.validate()?;
    let n = sim.steps();
    let mut x = init.to_vec();
    let mut drift = vec![0.0; dim];
    let mut times = vec![t_start];
    let mut states = vec![x.clone()];
    for k in 0..n {
        let t = t_start + k as f64 * dt;
        model.rhs_into(&x, beta.at(t), &mut drift)?;
        for j in 0..dim {
            x[j] += drift[j] * dt;
            if !x[j].is_finite() {
                return Err(Error::Divergence { step: k + 1 });
            }
        }
        if (k + 1) % stride == 0 {
            times.push(t_start + (k + 1) as f64 * dt);
            states.push(x.clone());
        }
    }
    Ok(Trajectory {
        dt,
        stride,
        times,
        states,
        seed: 0,
        model: *model,
        noise: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{SeirParams, SirParams};

    fn sir_white(sigma: f64) -> Simulation {
        Simulation::new(
            Model::Sir(SirParams::standard()),
            NoiseSpec::additive(vec![sigma, sigma]).unwrap(),
            BetaSchedule::constant(0.015),
            vec![500.0, 7.0],
        )
    }

    #[test]
    fn deterministic_given_seed() {
        let sim = sir_white(0.5).span(0.0, 20.0);
        assert_eq!(sim.run(7).unwrap(), sim.run(7).unwrap());
        assert_ne!(sim.run(7).unwrap().states, sim.run(8).unwrap().states);
    }

    #[test]
    fn stride_thins_uniformly() {
        let traj = sir_white(0.5).span(-100.0, 10.0).stride(100).run(1).unwrap();
        assert_eq!(traj.len(), 111);
        assert_eq!(traj.times[0], -100.0);
        assert!((traj.times[110] - 10.0).abs() < 1e-9);
        for w in traj.times.windows(2) {
            assert!((w[1] - w[0] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_noise_is_explicit_euler() {
        let sim = sir_white(0.0).span(0.0, 50.0);
        let noisy = sim.run(3).unwrap();
        let ode = integrate_ode(&sim.model, &sim.beta, &sim.init, 0.0, 50.0, 0.01, 1).unwrap();
        assert_eq!(noisy.states, ode.states);
    }

    #[test]
    fn compartments_stay_nonnegative() {
        let sim = Simulation::new(
            Model::Sir(SirParams::standard()),
            NoiseSpec::additive(vec![1.0, 1.0]).unwrap(),
            BetaSchedule::constant(0.0),
            vec![100.0, 0.5],
        )
        .span(0.0, 50.0);
        let traj = sim.run(11).unwrap();
        assert!(traj.states.iter().flatten().all(|v| *v >= 0.0));
    }

    #[test]
    fn divergence_reports_step() {
        let sim = Simulation::new(
            Model::Sir(SirParams::standard()),
            NoiseSpec::additive(vec![0.0, 0.0]).unwrap(),
            BetaSchedule::constant(1.0),
            vec![1e200, 1e200],
        )
        .span(0.0, 1.0);
        match sim.run(0) {
            Err(Error::Divergence { step }) => assert_eq!(step, 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_invalid_setups() {
        let sir = sir_white(0.1);
        assert!(sir.clone().dt(0.0).run(0).is_err());
        assert!(sir.clone().span(0.0, 0.001).run(0).is_err());
        let mut bad = sir.clone();
        bad.init = vec![1.0];
        assert!(bad.run(0).is_err());
        let seir = Simulation::new(
            Model::Seir(SeirParams::standard()),
            NoiseSpec::demographic(),
            BetaSchedule::constant(0.01),
            vec![500.0, 1.0, 2.0, 2.0],
        );
        assert!(seir.run(0).is_err());
        let wrong_len = Simulation::new(
            Model::Seir(SeirParams::standard()),
            NoiseSpec::additive(vec![0.1, 0.1]).unwrap(),
            BetaSchedule::constant(0.01),
            vec![500.0, 1.0, 2.0, 2.0],
        );
        assert!(wrong_len.run(0).is_err());
    }

    #[test]
    fn singular_demographic_diffusion_is_an_error() {
        let p = SirParams {
            recruitment: 0.0,
            death: 1.0,
            recovery: 1.0,
        };
        assert!(matches!(
            DemographicTerms::compute(0.0, 0.0, &p, 0.1),
            Err(Error::SingularDiffusion { .. })
        ));
    }

    #[test]
    fn csv_export_has_header() {
        let traj = sir_white(0.1).span(0.0, 0.02).run(0).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,S,I\n0,500,7\n"), "{text}");
        assert_eq!(text.lines().count(), 4);
    }
}
