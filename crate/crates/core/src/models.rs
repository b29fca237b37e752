//! Deterministic SIR and SEIR compartment models.
//!
//! The SIR model is carried in its reduced `(S, I)` form: the recovered
//! compartment never feeds back into the other two, so it is omitted.
//! SEIR keeps all four compartments `(S, E, I, R)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced SIR rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    /// Recruitment of susceptibles (individuals per unit time).
    pub recruitment: f64,
    /// Natural death rate.
    pub death: f64,
    /// Recovery rate.
    pub recovery: f64,
}

/// SEIR rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeirParams {
    pub recruitment: f64,
    pub death: f64,
    /// Progression rate from exposed to infectious (1 / mean exposed period).
    pub progression: f64,
    /// Recovery rate (1 / mean infectious period).
    pub recovery: f64,
}

fn check_rates(rates: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in rates {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::contract(format!(
                "{name} must be finite and strictly positive, got {v}"
            )));
        }
    }
    Ok(())
}

impl SirParams {
    pub fn new(recruitment: f64, death: f64, recovery: f64) -> Result<Self> {
        check_rates(&[("recruitment", recruitment), ("death", death), ("recovery", recovery)])?;
        Ok(SirParams {
            recruitment,
            death,
            recovery,
        })
    }

    /// Training-data defaults: Λ = 100, μ = 1, α = 1.
    pub fn standard() -> Self {
        SirParams {
            recruitment: 100.0,
            death: 1.0,
            recovery: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(&[
            ("recruitment", self.recruitment),
            ("death", self.death),
            ("recovery", self.recovery),
        ])
    }
}

impl SeirParams {
    pub fn new(recruitment: f64, death: f64, progression: f64, recovery: f64) -> Result<Self> {
        let p = SeirParams {
            recruitment,
            death,
            progression,
            recovery,
        };
        p.validate()?;
        Ok(p)
    }

    /// Test-model defaults: Λ = 100, d = 0.75, κ = 2, γ = 1.
    pub fn standard() -> Self {
        SeirParams {
            recruitment: 100.0,
            death: 0.75,
            progression: 2.0,
            recovery: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(&[
            ("recruitment", self.recruitment),
            ("death", self.death),
            ("progression", self.progression),
            ("recovery", self.recovery),
        ])
    }
}

/// Either compartment model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Sir(SirParams),
    Seir(SeirParams),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Sir(_) => 2,
            Model::Seir(_) => 4,
        }
    }

    pub fn compartment_names(&self) -> &'static [&'static str] {
        match self {
            Model::Sir(_) => &["S", "I"],
            Model::Seir(_) => &["S", "E", "I", "R"],
        }
    }

    /// Index of the infectious compartment.
    pub fn infected_index(&self) -> usize {
        match self {
            Model::Sir(_) => 1,
            Model::Seir(_) => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Sir(p) => p.validate(),
            Model::Seir(p) => p.validate(),
        }
    }

    /// Writes the deterministic right-hand side into `out`.
    pub fn rhs_into(&self, x: &[f64], beta: f64, out: &mut [f64]) -> Result<()> {
        let dim = self.dim();
        if x.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: x.len(),
            });
        }
        if out.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: out.len(),
            });
        }
        match self {
            Model::Sir(p) => {
                let [ds, di] = sir_terms(x[0], x[1], p, beta);
                out[0] = ds;
                out[1] = di;
            }
            Model::Seir(p) => {
                let d = seir_terms(x[0], x[1], x[2], x[3], p, beta);
                out.copy_from_slice(&d);
            }
        }
        Ok(())
    }

    pub fn rhs(&self, x: &[f64], beta: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.rhs_into(x, beta, &mut out)?;
        Ok(out)
    }

    pub fn basic_reproduction_number(&self, beta: f64) -> f64 {
        match self {
            Model::Sir(p) => basic_reproduction_number(p, beta),
            Model::Seir(p) => seir_basic_reproduction_number(p, beta),
        }
    }

    pub fn critical_beta(&self) -> f64 {
        match self {
            Model::Sir(p) => critical_beta(p),
            Model::Seir(p) => seir_critical_beta(p),
        }
    }
}

#[inline]
fn sir_terms(s: f64, i: f64, p: &SirParams, beta: f64) -> [f64; 2] {
    let infection = beta * s * i;
    [
        p.recruitment - infection - p.death * s,
        infection - p.recovery * i - p.death * i,
    ]
}

#[inline]
fn seir_terms(s: f64, e: f64, i: f64, r: f64, p: &SeirParams, beta: f64) -> [f64; 4] {
    let infection = beta * s * i;
    [
        p.recruitment - infection - p.death * s,
        infection - (p.death + p.progression) * e,
        p.progression * e - (p.death + p.recovery) * i,
        p.recovery * i - p.death * r,
    ]
}

/// Reduced SIR derivative `(dS/dt, dI/dt)`.
pub fn sir_rhs(state: &[f64], p: &SirParams, beta: f64) -> Result<[f64; 2]> {
    if state.len() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: state.len(),
        });
    }
    if !(beta >= 0.0) {
        return Err(Error::contract(format!("beta must be >= 0, got {beta}")));
    }
    Ok(sir_terms(state[0], state[1], p, beta))
}

/// SEIR derivative `(dS, dE, dI, dR)/dt`.
pub fn seir_rhs(state: &[f64], p: &SeirParams, beta: f64) -> Result<[f64; 4]> {
    if state.len() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            got: state.len(),
        });
    }
    if !(beta >= 0.0) {
        return Err(Error::contract(format!("beta must be >= 0, got {beta}")));
    }
    Ok(seir_terms(state[0], state[1], state[2], state[3], p, beta))
}

/// R₀ = βΛ / (μ(α + μ)).
pub fn basic_reproduction_number(p: &SirParams, beta: f64) -> f64 {
    beta * p.recruitment / (p.death * (p.recovery + p.death))
}

/// R₀ = κβΛ / (d(d + κ)(d + γ)).
pub fn seir_basic_reproduction_number(p: &SeirParams, beta: f64) -> f64 {
    p.progression * beta * p.recruitment / (p.death * (p.death + p.progression) * (p.death + p.recovery))
}

/// Transmission rate at which R₀ = 1.
pub fn critical_beta(p: &SirParams) -> f64 {
    p.death * (p.recovery + p.death) / p.recruitment
}

pub fn seir_critical_beta(p: &SeirParams) -> f64 {
    p.death * (p.death + p.progression) * (p.death + p.recovery) / (p.progression * p.recruitment)
}

/// Equilibria of the reduced SIR system for a constant `beta`.
///
/// The disease-free point `(Λ/μ, 0)` is always first; the endemic point
/// `((μ+α)/β, Λ/(μ+α) − μ/β)` follows only when R₀ > 1.
pub fn equilibria(p: &SirParams, beta: f64) -> Result<Vec<[f64; 2]>> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::contract(format!("beta must be > 0, got {beta}")));
    }
    let mut out = vec![[p.recruitment / p.death, 0.0]];
    if basic_reproduction_number(p, beta) > 1.0 {
        let removal = p.death + p.recovery;
        out.push([removal / beta, p.recruitment / removal - p.death / beta]);
    }
    Ok(out)
}
