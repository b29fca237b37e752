//! Noise families and their diffusion matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::SirParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    /// Constant intensity per equation: `σᵢ dWᵢ`.
    AdditiveWhite,
    /// Intensity proportional to the compartment: `σᵢ Xᵢ dWᵢ`.
    MultiplicativeEnvironmental,
    /// State-dependent diffusion from the event covariance of the SIR model.
    Demographic,
}

impl NoiseFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseFamily::AdditiveWhite => "additive-white",
            NoiseFamily::MultiplicativeEnvironmental => "environmental",
            NoiseFamily::Demographic => "demographic",
        }
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive-white" | "white" => Ok(NoiseFamily::AdditiveWhite),
            "environmental" => Ok(NoiseFamily::MultiplicativeEnvironmental),
            "demographic" => Ok(NoiseFamily::Demographic),
            other => Err(Error::InvalidValue {
                key: "noise".into(),
                message: format!(
                    "unknown noise family `{other}` (expected additive-white, environmental, demographic)"
                ),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    /// One intensity per stochastic equation; empty for demographic noise.
    pub intensities: Vec<f64>,
}

impl NoiseSpec {
    pub fn additive(intensities: Vec<f64>) -> Result<Self> {
        Self::with_family(NoiseFamily::AdditiveWhite, intensities)
    }

    pub fn environmental(intensities: Vec<f64>) -> Result<Self> {
        Self::with_family(NoiseFamily::MultiplicativeEnvironmental, intensities)
    }

    pub fn demographic() -> Self {
        NoiseSpec {
            family: NoiseFamily::Demographic,
            intensities: Vec::new(),
        }
    }

    fn with_family(family: NoiseFamily, intensities: Vec<f64>) -> Result<Self> {
        let spec = NoiseSpec { family, intensities };
        spec.validate(None)?;
        Ok(spec)
    }

    /// Checks intensities, and their count against `dim` when given.
    pub fn validate(&self, dim: Option<usize>) -> Result<()> {
        match self.family {
            NoiseFamily::Demographic => {
                if !self.intensities.is_empty() {
                    return Err(Error::contract("demographic noise takes no intensities"));
                }
                if let Some(d) = dim {
                    if d != 2 {
                        return Err(Error::contract(
                            "demographic noise is defined for the reduced SIR model only",
                        ));
                    }
                }
            }
            _ => {
                if let Some(&bad) = self.intensities.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
                    return Err(Error::contract(format!(
                        "noise intensities must be finite and >= 0, got {bad}"
                    )));
                }
                if let Some(d) = dim {
                    if self.intensities.len() != d {
                        return Err(Error::Dimension {
                            expected: d,
                            got: self.intensities.len(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * m.n + i] = v;
        }
        m
    }

    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        Matrix {
            n: N,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    /// `M · Mᵀ`.
    pub fn gram(&self) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = (0..n).map(|k| self.get(i, k) * self.get(j, k)).sum();
            }
        }
        out
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Constant `diag(σ₁, …, σₙ)`.
pub fn diffusion_additive(spec: &NoiseSpec) -> Result<Matrix> {
    if spec.family != NoiseFamily::AdditiveWhite {
        return Err(Error::contract(format!(
            "additive diffusion requested for {} noise",
            spec.family
        )));
    }
    spec.validate(None)?;
    Ok(Matrix::diagonal(&spec.intensities))
}

/// `diag(σ₁X₁, …, σₙXₙ)`.
pub fn diffusion_environmental(spec: &NoiseSpec, state: &[f64]) -> Result<Matrix> {
    if spec.family != NoiseFamily::MultiplicativeEnvironmental {
        return Err(Error::contract(format!(
            "environmental diffusion requested for {} noise",
            spec.family
        )));
    }
    spec.validate(Some(state.len()))?;
    if let Some(bad) = state.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::contract(format!("negative compartment {bad}")));
    }
    let diag: Vec<f64> = spec.intensities.iter().zip(state).map(|(s, x)| s * x).collect();
    Ok(Matrix::diagonal(&diag))
}

/// Entries of the demographic event covariance and its square root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemographicTerms {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl DemographicTerms {
    pub fn compute(s: f64, i: f64, p: &SirParams, beta: f64) -> Result<Self> {
        if !(s >= 0.0 && i >= 0.0 && beta >= 0.0) {
            return Err(Error::contract(format!(
                "demographic diffusion needs S, I, beta >= 0 (S={s}, I={i}, beta={beta})"
            )));
        }
        let infection = beta * s * i;
        let a = p.recruitment + infection + p.death * s;
        let b = -infection;
        let c = infection + p.recovery * i + p.death * i;
        // ac − b² = (Λ + μS)·c + βSI·(αI + μI) ≥ 0; clamp rounding below zero.
        let d = (a * c - b * b).max(0.0).sqrt();
        let e = (a + c + 2.0 * d).sqrt();
        if e == 0.0 {
            return Err(Error::SingularDiffusion { s, i });
        }
        Ok(DemographicTerms { a, b, c, d, e })
    }

    /// The covariance rate `V = [[a, b], [b, c]]`.
    pub fn covariance(&self) -> Matrix {
        Matrix::from_rows([[self.a, self.b], [self.b, self.c]])
    }

    /// `G = [[a + d, b], [b, c + d]] / e`, the symmetric square root of `V`.
    pub fn sqrt(&self) -> [[f64; 2]; 2] {
        let inv = 1.0 / self.e;
        [
            [(self.a + self.d) * inv, self.b * inv],
            [self.b * inv, (self.c + self.d) * inv],
        ]
    }
}

pub fn diffusion_demographic(state: &[f64], p: &SirParams, beta: f64) -> Result<Matrix> {
    if state.len() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: state.len(),
        });
    }
    let terms = DemographicTerms::compute(state[0], state[1], p, beta)?;
    Ok(Matrix::from_rows(terms.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_is_constant_diagonal() {
        let spec = NoiseSpec::additive(vec![0.5, 0.5]).unwrap();
        let g = diffusion_additive(&spec).unwrap();
        assert_eq!(g, Matrix::from_rows([[0.5, 0.0], [0.0, 0.5]]));
        assert!(diffusion_additive(&NoiseSpec::additive(vec![0.0, 0.0]).unwrap())
            .unwrap()
            .is_zero());
        let seir = NoiseSpec::additive(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let g4 = diffusion_additive(&seir).unwrap();
        assert_eq!(g4.dim(), 4);
        assert_eq!(g4.get(2, 2), 0.3);
        assert_eq!(g4.get(2, 1), 0.0);
        assert!(diffusion_additive(&NoiseSpec::demographic()).is_err());
    }

    #[test]
    fn environmental_scales_with_state() {
        let spec = NoiseSpec::environmental(vec![0.5, 0.5]).unwrap();
        let g = diffusion_environmental(&spec, &[500.0, 7.0]).unwrap();
        assert_eq!(g, Matrix::from_rows([[250.0, 0.0], [0.0, 3.5]]));
        let g0 = diffusion_environmental(&spec, &[500.0, 0.0]).unwrap();
        assert_eq!(g0.get(1, 1), 0.0);
        assert!(diffusion_environmental(&spec, &[-1.0, 3.0]).is_err());
        let zero = NoiseSpec::environmental(vec![0.0, 0.0]).unwrap();
        assert!(diffusion_environmental(&zero, &[500.0, 7.0]).unwrap().is_zero());
    }

    #[test]
    fn demographic_hand_values() {
        let p = SirParams::standard();
        let t = DemographicTerms::compute(500.0, 7.0, &p, 0.01).unwrap();
        assert!((t.a - 635.0).abs() < 1e-12);
        assert!((t.b + 35.0).abs() < 1e-12);
        assert!((t.c - 49.0).abs() < 1e-12);
        assert!((t.d - 172.887).abs() < 1e-3, "d = {}", t.d);
        assert!((t.e - 32.090).abs() < 1e-3, "e = {}", t.e);
        let g = diffusion_demographic(&[500.0, 7.0], &p, 0.01).unwrap();
        let err = g.gram().sub(&t.covariance()).norm();
        assert!(err <= 1e-9 * t.covariance().norm());
    }

    #[test]
    fn demographic_disease_free_is_diagonal() {
        let p = SirParams::standard();
        let g = diffusion_demographic(&[80.0, 0.0], &p, 0.3).unwrap();
        let a: f64 = 100.0 + 80.0;
        assert!((g.get(0, 0) - a.sqrt()).abs() < 1e-12);
        assert_eq!(g.get(0, 1), 0.0);
        assert_eq!(g.get(1, 1), 0.0);
    }

    #[test]
    fn demographic_rejects_bad_state() {
        let p = SirParams::standard();
        assert!(diffusion_demographic(&[-1.0, 2.0], &p, 0.1).is_err());
        assert!(diffusion_demographic(&[1.0, 2.0, 3.0], &p, 0.1).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(NoiseSpec::additive(vec![-0.1]).is_err());
        let spec = NoiseSpec::additive(vec![0.1, 0.2]).unwrap();
        assert!(spec.validate(Some(4)).is_err());
        assert!(NoiseSpec::demographic().validate(Some(4)).is_err());
        assert_eq!("white".parse::<NoiseFamily>().unwrap(), NoiseFamily::AdditiveWhite);
        assert!("pink".parse::<NoiseFamily>().is_err());
    }
}
