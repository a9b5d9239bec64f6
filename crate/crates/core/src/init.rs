//! State-vector initializations and timescale rules.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ssm::{SsmModel, StateVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Scheme {
    /// `w_j = real_part + i * imag_scale * π j`.
    S4dLin,
    /// `w_j = -j`.
    S4dReal,
    /// Caller-supplied nodes.
    Custom(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub scheme: Scheme,
    pub m: usize,
    pub real_part: f64,
    /// Fraction of modes whose real part is reset to zero.
    pub zero_real_fraction: f64,
    pub imag_scale: f64,
    pub seed: u64,
}

impl InitSpec {
    pub fn s4d_lin(m: usize) -> Self {
        Self {
            scheme: Scheme::S4dLin,
            m,
            real_part: -0.5,
            zero_real_fraction: 0.0,
            imag_scale: 1.0,
            seed: 0,
        }
    }

    pub fn s4d_real(m: usize) -> Self {
        Self {
            scheme: Scheme::S4dReal,
            ..Self::s4d_lin(m)
        }
    }

    pub fn with_zero_real_fraction(mut self, p: f64) -> Self {
        self.zero_real_fraction = p;
        self
    }

    pub fn with_real_part(mut self, a: f64) -> Self {
        self.real_part = a;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidInput("m must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.zero_real_fraction) {
            return Err(Error::InvalidInput(format!(
                "zero_real_fraction {} outside [0, 1]",
                self.zero_real_fraction
            )));
        }
        if !(self.imag_scale > 0.0 && self.imag_scale.is_finite()) {
            return Err(Error::InvalidInput("imag_scale must be positive".into()));
        }
        if let Scheme::Custom(nodes) = &self.scheme {
            if nodes.len() != self.m {
                return Err(Error::LengthMismatch {
                    expected: self.m,
                    got: nodes.len(),
                });
            }
        }
        Ok(())
    }

    /// Number of modes that get a zero real part: `⌈p m⌉`.
    pub fn zero_real_count(&self) -> usize {
        // shave roundoff so that e.g. 0.3 * 10 does not round up to 4
        ((self.zero_real_fraction * self.m as f64) - 1e-9).ceil().max(0.0) as usize
    }
}

pub fn make_state_vector(spec: &InitSpec) -> Result<StateVector> {
    spec.validate()?;
    let m = spec.m;
    let (mut real, imag): (Vec<f64>, Vec<f64>) = match &spec.scheme {
        Scheme::S4dLin => (1..=m)
            .map(|j| (spec.real_part, spec.imag_scale * PI * j as f64))
            .unzip(),
        Scheme::S4dReal => (1..=m).map(|j| (-(j as f64), 0.0)).unzip(),
        Scheme::Custom(nodes) => nodes.iter().map(|z| (z.re, z.im)).unzip(),
    };
    let k = spec.zero_real_count();
    if k > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for j in index::sample(&mut rng, m, k) {
            real[j] = 0.0;
        }
    }
    StateVector::new(real, imag)
}

/// Read-out with `Re c_j, Im c_j` iid standard normal.
pub fn sample_readout<R: Rng>(m: usize, rng: &mut R) -> Vec<Complex64> {
    (0..m)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// A full model: nodes from `spec`, read-out drawn from `seed + 1`.
pub fn make_model(spec: &InitSpec, delta: f64) -> Result<SsmModel> {
    let w = make_state_vector(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let c = sample_readout(spec.m, &mut rng);
    SsmModel::new(w, c, delta)
}

/// Data-dependent timescale `c0 / sqrt(L λ_max)`.
pub fn timescale_from_data(len: usize, lambda_max: f64, c0: f64) -> Result<f64> {
    if len == 0 || !(lambda_max > 0.0) || !(c0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "timescale needs L >= 1, lambda_max > 0, c0 > 0 (got {len}, {lambda_max}, {c0})"
        )));
    }
    Ok(c0 / (len as f64 * lambda_max).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimescaleMode {
    FixedConstant(f64),
    /// `Δ = L^{-exponent}`.
    PowerLaw(f64),
    /// `Δ = c0 / sqrt(L λ_max)`.
    DataDependent { lambda_max: f64, c0: f64 },
    /// Per-channel draws from `U[delta_min, delta_max]`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimescaleRule {
    pub mode: TimescaleMode,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl TimescaleRule {
    pub fn uniform(delta_min: f64, delta_max: f64) -> Result<Self> {
        if !(delta_min > 0.0 && delta_min <= delta_max && delta_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "need 0 < delta_min <= delta_max, got ({delta_min}, {delta_max})"
            )));
        }
        Ok(Self {
            mode: TimescaleMode::Uniform,
            delta_min,
            delta_max,
        })
    }

    /// The deterministic timescale for sequences of length `len`; for the
    /// uniform mode this is the interval midpoint.
    pub fn delta_for(&self, len: usize) -> Result<f64> {
        match self.mode {
            TimescaleMode::FixedConstant(d) if d > 0.0 => Ok(d),
            TimescaleMode::FixedConstant(d) => {
                Err(Error::InvalidInput(format!("delta must be positive, got {d}")))
            }
            TimescaleMode::PowerLaw(alpha) => Ok((len as f64).powf(-alpha)),
            TimescaleMode::DataDependent { lambda_max, c0 } => {
                timescale_from_data(len, lambda_max, c0)
            }
            TimescaleMode::Uniform => Ok(0.5 * (self.delta_min + self.delta_max)),
        }
    }
}

/// `d` iid draws from `U[delta_min, delta_max]`.
pub fn sample_timescales(rule: &TimescaleRule, d: usize, seed: u64) -> Result<Vec<f64>> {
    if !(rule.delta_min > 0.0 && rule.delta_min <= rule.delta_max) {
        return Err(Error::InvalidInput(format!(
            "need 0 < delta_min <= delta_max, got ({}, {})",
            rule.delta_min, rule.delta_max
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = rule.delta_max - rule.delta_min;
    Ok((0..d)
        .map(|_| rule.delta_min + width * rng.random::<f64>())
        .collect())
}
