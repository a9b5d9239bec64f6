//! Synthetic Gaussian-process inputs and their autocorrelation spectrum.
//!
//! The four synthetic kinds all have unit diagonal, so `Tr K = L` and
//! `1 <= λ_max(K) <= L`.

use nalgebra::{Cholesky, DMatrix, DVector, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry, power_iteration, sym_eigenvalues};

/// Above this length λ_max switches from a dense eigensolve to power iteration.
pub const DENSE_LIMIT: usize = 2048;
pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITERS: usize = 100_000;
/// Sample count used for sample autocorrelation estimates.
pub const DEFAULT_SAMPLES: usize = 1000;

const VALIDATION_TOL: f64 = 1e-8;
const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum AutocovKind {
    /// `K = I`.
    Iid,
    /// `K(i, j) = exp(-|i - j| / length_scale)`.
    Ou { length_scale: f64 },
    /// `K(i, j) = exp(-|i - j|^2 / length_scale)`.
    Rbf { length_scale: f64 },
    /// `K = Σ Σ^T / L` with `Σ_ij ~ U[0, √3]`.
    RandPsd { seed: u64 },
    Empirical(DMatrix<f64>),
}

impl AutocovKind {
    pub fn ou() -> Self {
        AutocovKind::Ou { length_scale: 2.0 }
    }

    pub fn rbf() -> Self {
        AutocovKind::Rbf {
            length_scale: 1.0 / std::f64::consts::PI,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AutocovKind::Iid => "iid",
            AutocovKind::Ou { .. } => "ou",
            AutocovKind::Rbf { .. } => "rbf",
            AutocovKind::RandPsd { .. } => "rand",
            AutocovKind::Empirical(_) => "empirical",
        }
    }

    /// Parses `iid | ou | rbf | rand`; `rand` takes its matrix seed from `seed`.
    pub fn parse(name: &str, seed: u64) -> Result<Self> {
        match name {
            "iid" => Ok(AutocovKind::Iid),
            "ou" => Ok(AutocovKind::ou()),
            "rbf" => Ok(AutocovKind::rbf()),
            "rand" => Ok(AutocovKind::RandPsd { seed }),
            other => Err(Error::Parse(format!(
                "unknown autocovariance kind '{other}' (expected iid, ou, rbf, rand)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutocovSpec {
    pub kind: AutocovKind,
    pub len: usize,
}

impl AutocovSpec {
    pub fn new(kind: AutocovKind, len: usize) -> Self {
        Self { kind, len }
    }
}

pub fn build_autocov(spec: &AutocovSpec) -> Result<DMatrix<f64>> {
    let n = spec.len;
    if n == 0 {
        return Err(Error::InvalidInput("sequence length must be >= 1".into()));
    }
    let lag = |i: usize, j: usize| (i as f64 - j as f64).abs();
    Ok(match &spec.kind {
        AutocovKind::Iid => DMatrix::identity(n, n),
        AutocovKind::Ou { length_scale } => {
            DMatrix::from_fn(n, n, |i, j| (-lag(i, j) / length_scale).exp())
        }
        AutocovKind::Rbf { length_scale } => {
            DMatrix::from_fn(n, n, |i, j| (-lag(i, j).powi(2) / length_scale).exp())
        }
        AutocovKind::RandPsd { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let top = 3f64.sqrt();
            let sigma = DMatrix::from_fn(n, n, |_, _| top * rng.random::<f64>());
            &sigma * sigma.transpose() / n as f64
        }
        AutocovKind::Empirical(k) => {
            if k.nrows() != n || k.ncols() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: k.nrows(),
                });
            }
            validate_psd(k)?;
            k.clone()
        }
    })
}

/// Symmetric within `1e-8` and no eigenvalue below `-1e-8`.
pub fn validate_psd(k: &DMatrix<f64>) -> Result<()> {
    if !k.is_square() {
        return Err(Error::InvalidInput("covariance must be square".into()));
    }
    let asymmetry = max_asymmetry(k);
    if asymmetry > VALIDATION_TOL {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let min_eigenvalue = sym_eigenvalues(k)[0];
    if min_eigenvalue < -VALIDATION_TOL {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    Ok(())
}

/// Lower factor `F` with `F F^T = K` (jittered if plain Cholesky fails).
pub fn covariance_factor(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if k.iter().all(|&v| v == 0.0) {
        return Ok(k.clone());
    }
    if let Some(ch) = Cholesky::new(k.clone()) {
        return Ok(ch.l());
    }
    let n = k.nrows();
    let jittered = k + DMatrix::identity(n, n) * JITTER;
    Cholesky::new(jittered)
        .map(|ch| ch.l())
        .ok_or(Error::Cholesky { jitter: JITTER })
}

/// `n` iid draws from `N(0, K)`, one per row.
pub fn sample_gp(k: &DMatrix<f64>, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let factor = covariance_factor(k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_with_factor(&factor, n, &mut rng))
}

pub(crate) fn sample_with_factor<R: Rng>(factor: &DMatrix<f64>, n: usize, rng: &mut R) -> DMatrix<f64> {
    let len = factor.nrows();
    let z = DMatrix::from_fn(len, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    (factor * z).transpose()
}

/// Uncentered sample autocorrelation `X^T X / n`.
pub fn sample_autocorrelation(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.transpose() * x / x.nrows() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpectrumMethod {
    Exact,
    PowerIteration { iters: usize, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub lambda_max: f64,
    pub trace: f64,
    pub len: usize,
    pub method: SpectrumMethod,
}

/// Largest eigenvalue of a symmetric matrix.
pub fn lambda_max(k: &DMatrix<f64>) -> Result<SpectrumReport> {
    if !k.is_square() {
        return Err(Error::InvalidInput("lambda_max needs a square matrix".into()));
    }
    let asymmetry = max_asymmetry(k);
    if asymmetry > VALIDATION_TOL * k.amax().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let len = k.nrows();
    let trace = k.trace();
    let (lambda_max, method) = if len <= DENSE_LIMIT {
        let ev = sym_eigenvalues(k);
        (ev[len - 1], SpectrumMethod::Exact)
    } else {
        let (lam, iters) = power_iteration(k, POWER_TOL, POWER_MAX_ITERS)?;
        (
            lam,
            SpectrumMethod::PowerIteration {
                iters,
                tol: POWER_TOL,
            },
        )
    };
    Ok(SpectrumReport {
        lambda_max,
        trace,
        len,
        method,
    })
}

/// λ_max of the sample autocorrelation of the rows of `x`.
pub fn lambda_max_of_samples(x: &DMatrix<f64>) -> Result<SpectrumReport> {
    lambda_max(&sample_autocorrelation(x))
}

#[derive(Debug, Clone)]
pub struct Whitening {
    pub data: DMatrix<f64>,
    /// Applied to centered rows: `white = (x - mean) * transform`.
    pub transform: DMatrix<f64>,
    pub mean: DVector<f64>,
}

impl Whitening {
    /// Applies the fitted centering and transform to new rows.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::LengthMismatch {
                expected: self.mean.len(),
                got: x.ncols(),
            });
        }
        let centered = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - self.mean[j]);
        Ok(centered * &self.transform)
    }
}

pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Centers the columns and rotates/scales so the sample autocorrelation is the
/// identity, using a relative ridge of [`DEFAULT_RIDGE`].
pub fn whiten(x: &DMatrix<f64>) -> Result<Whitening> {
    whiten_with_ridge(x, DEFAULT_RIDGE)
}

/// Symmetric (ZCA) whitening from the SVD of the centered data. Each squared
/// singular value is lifted by `ridge * s_max^2`; with `ridge = 0` a
/// rank-deficient matrix is an error.
pub fn whiten_with_ridge(x: &DMatrix<f64>, ridge: f64) -> Result<Whitening> {
    let (n, len) = x.shape();
    if n < 2 || len == 0 {
        return Err(Error::InvalidInput("whitening needs at least two rows".into()));
    }
    let mean = DVector::from_fn(len, |j, _| x.column(j).mean());
    let centered = DMatrix::from_fn(n, len, |i, j| x[(i, j)] - mean[j]);
    let svd = SVD::new(centered.clone(), false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::InvalidInput("SVD did not return right singular vectors".into()))?;
    let s = &svd.singular_values;
    let s_max = s.max();
    let k = s.len();
    let floor = ridge * s_max * s_max;
    let tiny = s_max * f64::EPSILON * (n.max(len) as f64);
    if ridge == 0.0 && (k < len || s.iter().any(|&sv| sv <= tiny)) {
        return Err(Error::InvalidInput(
            "data matrix is rank deficient; whitening needs a ridge".into(),
        ));
    }
    let scale = DVector::from_fn(k, |i, _| (n as f64 / (s[i] * s[i] + floor)).sqrt());
    // T = V diag(scale) V^T
    let v = v_t.transpose();
    let scaled = DMatrix::from_fn(len, k, |i, j| v[(i, j)] * scale[j]);
    let transform = scaled * &v_t;
    let data = centered * &transform;
    Ok(Whitening {
        data,
        transform,
        mean,
    })
}
