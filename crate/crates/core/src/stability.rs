//! Output-magnitude bound `E[y_L^2] <= Δ² m² L λ_max(E[x x^T])` for
//! `Re(w) <= 0`, and its Monte Carlo counterpart.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autocorr::{covariance_factor, lambda_max, sample_with_factor};
use crate::error::{Error, Result};
use crate::init::sample_readout;
use crate::ssm::{safe_ez_ratio, vandermonde_factor, SsmModel, StateVector};

pub const DEFAULT_DRAWS: usize = 256;

pub fn theorem1_bound(delta: f64, m: usize, len: usize, lambda_max: f64) -> f64 {
    delta * delta * (m * m) as f64 * len as f64 * lambda_max
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OutputMode {
    /// `y_L^2`.
    #[default]
    Final,
    /// `(1/L) sum_l y_l^2`.
    Pooling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeConfig {
    pub n_c: usize,
    pub n_x: usize,
    pub seed: u64,
    pub mode: OutputMode,
}

impl Default for MagnitudeConfig {
    fn default() -> Self {
        Self {
            n_c: DEFAULT_DRAWS,
            n_x: DEFAULT_DRAWS,
            seed: 0,
            mode: OutputMode::Final,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub bound: f64,
    pub empirical: f64,
    /// Standard error of `empirical` over the crossed c/x design.
    pub stderr: f64,
    pub n_samples: usize,
    pub delta: f64,
    pub len: usize,
    pub m: usize,
    /// Largest real part among the modes.
    pub real_part: f64,
    pub lambda_max: f64,
}

impl StabilityReport {
    /// `empirical <= bound + sigmas * stderr`.
    pub fn dominated(&self, sigmas: f64) -> bool {
        self.empirical <= self.bound + sigmas * self.stderr
    }
}

/// `N(0, K)` input distribution with its sampling factor and `λ_max(K)`
/// computed once, for reuse across many cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianInputs {
    pub factor: DMatrix<f64>,
    pub lambda_max: f64,
}

impl GaussianInputs {
    pub fn new(k: &DMatrix<f64>) -> Result<Self> {
        Ok(Self {
            lambda_max: lambda_max(k)?.lambda_max,
            factor: covariance_factor(k)?,
        })
    }

    pub fn len(&self) -> usize {
        self.factor.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Monte Carlo `E_{c,x}[y_L^2]` over `n_c` read-outs crossed with `n_x` inputs
/// drawn from `N(0, K)`.
pub fn empirical_magnitude(
    w: &StateVector,
    delta: f64,
    k: &DMatrix<f64>,
    config: &MagnitudeConfig,
) -> Result<StabilityReport> {
    check_hypothesis(w, config)?;
    empirical_magnitude_with(w, delta, &GaussianInputs::new(k)?, config)
}

fn check_hypothesis(w: &StateVector, config: &MagnitudeConfig) -> Result<()> {
    if let Some((index, &real)) = w.real().iter().enumerate().find(|(_, a)| **a > 0.0) {
        return Err(Error::PositiveRealPart { index, real });
    }
    if config.n_c < 2 || config.n_x < 2 {
        return Err(Error::InvalidInput("need at least two draws of c and x".into()));
    }
    Ok(())
}

/// [`empirical_magnitude`] with a precomputed input distribution.
pub fn empirical_magnitude_with(
    w: &StateVector,
    delta: f64,
    inputs: &GaussianInputs,
    config: &MagnitudeConfig,
) -> Result<StabilityReport> {
    check_hypothesis(w, config)?;
    let len = inputs.len();
    let m = w.len();
    let lam = inputs.lambda_max;
    let factor = &inputs.factor;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // stacked read-outs, one per column
    let mut cs = DMatrix::zeros(2 * m, config.n_c);
    for col in 0..config.n_c {
        let c = sample_readout(m, &mut rng);
        for j in 0..m {
            cs[(j, col)] = c[j].re;
            cs[(m + j, col)] = c[j].im;
        }
    }
    let xs = sample_with_factor(factor, config.n_x, &mut rng);

    // squared outputs, rows = c draws, columns = x draws
    let squares = match config.mode {
        OutputMode::Final => {
            let model = SsmModel::new(w.clone(), vec![Default::default(); m], delta)?;
            let f = vandermonde_factor(&model, len)?;
            // columns: Δ V J x
            let reversed = DMatrix::from_fn(len, config.n_x, |l, n| xs[(n, len - 1 - l)]);
            let u = &f.v * reversed * delta;
            let y = cs.transpose() * u;
            y.map(|v| v * v)
        }
        OutputMode::Pooling => pooled_squares(w, delta, &cs, &xs),
    };

    let (empirical, stderr) = crossed_mean(&squares);
    Ok(StabilityReport {
        bound: theorem1_bound(delta, m, len, lam),
        empirical,
        stderr,
        n_samples: config.n_c * config.n_x,
        delta,
        len,
        m,
        real_part: w.real().iter().copied().fold(f64::NEG_INFINITY, f64::max),
        lambda_max: lam,
    })
}

/// `(1/L) sum_l y_l^2` for every (c, x) pair, via the diagonal recurrence.
fn pooled_squares(w: &StateVector, delta: f64, cs: &DMatrix<f64>, xs: &DMatrix<f64>) -> DMatrix<f64> {
    let m = w.len();
    let (n_x, len) = xs.shape();
    let n_c = cs.ncols();
    let steps: Vec<_> = w.iter().map(|wj| (wj * delta).exp()).collect();
    let gains: Vec<_> = w.iter().map(|wj| delta * safe_ez_ratio(wj * delta)).collect();
    let mut out = DMatrix::zeros(n_c, n_x);
    for n in 0..n_x {
        // rows: (Re h, -Im h) after each input
        let mut states = DMatrix::zeros(len, 2 * m);
        let mut h = vec![num_complex::Complex64::new(0.0, 0.0); m];
        for l in 0..len {
            for j in 0..m {
                h[j] = steps[j] * h[j] + gains[j] * xs[(n, l)];
                states[(l, j)] = h[j].re;
                states[(l, m + j)] = -h[j].im;
            }
        }
        let y = states * cs;
        for c in 0..n_c {
            out[(c, n)] = y.column(c).norm_squared() / len as f64;
        }
    }
    out
}

/// Grand mean and its standard error for a crossed two-factor design:
/// `var(row means)/rows + var(column means)/cols`.
fn crossed_mean(z: &DMatrix<f64>) -> (f64, f64) {
    let (rows, cols) = z.shape();
    let mean = z.mean();
    let row_means: Vec<f64> = z.row_iter().map(|r| r.mean()).collect();
    let col_means: Vec<f64> = z.column_iter().map(|c| c.mean()).collect();
    let var = |v: &[f64]| {
        let mu = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let se2 = var(&row_means) / rows as f64 + var(&col_means) / cols as f64;
    (mean, se2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_arithmetic() {
        for len in [4usize, 64, 1000] {
            let l = len as f64;
            assert!((theorem1_bound(l.powf(-0.5), 1, len, 1.0) - 1.0).abs() < 1e-12);
            assert!((theorem1_bound(1.0 / l, 1, len, l) - 1.0).abs() < 1e-12);
        }
        assert!((theorem1_bound(0.1, 32, 128, 1.0) - 1310.72).abs() < 1e-9);
    }

    #[test]
    fn positive_real_part_rejected() {
        let w = StateVector::new(vec![-0.5, 0.1], vec![1.0, 2.0]).unwrap();
        let err = empirical_magnitude(&w, 0.1, &DMatrix::identity(4, 4), &MagnitudeConfig::default());
        assert!(matches!(err, Err(Error::PositiveRealPart { index: 1, .. })));
    }

    #[test]
    fn zero_input_distribution() {
        let w = StateVector::new(vec![-0.5], vec![1.0]).unwrap();
        let r = empirical_magnitude(&w, 0.1, &DMatrix::zeros(8, 8), &MagnitudeConfig::default())
            .unwrap();
        assert_eq!(r.empirical, 0.0);
        assert!(r.dominated(0.0));
    }

    #[test]
    fn pooling_matches_direct_sequence() {
        let w = StateVector::new(vec![-0.2, 0.0], vec![1.0, 3.0]).unwrap();
        let k = DMatrix::identity(6, 6);
        let cfg = MagnitudeConfig {
            n_c: 3,
            n_x: 4,
            seed: 11,
            mode: OutputMode::Pooling,
        };
        let r = empirical_magnitude(&w, 0.3, &k, &cfg).unwrap();

        // replay the same draws through forward_sequence
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cs: Vec<_> = (0..3).map(|_| sample_readout(2, &mut rng)).collect();
        let xs = sample_with_factor(&covariance_factor(&k).unwrap(), 4, &mut rng);
        let mut total = 0.0;
        for c in &cs {
            let model = SsmModel::new(w.clone(), c.clone(), 0.3).unwrap();
            for n in 0..4 {
                let x: Vec<f64> = xs.row(n).iter().copied().collect();
                let y = crate::ssm::forward_sequence(&model, &x).unwrap();
                total += y.iter().map(|v| v * v).sum::<f64>() / 6.0;
            }
        }
        assert!((r.empirical - total / 12.0).abs() < 1e-12 * total.abs().max(1.0));
    }
}
