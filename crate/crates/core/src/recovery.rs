//! Memory-function recovery from input/label pairs, spectral peak picking and
//! separation-maximizing node selection.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::TradeoffTarget;
use crate::ssm::DiscreteKernel;

/// A target memory function, stored per channel or in closed form.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetMemory {
    /// `L × C`, one column per output channel.
    Raw(DMatrix<f64>),
    /// `ρ*(s) = e^{-s/2} ĉ^T cos(ξ s)`.
    Parametric(TradeoffTarget),
}

impl TargetMemory {
    pub fn single(values: Vec<f64>) -> Self {
        let len = values.len();
        TargetMemory::Raw(DMatrix::from_vec(len, 1, values))
    }

    pub fn channels(&self) -> usize {
        match self {
            TargetMemory::Raw(m) => m.ncols(),
            TargetMemory::Parametric(_) => 1,
        }
    }

    /// Samples the memory at `s = l * dt`, `l = 0..len`; raw memories are
    /// returned as stored.
    pub fn to_raw(&self, len: usize, dt: f64) -> DMatrix<f64> {
        match self {
            TargetMemory::Raw(m) => m.clone(),
            TargetMemory::Parametric(t) => DMatrix::from_fn(len, 1, |l, _| {
                let s = l as f64 * dt;
                (-0.5 * s).exp()
                    * t.c_hat
                        .iter()
                        .zip(&t.xi)
                        .map(|(c, x)| c * (x * s).cos())
                        .sum::<f64>()
            }),
        }
    }

    pub fn channel(&self, c: usize) -> Option<Vec<f64>> {
        match self {
            TargetMemory::Raw(m) if c < m.ncols() => Some(m.column(c).iter().copied().collect()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryProblem {
    /// `N × L` sequences.
    pub x: DMatrix<f64>,
    /// `N × C` labels.
    pub y: DMatrix<f64>,
    pub ridge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub memory: TargetMemory,
    /// Frobenius norm of `X * ρ - Y`.
    pub residual: f64,
}

/// `(X * ρ)[n, c] = sum_l ρ[l, c] X[n, L-1-l]`.
pub fn convolve(x: &DMatrix<f64>, rho: &DMatrix<f64>) -> DMatrix<f64> {
    reversed_columns(x) * rho
}

fn reversed_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let len = x.ncols();
    DMatrix::from_fn(x.nrows(), len, |n, l| x[(n, len - 1 - l)])
}

/// Least-squares (or ridge) solution of `X * ρ = Y`.
pub fn recover_memory(problem: &RecoveryProblem) -> Result<Recovery> {
    let (n, len) = problem.x.shape();
    if n == 0 || len == 0 || problem.y.ncols() == 0 {
        return Err(Error::InvalidInput("empty recovery problem".into()));
    }
    if problem.y.nrows() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: problem.y.nrows(),
        });
    }
    if problem.ridge < 0.0 {
        return Err(Error::InvalidInput("ridge must be nonnegative".into()));
    }
    let design = reversed_columns(&problem.x);
    let rho = if problem.ridge == 0.0 {
        if n < len {
            return Err(Error::Underdetermined {
                rows: n,
                len,
                suggested_ridge: 1e-6 * problem.x.norm_squared(),
            });
        }
        let svd = SVD::new(design.clone(), true, true);
        let eps = f64::EPSILON * svd.singular_values.max() * n.max(len) as f64;
        svd.solve(&problem.y, eps)
            .map_err(|e| Error::InvalidInput(e.to_string()))?
    } else {
        let normal = design.transpose() * &design + DMatrix::identity(len, len) * problem.ridge;
        let rhs = design.transpose() * &problem.y;
        Cholesky::new(normal)
            .ok_or_else(|| Error::InvalidInput("ridge normal equations not positive definite".into()))?
            .solve(&rhs)
    };
    let residual = (&design * &rho - &problem.y).norm();
    Ok(Recovery {
        memory: TargetMemory::Raw(rho),
        residual,
    })
}

/// Magnitudes of the DFT of `rho` at bins `0..=L/2`.
pub fn dft_magnitudes(rho: &[f64]) -> Vec<f64> {
    let len = rho.len();
    (0..=len / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, &v) in rho.iter().enumerate() {
                // reduce the phase index first to keep the angle small
                let angle = 2.0 * PI * ((k * n) % len) as f64 / len as f64;
                re += v * angle.cos();
                im -= v * angle.sin();
            }
            re.hypot(im)
        })
        .collect()
}

/// The `k` strongest nonzero DFT frequencies of `rho` in rad/sample, strongest
/// first; equal magnitudes go to the lower frequency.
pub fn dominant_frequencies(rho: &[f64], k: usize) -> Result<Vec<f64>> {
    let len = rho.len();
    if k > len / 2 {
        return Err(Error::TooMany {
            requested: k,
            available: len / 2,
        });
    }
    let mags = dft_magnitudes(rho);
    let scale = mags.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut bins: Vec<usize> = (1..mags.len()).collect();
    bins.sort_by(|&a, &b| {
        if (mags[a] - mags[b]).abs() <= 1e-12 * scale {
            a.cmp(&b)
        } else {
            mags[b].total_cmp(&mags[a])
        }
    });
    Ok(bins
        .into_iter()
        .take(k)
        .map(|b| 2.0 * PI * b as f64 / len as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSelection {
    /// Ascending.
    pub nodes: Vec<f64>,
    /// Minimum pairwise gap among `nodes`; infinite for a single node.
    pub separation: f64,
}

/// Picks `m` of the candidate frequencies with the largest achievable minimum
/// pairwise gap.
///
/// `dominant` is expected strongest first; with `m = 1` the strongest is kept.
/// Otherwise the optimal gap is found among the candidate pairwise gaps, each
/// tested by the left-to-right greedy sweep, which is exact in one dimension.
pub fn greedy_select_nodes(dominant: &[f64], m: usize) -> Result<NodeSelection> {
    if dominant.is_empty() || m == 0 {
        return Err(Error::InvalidInput("need candidates and m >= 1".into()));
    }
    if m > dominant.len() {
        return Err(Error::TooMany {
            requested: m,
            available: dominant.len(),
        });
    }
    if m == 1 {
        return Ok(NodeSelection {
            nodes: vec![dominant[0]],
            separation: f64::INFINITY,
        });
    }
    let mut sorted = dominant.to_vec();
    sorted.sort_by(f64::total_cmp);

    let sweep = |gap: f64| -> Vec<f64> {
        let mut chosen = vec![sorted[0]];
        for &f in &sorted[1..] {
            if chosen.len() == m {
                break;
            }
            if f - chosen[chosen.len() - 1] >= gap {
                chosen.push(f);
            }
        }
        chosen
    };

    let mut gaps: Vec<f64> = Vec::new();
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            gaps.push(sorted[j] - sorted[i]);
        }
    }
    gaps.sort_by(f64::total_cmp);
    gaps.dedup();
    // feasibility is monotone in the gap: binary search the largest feasible one
    let (mut lo, mut hi) = (0usize, gaps.len());
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if sweep(gaps[mid]).len() == m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nodes = sweep(gaps[lo]);
    let separation = nodes
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    Ok(NodeSelection { nodes, separation })
}

/// `‖ρ̃ - ρ*‖²`, the expected squared final-output error under white inputs.
pub fn expected_mse(kernel: &DiscreteKernel, target: &[f64]) -> Result<f64> {
    if kernel.len() != target.len() {
        return Err(Error::LengthMismatch {
            expected: kernel.len(),
            got: target.len(),
        });
    }
    Ok(kernel
        .values
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b).powi(2))
        .sum())
}
