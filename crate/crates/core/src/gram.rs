//! Gram matrices of SSM basis kernels in `L²[0, ∞)` and the
//! approximation–estimation tradeoff they induce.
//!
//! For `w_j = -1/2 + i v_j` the basis kernels are `e^{-s/2} cos(v_j s)` and
//!
//! ```text
//! G[j,k] = ∫ e^{-s} cos(v_j s) cos(v_k s) ds = ½ (1/(1+(v_j-v_k)²) + 1/(1+(v_j+v_k)²))
//! ```
//!
//! For real nodes `w_j = a_j < 0`, `G[j,k] = -1/(a_j + a_k)`, a Cauchy matrix
//! (Hilbert-like for `a_j = -j`).

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{integrate, sym_eigenvalues};
use crate::ssm::StateVector;

/// `approximation_matrix` refuses Gram matrices conditioned worse than this.
pub const MAX_CONDITION: f64 = 1e12;

/// `∫_0^∞ e^{-s} cos(a s) cos(b s) ds`.
pub fn cosine_integral(a: f64, b: f64) -> f64 {
    0.5 * (1.0 / (1.0 + (a - b).powi(2)) + 1.0 / (1.0 + (a + b).powi(2)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GramSource {
    /// `w_j = -1/2 + i v_j`.
    ComplexHalf(Vec<f64>),
    /// `w_j = a_j`, all negative.
    RealNodes(Vec<f64>),
    /// Arbitrary `w`, integrated numerically.
    Quadrature { real: Vec<f64>, imag: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub entries: DMatrix<f64>,
    pub source: GramSource,
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        sym_eigenvalues(&self.entries)
    }

    /// Spectral condition number. Real-node Gram matrices use the closed-form
    /// Cauchy inverse, so the value stays meaningful past `1/ε`.
    pub fn condition_number(&self) -> f64 {
        match &self.source {
            GramSource::RealNodes(a) => cauchy_condition(a),
            _ => {
                let ev = self.eigenvalues();
                let (lo, hi) = (ev[0], ev[ev.len() - 1]);
                if lo <= 0.0 {
                    f64::INFINITY
                } else {
                    hi / lo
                }
            }
        }
    }
}

pub fn gram_complex(v: &[f64]) -> GramMatrix {
    let m = v.len();
    GramMatrix {
        entries: DMatrix::from_fn(m, m, |j, k| cosine_integral(v[j], v[k])),
        source: GramSource::ComplexHalf(v.to_vec()),
    }
}

pub fn gram_real(a: &[f64]) -> Result<GramMatrix> {
    if a.is_empty() {
        return Err(Error::InvalidInput("need at least one node".into()));
    }
    let m = a.len();
    for j in 0..m {
        for k in j..m {
            if a[j] + a[k] >= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "a_{j} + a_{k} = {} must be negative for the integral to converge",
                    a[j] + a[k]
                )));
            }
        }
    }
    Ok(GramMatrix {
        entries: DMatrix::from_fn(m, m, |j, k| -1.0 / (a[j] + a[k])),
        source: GramSource::RealNodes(a.to_vec()),
    })
}

/// `G[j,k] = ∫ Re(e^{w_j s}) Re(e^{w_k s}) ds` by adaptive quadrature, for any
/// `w` with negative real parts.
pub fn gram_quadrature(w: &StateVector, tol: f64) -> Result<GramMatrix> {
    if let Some(a) = w.real().iter().find(|a| **a >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "quadrature Gram needs Re(w) < 0, got {a}"
        )));
    }
    let m = w.len();
    let (re, im) = (w.real(), w.imag());
    let mut g = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let decay = re[j] + re[k];
            // e^{decay * S} < 1e-16 relative to the integrand scale
            let end = 37.0 / -decay;
            let f = |s: f64| (decay * s).exp() * (im[j] * s).cos() * (im[k] * s).cos();
            let value = integrate(f, 0.0, end, tol);
            g[(j, k)] = value;
            g[(k, j)] = value;
        }
    }
    Ok(GramMatrix {
        entries: g,
        source: GramSource::Quadrature {
            real: re.to_vec(),
            imag: im.to_vec(),
        },
    })
}

/// Closed-form inverse of `C[i,j] = 1/(x_i + x_j)`, `x_i > 0` distinct.
pub fn cauchy_inverse(x: &[f64]) -> DMatrix<f64> {
    let m = x.len();
    // C[i,j] = 1/(x_i - y_j) with y = -x; inverse entries from the
    // polynomials A(t) = Π(t - x_k), B(t) = Π(t - y_k).
    let a_at = |t: f64| x.iter().map(|xk| t - xk).product::<f64>();
    let b_at = |t: f64| x.iter().map(|xk| t + xk).product::<f64>();
    let a_prime = |j: usize| {
        (0..m)
            .filter(|&k| k != j)
            .map(|k| x[j] - x[k])
            .product::<f64>()
    };
    let b_prime = |i: usize| {
        (0..m)
            .filter(|&k| k != i)
            .map(|k| -x[i] + x[k])
            .product::<f64>()
    };
    DMatrix::from_fn(m, m, |i, j| {
        let yi = -x[i];
        -a_at(yi) * b_at(x[j]) / ((x[j] - yi) * a_prime(j) * b_prime(i))
    })
}

fn cauchy_condition(a: &[f64]) -> f64 {
    let x: Vec<f64> = a.iter().map(|v| -v).collect();
    let g = DMatrix::from_fn(x.len(), x.len(), |j, k| 1.0 / (x[j] + x[k]));
    let inv = cauchy_inverse(&x);
    if inv.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let hi = *sym_eigenvalues(&g).last().unwrap();
    let hi_inv = *sym_eigenvalues(&inv).last().unwrap();
    hi * hi_inv
}

/// Minimum pairwise gap `min_{j≠k} |v_j - v_k|`; infinite for one node.
pub fn separation_distance(v: &[f64]) -> f64 {
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBounds {
    pub lower: f64,
    pub upper: f64,
    pub delta: f64,
}

impl SpectrumBounds {
    pub fn contains(&self, lambda: f64) -> bool {
        self.lower < lambda && lambda < self.upper
    }
}

/// Eigenvalue enclosure of `gram_complex` for nodes separated by `delta`:
/// `(1.19 - t, 5/12 + t)` with `t = (3π / 4δ) coth(π/δ)`.
pub fn gershgorin_bounds(delta: f64) -> Result<SpectrumBounds> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "separation distance must be positive, got {delta}"
        )));
    }
    let t = if delta.is_infinite() {
        0.75
    } else {
        3.0 * PI / (4.0 * delta) / (PI / delta).tanh()
    };
    Ok(SpectrumBounds {
        lower: 1.19 - t,
        upper: 5.0 / 12.0 + t,
        delta,
    })
}

/// `sum_{n>=1} 1/(n² + t²) = -1/(2t²) + (π/2t) coth(πt)`.
pub fn basel_sum(t: f64) -> f64 {
    let t = t.abs();
    if t < 0.1 {
        // sum_k (-1)^k ζ(2k+2) t^{2k}; the closed form cancels badly here
        let p2 = PI * PI;
        let zeta = [
            p2 / 6.0,
            p2.powi(2) / 90.0,
            p2.powi(3) / 945.0,
            p2.powi(4) / 9450.0,
            p2.powi(5) / 93555.0,
            691.0 * p2.powi(6) / 638512875.0,
            2.0 * p2.powi(7) / 18243225.0,
            3617.0 * p2.powi(8) / 325641566250.0,
            43867.0 * p2.powi(9) / 38979295480125.0,
        ];
        let t2 = t * t;
        return zeta.iter().rev().fold(0.0, |acc, z| z - t2 * acc);
    }
    -1.0 / (2.0 * t * t) + PI / (2.0 * t) / (PI * t).tanh()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffTarget {
    pub c_hat: Vec<f64>,
    pub xi: Vec<f64>,
}

impl TradeoffTarget {
    /// Unit-norm all-equal coefficients on the given frequencies.
    pub fn uniform(xi: Vec<f64>) -> Self {
        let w = 1.0 / (xi.len() as f64).sqrt();
        Self {
            c_hat: vec![w; xi.len()],
            xi,
        }
    }

    /// `∫ ρ*(s)² ds` for `ρ*(s) = e^{-s/2} ĉ^T cos(ξ s)`.
    pub fn energy(&self) -> f64 {
        let a = target_block(&self.xi);
        let c = DVector::from_column_slice(&self.c_hat);
        c.dot(&(a * &c))
    }
}

/// `∫ e^{-s} cos(ξ s) cos(ξ s)^T ds`.
pub fn target_block(xi: &[f64]) -> DMatrix<f64> {
    cross_block(xi, xi)
}

fn cross_block(p: &[f64], q: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(p.len(), q.len(), |j, k| cosine_integral(p[j], q[k]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    /// Schur complement `A - B G^{-1} B^T`.
    pub m: DMatrix<f64>,
    pub sigma_max: f64,
    /// `κ(G)` for the model frequencies.
    pub condition: f64,
    /// `ĉ^T M ĉ`, the optimal read-out's squared error.
    pub error: f64,
}

pub fn approximation_matrix(v: &[f64], target: &TradeoffTarget) -> Result<Approximation> {
    if target.c_hat.len() != target.xi.len() {
        return Err(Error::LengthMismatch {
            expected: target.xi.len(),
            got: target.c_hat.len(),
        });
    }
    if target.xi.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("frequencies must be finite".into()));
    }
    let gram = gram_complex(v);
    let condition = gram.condition_number();
    let separation = separation_distance(v);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned {
            condition,
            separation,
        });
    }
    let chol = Cholesky::new(gram.entries).ok_or(Error::IllConditioned {
        condition,
        separation,
    })?;
    let a = target_block(&target.xi);
    let b = cross_block(&target.xi, v);
    // B G^{-1} B^T = (L^{-1} B^T)^T (L^{-1} B^T)
    let half = chol
        .l()
        .solve_lower_triangular(&b.transpose())
        .expect("Cholesky factor has a positive diagonal");
    let schur = a - half.transpose() * half;
    let sym = (&schur + schur.transpose()) * 0.5;
    let ev = sym_eigenvalues(&sym);
    let sigma_max = ev[0].abs().max(ev[ev.len() - 1].abs());
    let c = DVector::from_column_slice(&target.c_hat);
    let error = c.dot(&(&sym * &c));
    Ok(Approximation {
        m: sym,
        sigma_max,
        condition,
        error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub ratio: f64,
    pub condition: f64,
    pub sigma_max: f64,
    pub error: f64,
}

/// For each ratio `r` sets `v = r ξ` and records `κ(G)` and `σ_max(M)`.
pub fn tradeoff_sweep(xi: &[f64], ratios: &[f64]) -> Result<Vec<TradeoffRow>> {
    if separation_distance(xi) <= 0.0 {
        return Err(Error::InvalidInput("target frequencies must be distinct".into()));
    }
    let target = TradeoffTarget::uniform(xi.to_vec());
    ratios
        .iter()
        .map(|&ratio| {
            let v: Vec<f64> = xi.iter().map(|x| ratio * x).collect();
            let approx = approximation_matrix(&v, &target)?;
            Ok(TradeoffRow {
                ratio,
                condition: approx.condition,
                sigma_max: approx.sigma_max,
                error: approx.error,
            })
        })
        .collect()
}

/// `λ_max(∫ e^{-s} cos(ξ s) cos(ξ s)^T ds)`: σ_max(M) when the model frequencies
/// are pushed to infinity.
pub fn worst_case_sigma(xi: &[f64]) -> f64 {
    *sym_eigenvalues(&target_block(xi)).last().unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Nodes {
    Imag(Vec<f64>),
    Real(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefinitenessCheck {
    pub positive_definite: bool,
    pub min_eigenvalue: f64,
}

/// `λ_min(G) > 1e-12 λ_max(G)`.
pub fn positive_definite_check(nodes: &Nodes) -> Result<DefinitenessCheck> {
    let g = match nodes {
        Nodes::Imag(v) => gram_complex(v),
        Nodes::Real(a) => gram_real(a)?,
    };
    let ev = g.eigenvalues();
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    Ok(DefinitenessCheck {
        positive_definite: lo > 1e-12 * hi,
        min_eigenvalue: lo,
    })
}
