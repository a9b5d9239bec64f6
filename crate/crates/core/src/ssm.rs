//! Diagonal single-input single-output state space model with zero-order-hold
//! discretization.
//!
//! The continuous model is `h' = diag(w) h + b x`, `y = Re(c^T h)` with the
//! read-in `b` fixed to all ones. Over a timestep `delta` the ZOH scheme gives
//! the discrete memory kernel
//!
//! ```text
//! rho[l] = Re( sum_j (exp(delta w_j) - 1) / w_j * c_j * exp(delta w_j l) ),   l = 0..L-1
//! ```
//!
//! and the final output `y_L = sum_l rho[l] * x[L-1-l]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this modulus `(e^z - 1)/z` is evaluated by its Taylor polynomial.
pub const TAYLOR_THRESHOLD: f64 = 1e-6;

/// Kernel powers are recomputed from a fresh exponential this often.
const REANCHOR_EVERY: usize = 1024;

/// Largest exponent that still leaves headroom below `f64::MAX`.
const MAX_EXPONENT: f64 = 700.0;

/// Diagonal state parameters `w_j = real_j + i * imag_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    real: Vec<f64>,
    imag: Vec<f64>,
}

impl StateVector {
    pub fn new(real: Vec<f64>, imag: Vec<f64>) -> Result<Self> {
        if real.is_empty() {
            return Err(Error::InvalidInput("state vector must have m >= 1".into()));
        }
        if real.len() != imag.len() {
            return Err(Error::LengthMismatch {
                expected: real.len(),
                got: imag.len(),
            });
        }
        if real.iter().chain(&imag).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("state vector entries must be finite".into()));
        }
        Ok(Self { real, imag })
    }

    pub fn from_complex(w: &[Complex64]) -> Result<Self> {
        Self::new(w.iter().map(|z| z.re).collect(), w.iter().map(|z| z.im).collect())
    }

    pub fn len(&self) -> usize {
        self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty()
    }

    pub fn real(&self) -> &[f64] {
        &self.real
    }

    pub fn imag(&self) -> &[f64] {
        &self.imag
    }

    pub fn get(&self, j: usize) -> Complex64 {
        Complex64::new(self.real[j], self.imag[j])
    }

    pub fn iter(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.real
            .iter()
            .zip(&self.imag)
            .map(|(&a, &v)| Complex64::new(a, v))
    }

    pub(crate) fn real_mut(&mut self) -> &mut [f64] {
        &mut self.real
    }

    pub(crate) fn imag_mut(&mut self) -> &mut [f64] {
        &mut self.imag
    }
}

/// A ZOH-discretized diagonal SSM. The read-in vector is implicitly all ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct SsmModel {
    w: StateVector,
    c: Vec<Complex64>,
    delta: f64,
}

impl SsmModel {
    pub fn new(w: StateVector, c: Vec<Complex64>, delta: f64) -> Result<Self> {
        if c.len() != w.len() {
            return Err(Error::LengthMismatch {
                expected: w.len(),
                got: c.len(),
            });
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
        }
        if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("read-out entries must be finite".into()));
        }
        Ok(Self { w, c, delta })
    }

    pub fn state(&self) -> &StateVector {
        &self.w
    }

    pub fn readout(&self) -> &[Complex64] {
        &self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// State size `m`.
    pub fn size(&self) -> usize {
        self.w.len()
    }

    pub(crate) fn state_mut(&mut self) -> &mut StateVector {
        &mut self.w
    }

    pub(crate) fn readout_mut(&mut self) -> &mut [Complex64] {
        &mut self.c
    }

    pub(crate) fn set_delta(&mut self, delta: f64) {
        self.delta = delta;
    }

    /// Read-out stacked as the real `2m` vector `(Re c, Im c)`.
    pub fn stacked_readout(&self) -> DVector<f64> {
        let m = self.size();
        DVector::from_fn(2 * m, |i, _| {
            if i < m {
                self.c[i].re
            } else {
                self.c[i - m].im
            }
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    real: Vec<f64>,
    imag: Vec<f64>,
    c_real: Vec<f64>,
    c_imag: Vec<f64>,
    delta: f64,
}

impl TryFrom<ModelJson> for SsmModel {
    type Error = Error;

    fn try_from(raw: ModelJson) -> Result<Self> {
        if raw.c_real.len() != raw.c_imag.len() {
            return Err(Error::LengthMismatch {
                expected: raw.c_real.len(),
                got: raw.c_imag.len(),
            });
        }
        let c = raw
            .c_real
            .iter()
            .zip(&raw.c_imag)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        SsmModel::new(StateVector::new(raw.real, raw.imag)?, c, raw.delta)
    }
}

impl From<SsmModel> for ModelJson {
    fn from(model: SsmModel) -> Self {
        ModelJson {
            c_real: model.c.iter().map(|z| z.re).collect(),
            c_imag: model.c.iter().map(|z| z.im).collect(),
            real: model.w.real,
            imag: model.w.imag,
            delta: model.delta,
        }
    }
}

/// Discrete memory kernel induced by ZOH, Δ-inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    pub values: Vec<f64>,
    pub delta: f64,
}

impl DiscreteKernel {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `e^z - 1` without cancellation for small `z`.
pub fn exp_m1(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    let em1 = z.re.exp_m1();
    Complex64::new(em1 * c - 2.0 * half * half, z.re.exp() * s)
}

/// `(e^z - 1) / z`, continuous through `z = 0` where it equals 1.
///
/// For `Re(z) <= 0` the modulus never exceeds one.
pub fn safe_ez_ratio(z: Complex64) -> Complex64 {
    if z.norm() < TAYLOR_THRESHOLD {
        Complex64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0
    } else {
        exp_m1(z) / z
    }
}

/// Derivative of [`safe_ez_ratio`] with respect to `z`.
pub fn safe_ez_ratio_derivative(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        // sum_{n>=1} n z^{n-1} / (n+1)!
        let one = Complex64::new(1.0, 0.0);
        one / 2.0 + z / 3.0 + z * z / 8.0 + z * z * z / 30.0 + z * z * z * z / 144.0
    } else {
        (z.exp() - safe_ez_ratio(z)) / z
    }
}

/// Fills `out[l] = step^l` for `l = 0..out.len()` by repeated multiplication,
/// restarting from `exp(log_step * l)` every `REANCHOR_EVERY` entries.
pub(crate) fn geometric_powers(log_step: Complex64, out: &mut [Complex64]) {
    let step = log_step.exp();
    let mut p = Complex64::new(1.0, 0.0);
    for (l, slot) in out.iter_mut().enumerate() {
        if l > 0 {
            p = if l % REANCHOR_EVERY == 0 {
                (log_step * l as f64).exp()
            } else {
                p * step
            };
        }
        *slot = p;
    }
}

fn check_overflow(model: &SsmModel, len: usize) -> Result<()> {
    let span = len.saturating_sub(1) as f64;
    for (index, &a) in model.w.real.iter().enumerate() {
        let exponent = a * model.delta * span;
        if exponent > MAX_EXPONENT {
            return Err(Error::Overflow { index, exponent });
        }
    }
    Ok(())
}

/// Per-mode ZOH input gain `(e^{Δ w_j} - 1) / w_j = Δ * ratio(Δ w_j)`.
pub fn zoh_gains(model: &SsmModel) -> Vec<Complex64> {
    model
        .w
        .iter()
        .map(|w| model.delta * safe_ez_ratio(w * model.delta))
        .collect()
}

/// The discrete kernel `rho[0..len]` of the model.
pub fn zoh_kernel(model: &SsmModel, len: usize) -> Result<DiscreteKernel> {
    if len == 0 {
        return Err(Error::InvalidInput("kernel length must be >= 1".into()));
    }
    check_overflow(model, len)?;
    let mut values = vec![0.0; len];
    let mut powers = vec![Complex64::new(0.0, 0.0); len];
    for ((w, gain), c) in model.w.iter().zip(zoh_gains(model)).zip(&model.c) {
        geometric_powers(w * model.delta, &mut powers);
        let coef = gain * c;
        for (v, p) in values.iter_mut().zip(&powers) {
            *v += (coef * p).re;
        }
    }
    if let Some(l) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Overflow {
            index: l,
            exponent: f64::INFINITY,
        });
    }
    Ok(DiscreteKernel {
        values,
        delta: model.delta,
    })
}

/// Applies a kernel to a sequence: `sum_l rho[l] * x[L-1-l]`.
pub fn convolve_last(kernel: &[f64], x: &[f64]) -> f64 {
    kernel.iter().zip(x.iter().rev()).map(|(r, xv)| r * xv).sum()
}

/// Final output `y_L` for the input `x_0..x_{L-1}`.
pub fn forward(model: &SsmModel, x: &[f64]) -> Result<f64> {
    let kernel = zoh_kernel(model, x.len())?;
    Ok(convolve_last(&kernel.values, x))
}

/// All outputs `(y_1, ..., y_L)`; `y_l` only sees `x_0..x_{l-1}`.
pub fn forward_sequence(model: &SsmModel, x: &[f64]) -> Result<Vec<f64>> {
    let kernel = zoh_kernel(model, x.len())?;
    Ok((1..=x.len())
        .map(|l| convolve_last(&kernel.values[..l], &x[..l]))
        .collect())
}

/// Continuous memory function `sum_j c_j e^{a_j s} cos(v_j s)` on a grid.
pub fn continuous_kernel(w: &StateVector, c: &[f64], s_grid: &[f64]) -> Result<Vec<f64>> {
    if c.len() != w.len() {
        return Err(Error::LengthMismatch {
            expected: w.len(),
            got: c.len(),
        });
    }
    if let Some(s) = s_grid.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::InvalidInput(format!("grid point {s} must be finite and >= 0")));
    }
    Ok(s_grid
        .iter()
        .map(|&s| {
            w.real
                .iter()
                .zip(&w.imag)
                .zip(c)
                .map(|((a, v), cj)| cj * (a * s).exp() * (v * s).cos())
                .sum()
        })
        .collect())
}

/// The Vandermonde factorization of the ZOH output map.
///
/// With the read-out stacked as `(Re c, Im c)`:
/// `y_L = Δ c^T V J x` and `V = ½ Φ^H D V_L`.
#[derive(Debug, Clone)]
pub struct VandermondeFactors {
    /// `2m × L` real matrix, rows `Re(r_j e^{Δ w_j l})` then `-Im(r_j e^{Δ w_j l})`.
    pub v: DMatrix<f64>,
    /// `[[I, iI], [I, -iI]]`.
    pub phi: DMatrix<Complex64>,
    /// Diagonal of `D`: `r(Δ w̄_j)` for the first `m`, then `r(Δ w_j)`.
    pub d: DVector<Complex64>,
    /// Complex Vandermonde matrix on nodes `e^{Δ w̄_j}` then `e^{Δ w_j}`.
    pub v_l: DMatrix<Complex64>,
    /// Row-reversed identity.
    pub j: DMatrix<f64>,
}

impl VandermondeFactors {
    pub fn d_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&self.d)
    }

    /// `½ Φ^H D V_L`; its imaginary part vanishes up to roundoff.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let scaled = DMatrix::from_fn(self.v_l.nrows(), self.v_l.ncols(), |i, l| {
            self.d[i] * self.v_l[(i, l)]
        });
        self.phi.adjoint() * scaled * Complex64::new(0.5, 0.0)
    }

    /// `Δ c^T V J x` for a stacked read-out.
    pub fn output(&self, stacked_c: &DVector<f64>, delta: f64, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        delta * stacked_c.dot(&(&self.v * (&self.j * x)))
    }
}

/// Exchange matrix of order `len`.
pub fn exchange_matrix(len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len, len, |i, k| if i + k + 1 == len { 1.0 } else { 0.0 })
}

pub fn vandermonde_factor(model: &SsmModel, len: usize) -> Result<VandermondeFactors> {
    if len == 0 {
        return Err(Error::InvalidInput("kernel length must be >= 1".into()));
    }
    check_overflow(model, len)?;
    let m = model.size();
    let delta = model.delta;
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);

    let mut v = DMatrix::zeros(2 * m, len);
    let mut v_l = DMatrix::from_element(2 * m, len, zero);
    let mut d = DVector::from_element(2 * m, zero);
    let mut powers = vec![zero; len];
    for (j, w) in model.w.iter().enumerate() {
        let r = safe_ez_ratio(w * delta);
        d[j] = r.conj();
        d[m + j] = r;
        geometric_powers(w * delta, &mut powers);
        for (l, p) in powers.iter().enumerate() {
            let z = r * p;
            v[(j, l)] = z.re;
            v[(m + j, l)] = -z.im;
            v_l[(j, l)] = p.conj();
            v_l[(m + j, l)] = *p;
        }
    }
    let phi = DMatrix::from_fn(2 * m, 2 * m, |r, col| {
        let (rb, cb) = (r / m, col / m);
        if r % m != col % m {
            zero
        } else if cb == 0 {
            one
        } else if rb == 0 {
            i
        } else {
            -i
        }
    });
    Ok(VandermondeFactors {
        v,
        phi,
        d,
        v_l,
        j: exchange_matrix(len),
    })
}
