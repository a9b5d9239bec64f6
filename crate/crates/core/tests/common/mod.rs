//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ssmlab::ssm::{SsmModel, StateVector};
use ssmlab::train::{flatten_params, loss, unflatten_params, Objective};

pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    // split first so that oscillatory integrands cannot fool the error test
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            rec(f, lo, hi, fa, fm, fb, (hi - lo) / 6.0 * (fa + 4.0 * fm + fb), tol / pieces as f64, 50)
        })
        .sum()
}

pub fn random_model(rng: &mut ChaCha8Rng, m: usize) -> SsmModel {
    let real: Vec<f64> = (0..m).map(|_| -rng.random::<f64>()).collect();
    let imag: Vec<f64> = (0..m).map(|_| 10.0 * rng.random::<f64>() - 5.0).collect();
    let c = (0..m)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let delta = 0.01 + 0.3 * rng.random::<f64>();
    SsmModel::new(StateVector::new(real, imag).unwrap(), c, delta).unwrap()
}

/// `ρ_l = Re Σ c_j ((e^{Δw_j} - 1)/w_j) e^{Δ w_j l}` with every exponential
/// evaluated directly.
pub fn termwise_kernel(model: &SsmModel, len: usize) -> Vec<f64> {
    let d = model.delta();
    (0..len)
        .map(|l| {
            model
                .state()
                .iter()
                .zip(model.readout())
                .map(|(w, c)| {
                    let gain = if w.norm() == 0.0 { Complex64::new(d, 0.0) } else { ((w * d).exp() - 1.0) / w };
                    (c * gain * (w * d * l as f64).exp()).re
                })
                .sum()
        })
        .collect()
}

pub fn recurrence_output(model: &SsmModel, x: &[f64]) -> f64 {
    let d = model.delta();
    let mut h = vec![Complex64::new(0.0, 0.0); model.size()];
    for &xl in x {
        for (hj, w) in h.iter_mut().zip(model.state().iter()) {
            let gain = if w.norm() == 0.0 { Complex64::new(d, 0.0) } else { ((w * d).exp() - 1.0) / w };
            *hj = (w * d).exp() * *hj + gain * xl;
        }
    }
    h.iter().zip(model.readout()).map(|(hj, c)| (c * hj).re).sum()
}

pub fn central_difference(model: &SsmModel, x: &DMatrix<f64>, y: &DMatrix<f64>, objective: Objective) -> Vec<f64> {
    let base = flatten_params(model);
    (0..base.len())
        .map(|i| {
            let h = 1e-6 * base[i].abs().max(1e-2);
            let eval = |step: f64| {
                let mut p = base.clone();
                p[i] += step;
                let mut probe = model.clone();
                unflatten_params(&mut probe, &p);
                loss(&probe, x, y, objective).unwrap()
            };
            (eval(h) - eval(-h)) / (2.0 * h)
        })
        .collect()
}

pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `Σ_{k≥1} 1/(k² + t²)` from `n` explicit terms plus the midpoint integral
/// of the tail.
pub fn basel_partial(t: f64, n: usize) -> f64 {
    let head: f64 = (1..=n).rev().map(|k| 1.0 / ((k * k) as f64 + t * t)).sum();
    let tail = (std::f64::consts::FRAC_PI_2 - ((n as f64 + 0.5) / t).atan()) / t;
    head + tail
}

/// Rows `Re(r_j e^{Δ w_j l})` then `-Im(r_j e^{Δ w_j l})`, `r(z) = (e^z - 1)/z`,
/// with every exponential evaluated directly.
pub fn direct_v(model: &SsmModel, len: usize) -> DMatrix<f64> {
    let m = model.size();
    let d = model.delta();
    let w: Vec<Complex64> = model.state().iter().collect();
    DMatrix::from_fn(2 * m, len, |i, l| {
        let z = w[i % m] * d;
        let r = if z.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { (z.exp() - 1.0) / z };
        let e = r * (z * l as f64).exp();
        if i < m { e.re } else { -e.im }
    })
}

/// Largest relative disagreement over the parameter groups `[Δ, Re w, Im w,
/// Re c, Im c]`, each measured in the 2-norm.
pub fn worst_group_error(analytic: &[f64], numeric: &[f64], m: usize) -> f64 {
    let groups = [(0, 1), (1, 1 + m), (1 + m, 1 + 2 * m), (1 + 2 * m, 1 + 3 * m), (1 + 3 * m, 1 + 4 * m)];
    groups
        .iter()
        .map(|&(lo, hi)| {
            let diff: f64 = (lo..hi).map(|i| (analytic[i] - numeric[i]).powi(2)).sum::<f64>().sqrt();
            let size: f64 = (lo..hi).map(|i| numeric[i].powi(2)).sum::<f64>().sqrt();
            diff / size.max(1e-3)
        })
        .fold(0.0, f64::max)
}

pub fn random_input(rng: &mut ChaCha8Rng, n: usize, len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, len, |_, _| rng.sample(StandardNormal))
}
