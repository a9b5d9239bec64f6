//! Small dense numerics shared by the analysis modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(a)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `½ (A + A^T)`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    (a - a.transpose()).amax()
}

/// Spectral condition number `λ_max / λ_min` of a symmetric positive matrix.
/// Returns infinity when the smallest eigenvalue is not positive.
pub fn sym_condition(a: &DMatrix<f64>) -> f64 {
    let ev = sym_eigenvalues(a);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// Stops when successive Rayleigh quotients change by less than `tol`
/// relative. Returns the estimate and the iteration count.
pub fn power_iteration(a: &DMatrix<f64>, tol: f64, max_iters: usize) -> Result<(f64, usize)> {
    let n = a.nrows();
    // A start vector with no special alignment to structured spectra.
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.7548776662).fract());
    x /= x.norm();
    let mut lambda = 0.0;
    let mut change = f64::INFINITY;
    for it in 1..=max_iters {
        let y = a * &x;
        let next = x.dot(&y);
        let norm = y.norm();
        if norm == 0.0 {
            return Ok((0.0, it));
        }
        x = y / norm;
        change = (next - lambda).abs() / next.abs().max(f64::MIN_POSITIVE);
        lambda = next;
        if change < tol {
            return Ok((lambda, it));
        }
    }
    Err(Error::NoConvergence {
        iters: max_iters,
        change,
    })
}

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss weights.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod quadrature of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth - 1) + recurse(f, mid, b, 0.5 * tol, depth - 1)
    }
    recurse(&f, a, b, tol, 40)
}
