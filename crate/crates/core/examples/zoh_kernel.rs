//! Discretized kernel of a small diagonal SSM, three ways to compute the
//! final output, and the residual of the Vandermonde factorization.

use num_complex::Complex64;
use ssmlab::ssm::{forward, forward_sequence, safe_ez_ratio, vandermonde_factor, zoh_kernel, SsmModel, StateVector};

fn zoh_gain(w: Complex64, delta: f64) -> Complex64 {
    delta * safe_ez_ratio(w * delta)
}

fn main() -> ssmlab::Result<()> {
    let w = StateVector::new(vec![-0.5, -0.5, 0.0], vec![std::f64::consts::PI, 2.0 * std::f64::consts::PI, 3.0])?;
    let c = vec![Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.2), Complex64::new(0.7, -1.0)];
    let model = SsmModel::new(w, c, 0.05)?;
    let len = 64;

    let kernel = zoh_kernel(&model, len)?;
    println!("kernel[0..6] = {:.5?}", &kernel.values[..6]);

    let x: Vec<f64> = (0..len).map(|l| (0.3 * l as f64).sin()).collect();
    let direct = forward(&model, &x)?;
    let per_step = *forward_sequence(&model, &x)?.last().unwrap();
    // h <- e^{Δw} h + ((e^{Δw} - 1)/w) x, then y = Re(c · h)
    let mut h = vec![Complex64::new(0.0, 0.0); model.size()];
    for &xl in &x {
        for (hj, w) in h.iter_mut().zip(model.state().iter()) {
            *hj = (w * model.delta()).exp() * *hj + zoh_gain(w, model.delta()) * xl;
        }
    }
    let recurrent: f64 = h.iter().zip(model.readout()).map(|(hj, cj)| (cj * hj).re).sum();
    let f = vandermonde_factor(&model, len)?;
    let factored = f.output(&model.stacked_readout(), model.delta(), &x);
    println!("y_L: convolution {direct:.12}, per-step {per_step:.12}, recurrence {recurrent:.12}, Δ·cᵀVJx {factored:.12}");

    let residual = (f.reconstruct() - f.v.map(|v| Complex64::new(v, 0.0))).camax();
    println!("max |V - ½ Φᴴ D V_L| = {residual:.2e}");
    Ok(())
}
