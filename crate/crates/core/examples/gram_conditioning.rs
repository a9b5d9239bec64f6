//! Gram matrices of S4D-Lin (imaginary nodes) stay well conditioned as m grows;
//! those of S4D-Real (Hilbert-like) do not.

use ssmlab::gram::{gershgorin_bounds, gram_complex, gram_real};
use ssmlab::init::{make_state_vector, InitSpec};

fn main() -> ssmlab::Result<()> {
    let b = gershgorin_bounds(std::f64::consts::PI)?;
    println!("eigenvalue bounds at separation π: ({:.4}, {:.4})", b.lower, b.upper);
    for m in [4, 16, 64, 256] {
        let w = make_state_vector(&InitSpec::s4d_lin(m))?;
        let g = gram_complex(w.imag());
        let ev = g.eigenvalues();
        println!("S4D-Lin  m = {m:>3}: λ ∈ [{:.4}, {:.4}], κ = {:.4}", ev[0], ev[m - 1], g.condition_number());
    }
    for m in 2..=12 {
        let w = make_state_vector(&InitSpec::s4d_real(m))?;
        println!("S4D-Real m = {m:>3}: κ = {:.3e}", gram_real(w.real())?.condition_number());
    }
    Ok(())
}
