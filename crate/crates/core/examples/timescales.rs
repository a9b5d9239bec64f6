//! S4D-Lin and S4D-Real nodes, a partial zero-real-part reset, and the
//! timescale rules `Δ = L^{-α}`, `Δ = c0 / sqrt(L λ_max)` and `U[Δ_min, Δ_max]`.

use ssmlab::autocorr::{build_autocov, lambda_max, AutocovKind, AutocovSpec};
use ssmlab::init::{make_state_vector, sample_timescales, timescale_from_data, InitSpec, TimescaleMode, TimescaleRule};

fn main() -> ssmlab::Result<()> {
    let lin = make_state_vector(&InitSpec::s4d_lin(6).with_zero_real_fraction(0.5).with_seed(3))?;
    println!("S4D-Lin, half the real parts zeroed:");
    for w in lin.iter() {
        println!("  {:+.2} {:+.4}i", w.re, w.im);
    }
    let real = make_state_vector(&InitSpec::s4d_real(4))?;
    println!("S4D-Real: {:?}", real.real());

    for len in [64usize, 1024, 16384] {
        let k = build_autocov(&AutocovSpec::new(AutocovKind::ou(), len.min(2048)))?;
        let lam = lambda_max(&k)?.lambda_max;
        let half = TimescaleRule { mode: TimescaleMode::PowerLaw(0.5), delta_min: 0.0, delta_max: 0.0 };
        println!(
            "L = {len:>5}: L^-1/2 = {:.5}, L^-1 = {:.6}, OU data rule = {:.5}",
            half.delta_for(len)?,
            1.0 / len as f64,
            timescale_from_data(len, lam, 1.0)?
        );
    }

    let draws = sample_timescales(&TimescaleRule::uniform(1.0 / 128.0, 0.1)?, 5, 0)?;
    println!("U[1/L, 0.1] at L = 128: {draws:.4?}");
    Ok(())
}
