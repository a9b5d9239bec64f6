//! Scaling the model frequencies away from the target ones improves the Gram
//! conditioning and worsens the approximation error.

use std::f64::consts::PI;

use ssmlab::gram::{tradeoff_sweep, worst_case_sigma};

fn main() -> ssmlab::Result<()> {
    let xi: Vec<f64> = (1..=8).map(|j| 0.1 * PI * j as f64).collect();
    let ratios: Vec<f64> = (0..=8).map(|k| 2f64.powi(k)).collect();
    println!("{:>6} {:>12} {:>12}", "ratio", "kappa(G)", "sigma_max");
    for row in tradeoff_sweep(&xi, &ratios)? {
        println!("{:>6} {:>12.4} {:>12.6}", row.ratio, row.condition, row.sigma_max);
    }
    println!("worst case (v → ∞): {:.6}", worst_case_sigma(&xi));
    Ok(())
}
