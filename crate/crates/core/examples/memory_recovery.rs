//! Plants a two-tone memory, recovers it from input/label pairs by least
//! squares, then picks well-separated frequency nodes from its spectrum.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ssmlab::recovery::{convolve, dominant_frequencies, greedy_select_nodes, recover_memory, RecoveryProblem};

fn main() -> ssmlab::Result<()> {
    let (len, n) = (128, 512);
    let planted = DMatrix::from_fn(len, 1, |l, _| {
        let t = 2.0 * PI * l as f64 / len as f64;
        (6.0 * t).cos() + 0.6 * (19.0 * t).cos() + 0.3 * (21.0 * t).cos()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = DMatrix::from_fn(n, len, |_, _| StandardNormal.sample(&mut rng));
    let y = convolve(&x, &planted);

    let rec = recover_memory(&RecoveryProblem { x, y, ridge: 0.0 })?;
    let rho = rec.memory.channel(0).unwrap();
    let err = rho.iter().zip(planted.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("max recovery error {err:.2e}, residual {:.2e}", rec.residual);

    let dt = 0.01;
    let candidates = dominant_frequencies(&rho, 3)?;
    let bins: Vec<f64> = candidates.iter().map(|w| w * len as f64 / (2.0 * PI)).collect();
    println!("strongest DFT bins: {bins:.1?}");
    let picked = greedy_select_nodes(&candidates, 2)?;
    let xi: Vec<f64> = picked.nodes.iter().map(|w| w / dt).collect();
    println!("two nodes with the widest gap, ξ = ω/Δt: {xi:.3?}");
    Ok(())
}
