//! λ_max of the input autocorrelation for the four synthetic input families,
//! from the population matrix and from 1000 Gaussian-process draws, plus the
//! effect of whitening.

use ssmlab::autocorr::{build_autocov, lambda_max, lambda_max_of_samples, sample_gp, whiten, AutocovKind, AutocovSpec};

fn main() -> ssmlab::Result<()> {
    println!("{:>5} {:>6} {:>12} {:>12}", "kind", "L", "exact", "sampled");
    for name in ["iid", "ou", "rbf", "rand"] {
        for len in [64usize, 256, 1024] {
            let k = build_autocov(&AutocovSpec::new(AutocovKind::parse(name, 0)?, len))?;
            let x = sample_gp(&k, 1000, 1)?;
            println!(
                "{name:>5} {len:>6} {:>12.4} {:>12.4}",
                lambda_max(&k)?.lambda_max,
                lambda_max_of_samples(&x)?.lambda_max
            );
        }
    }

    let k = build_autocov(&AutocovSpec::new(AutocovKind::rbf(), 64))?;
    let x = sample_gp(&k, 2000, 2)?;
    let white = whiten(&x)?;
    println!(
        "rbf L=64: λ_max {:.3} before whitening, {:.3} after",
        lambda_max_of_samples(&x)?.lambda_max,
        lambda_max_of_samples(&white.data)?.lambda_max
    );
    Ok(())
}
