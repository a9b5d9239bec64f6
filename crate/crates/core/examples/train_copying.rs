//! Copying with per-channel `Δ ~ U[Δ_min, 0.1]`: `Δ_min = 1/√L` against
//! `Δ_min = 1/L`. Pass a channel count to shrink the run (default 128, about
//! three minutes per setting in release mode).

use ssmlab::experiments::CopyingRun;

fn main() -> ssmlab::Result<()> {
    let channels = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(128);
    let len = 128f64;
    for (label, dmin) in [("1/sqrt(L)", 1.0 / len.sqrt()), ("1/L", 1.0 / len)] {
        let mut run = CopyingRun::new(dmin, 0);
        run.channels = channels;
        let report = run.run()?;
        println!(
            "Δ_min = {label:<9}: test loss {:.4} -> {:.4}",
            report.loss_test[0],
            report.final_test_loss()
        );
    }
    Ok(())
}
