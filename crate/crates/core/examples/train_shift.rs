//! Shift task (`y = x_0`, L = 128, m = 32): a zero real-part initialization
//! against the usual `Re(w) = -0.5`.

use ssmlab::experiments::ShiftRun;

fn main() -> ssmlab::Result<()> {
    for re in [0.0, -0.5] {
        let report = ShiftRun::new(re, 0).run()?;
        println!("Re(w) = {re:+.1} at init:");
        for (step, (tr, te)) in report.eval_steps.iter().zip(report.loss_train.iter().zip(&report.loss_test)) {
            if step % 500 == 0 {
                println!("  step {step:>4}: train {tr:.4}, test {te:.4}");
            }
        }
        println!("  final test {:.4}, Re(w) >= 0 ratio {:.2}", report.final_test_loss(), report.re_nonneg_ratio);
    }
    Ok(())
}
