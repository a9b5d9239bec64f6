//! Monte Carlo `E[y_L²]` for S4D-Lin (m = 4) next to the bound
//! `Δ² m² L λ_max`, for several timescale exponents.

use ssmlab::experiments::{magnitude_table, MagnitudeGrid};

fn main() -> ssmlab::Result<()> {
    let mut grid = MagnitudeGrid::new(&["iid", "ou"], &[64, 256, 1024], &[1.0, 0.5], &[0.0, -0.5]);
    grid.n_c = 128;
    grid.n_x = 128;
    let table = magnitude_table(&grid, 0, 1)?;
    println!("{:>4} {:>5} {:>5} {:>5} {:>10} {:>9} {:>10}", "kind", "L", "alpha", "re", "E[y^2]", "stderr", "bound");
    for row in &table.rows {
        let f = |i: usize| row[i].as_f64().unwrap();
        println!(
            "{:>4} {:>5} {:>5} {:>5} {:>10.4} {:>9.4} {:>10.2}",
            row[0].as_str().unwrap(),
            f(1),
            f(2),
            f(3),
            f(4),
            f(5),
            f(6)
        );
    }
    Ok(())
}
