//! One attention pass with a spatial bias, next to the same pass without it.

use nalgebra::DMatrix;
use toponav::planner::{gasa_attention, GasaWeights};

fn main() -> toponav::Result<()> {
    let d = 4;
    let weights = GasaWeights::seeded(d, 3);
    let x = DMatrix::from_fn(3, d, |i, j| ((i + 1) * (j + 2)) as f64 * 0.1);
    let e = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]);
    let flat = DMatrix::zeros(3, 3);
    println!("with distances:{}", gasa_attention(&x, &e, &weights)?);
    println!("without:{}", gasa_attention(&x, &flat, &weights)?);
    Ok(())
}
