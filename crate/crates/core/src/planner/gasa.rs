//! Graph-aware self-attention.
//!
//! Standard scaled dot-product self-attention whose pre-softmax logits are
//! biased by the all-pairs shortest-path distance between nodes, scaled by a
//! learned scalar.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Bias applied to pairs with no connecting path.
const DISCONNECTED_BIAS: f64 = -1e9;

#[derive(Debug, Clone, PartialEq)]
pub struct GasaWeights {
    pub w_q: DMatrix<f64>,
    pub w_k: DMatrix<f64>,
    pub w_v: DMatrix<f64>,
    /// Distance-to-logit scale.
    pub w_e: f64,
}

pub(crate) fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..bound))
}

impl GasaWeights {
    /// Glorot-uniform projections of size `d`×`d`; `w_e` starts negative so
    /// that nearby nodes attend to each other more.
    pub fn seeded(d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GasaWeights {
            w_q: uniform_matrix(&mut rng, d, d),
            w_k: uniform_matrix(&mut rng, d, d),
            w_v: uniform_matrix(&mut rng, d, d),
            w_e: -rng.random_range(0.1..1.0),
        }
    }

    /// Attention dimension used for the √d scaling.
    pub fn dim(&self) -> usize {
        self.w_q.ncols()
    }

    fn check(&self, x: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<()> {
        let d_in = x.ncols();
        if self.w_q.nrows() != d_in || self.w_k.nrows() != d_in || self.w_v.nrows() != d_in {
            return Err(Error::Shape(format!(
                "input has {d_in} features but projections expect {}/{}/{}",
                self.w_q.nrows(),
                self.w_k.nrows(),
                self.w_v.nrows()
            )));
        }
        if self.w_q.ncols() != self.w_k.ncols() {
            return Err(Error::Shape(format!(
                "query/key widths differ: {} vs {}",
                self.w_q.ncols(),
                self.w_k.ncols()
            )));
        }
        if e.nrows() != x.nrows() || e.ncols() != x.nrows() {
            return Err(Error::Shape(format!(
                "spatial matrix is {}x{}, expected {n}x{n}",
                e.nrows(),
                e.ncols(),
                n = x.nrows()
            )));
        }
        Ok(())
    }
}

/// Row-stochastic attention matrix `softmax(XWq (XWk)^T / sqrt(d) + E*w_e)`.
pub fn gasa_attention(x: &DMatrix<f64>, e: &DMatrix<f64>, weights: &GasaWeights) -> Result<DMatrix<f64>> {
    weights.check(x, e)?;
    let q = x * &weights.w_q;
    let k = x * &weights.w_k;
    let scale = (weights.dim() as f64).sqrt();
    let mut logits = (&q * k.transpose()) / scale;
    let n = x.nrows();
    if weights.w_e != 0.0 {
        for i in 0..n {
            for j in 0..n {
                let dist = e[(i, j)];
                logits[(i, j)] += if dist.is_finite() {
                    weights.w_e * dist
                } else {
                    DISCONNECTED_BIAS
                };
            }
        }
    }
    for i in 0..n {
        let mut row = logits.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.iter_mut().for_each(|v| *v = (*v - max).exp());
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(logits)
}

/// Graph-aware self-attention over node features `x` (n×d) with spatial
/// matrix `e` (n×n).
pub fn gasa_forward(x: &DMatrix<f64>, e: &DMatrix<f64>, weights: &GasaWeights) -> Result<DMatrix<f64>> {
    let attn = gasa_attention(x, e, weights)?;
    Ok(attn * (x * &weights.w_v))
}
