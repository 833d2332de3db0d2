//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative singular-value cutoff used by [`pinv`].
pub const PINV_RCOND: f64 = 1e-12;

/// Deterministic generator for an explicit seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer. Maps `(seed, stream)` to a well-mixed child seed so
/// that independent draws can be generated in any order.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // column-major fill keeps the stream order stable across nalgebra versions
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_vec(rows, cols, data)
}

/// Moore-Penrose pseudo-inverse together with the numerical rank.
pub fn pinv_with_rank(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return (DMatrix::zeros(cols, rows), 0);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = PINV_RCOND * smax;
    let k = s.len();
    let mut out = DMatrix::zeros(cols, rows);
    let mut rank = 0;
    for i in 0..k {
        if s[i] > cutoff && s[i] > 0.0 {
            rank += 1;
            let inv = 1.0 / s[i];
            // out += v_i * inv * u_i^T
            let vi = v_t.row(i).transpose();
            let ui = u.column(i);
            out.ger(inv, &vi, &ui, 1.0);
        }
    }
    (out, rank)
}

pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    pinv_with_rank(m).0
}

/// Orthonormal-row matrix (`d x dim`) distributed as the first `d` rows of a
/// Haar-random rotation in SO(dim).
pub fn haar_rows<R: Rng + ?Sized>(dim: usize, d: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if d == 0 || d > dim {
        return Err(Error::Dimension(format!(
            "need 1 <= d <= D for a Haar subspace, got d={d}, D={dim}"
        )));
    }
    let g = gaussian_matrix(dim, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut t = q.transpose();
    if d == dim && t.determinant() < 0.0 {
        // a full square draw must land in SO(D), not just O(D)
        t.row_mut(d - 1).neg_mut();
    }
    Ok(t)
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Cholesky with a bounded jitter ladder. Returns the factor and the jitter
/// that was finally added to the diagonal.
pub fn cholesky_with_jitter(
    k: &DMatrix<f64>,
) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, f64)> {
    if let Some(c) = k.clone().cholesky() {
        return Ok((c, 0.0));
    }
    for jitter in [1e-10, 1e-8, 1e-6] {
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = kj.cholesky() {
            return Ok((c, jitter));
        }
    }
    Err(Error::Numerical(
        "Gram matrix is not positive definite after jitter 1e-6".into(),
    ))
}
