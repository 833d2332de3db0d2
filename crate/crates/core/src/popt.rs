//! Probability that a random embedding contains an optimum, estimated by an
//! LP feasibility test, plus the closed form for HeSBO and the REMBO
//! interior-point probability.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{sample_projection, Strategy};
use crate::error::{Error, Result};
use crate::linalg::{derive_seed, gaussian_matrix, pinv_with_rank, rng_from_seed};
use crate::lp::LinearProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    AxisAlignedUniform,
}

/// Prior over the location of an optimum: a uniformly chosen axis-aligned
/// `d`-subspace and a uniform point `z*` in `[-1, 1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimumPrior {
    pub kind: PriorKind,
    pub ambient_dim: usize,
    pub subspace_dim: usize,
}

impl OptimumPrior {
    pub fn axis_aligned(ambient_dim: usize, subspace_dim: usize) -> Result<Self> {
        if subspace_dim == 0 || subspace_dim > ambient_dim {
            return Err(Error::Dimension(format!(
                "need 1 <= d <= D, got d = {subspace_dim}, D = {ambient_dim}"
            )));
        }
        Ok(OptimumPrior {
            kind: PriorKind::AxisAlignedUniform,
            ambient_dim,
            subspace_dim,
        })
    }

    /// Draws `(T, z*)`, with the rows of `T` distinct standard basis vectors.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (DMatrix<f64>, DVector<f64>) {
        let (big_d, d) = (self.ambient_dim, self.subspace_dim);
        let idx = sample_indices(rng, big_d, d);
        let mut t = DMatrix::zeros(d, big_d);
        for (r, c) in idx.iter().enumerate() {
            t[(r, c)] = 1.0;
        }
        let z = DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0));
        (t, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoptEstimate {
    pub estimate: f64,
    pub n_mc: usize,
    pub standard_error: f64,
}

impl PoptEstimate {
    fn from_hits(hits: usize, n_mc: usize) -> Self {
        let p = hits as f64 / n_mc as f64;
        PoptEstimate {
            estimate: p,
            n_mc,
            standard_error: (p * (1.0 - p) / n_mc as f64).sqrt(),
        }
    }
}

/// Whether some `y` satisfies `T up y = z*` and `-1 <= up y <= 1`, i.e. the
/// set `{up y}` meets the optimum's affine slice inside the box.
pub fn span_contains_optimum(up: &DMatrix<f64>, t: &DMatrix<f64>, z_star: &DVector<f64>) -> Result<bool> {
    let (big_d, de) = up.shape();
    if t.ncols() != big_d || t.nrows() != z_star.len() {
        return Err(Error::Dimension(format!(
            "T is {}x{}, z* has length {}, embedding is {big_d}x{de}",
            t.nrows(),
            t.ncols(),
            z_star.len()
        )));
    }
    let mut g = DMatrix::zeros(2 * big_d, de);
    g.rows_mut(0, big_d).copy_from(up);
    g.rows_mut(big_d, big_d).copy_from(&(-up));
    let lp = LinearProgram::feasibility(g, DVector::from_element(2 * big_d, 1.0), t * up, z_star.clone());
    lp.is_feasible()
}

/// LP test of whether the embedding of the `d_e x D` projection `B` contains
/// a point `x` in `[-1, 1]^D` with `T x = z*`.
pub fn embedding_contains_optimum(b: &DMatrix<f64>, t: &DMatrix<f64>, z_star: &DVector<f64>) -> Result<bool> {
    let (up, rank) = pinv_with_rank(b);
    if rank < b.nrows() {
        return Err(Error::Degenerate(format!(
            "projection has rank {rank} < d_e = {}",
            b.nrows()
        )));
    }
    span_contains_optimum(&up, t, z_star)
}

/// Up-projection whose column span is the embedding of a freshly drawn `B`.
fn draw_up<R: Rng + ?Sized>(strategy: Strategy, big_d: usize, de: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let b = sample_projection(strategy, big_d, de, rng)?;
    Ok(match strategy {
        Strategy::Hesbo => b.transpose(),
        _ => pinv_with_rank(&b).0,
    })
}

/// Monte Carlo estimate of P_opt under the axis-aligned uniform prior. Draw
/// `i` uses its own stream derived from `seed`.
pub fn estimate_popt(
    strategy: Strategy,
    big_d: usize,
    d: usize,
    de: usize,
    n_mc: usize,
    seed: u64,
) -> Result<PoptEstimate> {
    if n_mc == 0 {
        return Err(Error::InvalidArgument("n_mc must be positive".into()));
    }
    let prior = OptimumPrior::axis_aligned(big_d, d)?;
    let mut hits = 0;
    for i in 0..n_mc {
        let mut rng = rng_from_seed(derive_seed(seed, i as u64));
        let up = draw_up(strategy, big_d, de, &mut rng)?;
        let (t, z) = prior.draw(&mut rng);
        if span_contains_optimum(&up, &t, &z)? {
            hits += 1;
        }
    }
    Ok(PoptEstimate::from_hits(hits, n_mc))
}

/// `d_e! / ((d_e - d)! d_e^d)`: the chance that HeSBO sends the `d` active
/// coordinates to distinct embedding coordinates.
pub fn hesbo_popt_analytic(d: usize, de: usize) -> f64 {
    if d > de {
        return 0.0;
    }
    // exact numerator and denominator give a correctly rounded quotient
    const EXACT: u128 = 1 << 53;
    let (mut num, mut den) = (1u128, 1u128);
    for k in 0..d {
        num *= (de - k) as u128;
        den *= de as u128;
        if den > EXACT {
            break;
        }
    }
    if den <= EXACT {
        return num as f64 / den as f64;
    }
    let ln = libm::lgamma(de as f64 + 1.0) - libm::lgamma((de - d) as f64 + 1.0) - d as f64 * (de as f64).ln();
    ln.exp()
}

/// Fraction of draws `A ~ N(0, 1)^{D x d_e}`, `y ~ U[-sqrt(d_e), sqrt(d_e)]^{d_e}`
/// with `A y` inside `[-1, 1]^D`.
pub fn interior_probability(big_d: usize, de: usize, n_mc: usize, seed: u64) -> Result<PoptEstimate> {
    if n_mc == 0 || big_d == 0 || de == 0 {
        return Err(Error::InvalidArgument("D, d_e and n_mc must be positive".into()));
    }
    let r = (de as f64).sqrt();
    let mut hits = 0;
    for i in 0..n_mc {
        let mut rng = rng_from_seed(derive_seed(seed, i as u64));
        let a = gaussian_matrix(big_d, de, &mut rng);
        let y = DVector::from_fn(de, |_, _| rng.random_range(-r..=r));
        if (a * y).iter().all(|v| v.abs() <= 1.0) {
            hits += 1;
        }
    }
    Ok(PoptEstimate::from_hits(hits, n_mc))
}

/// One cell of a P_opt sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoptRow {
    pub strategy: Strategy,
    pub ambient_dim: usize,
    pub subspace_dim: usize,
    pub embed_dim: usize,
    pub estimate: PoptEstimate,
}

/// Estimates every `(strategy, d, d_e)` combination with `d <= d_e`.
pub fn popt_sweep(
    strategies: &[Strategy],
    big_d: usize,
    ds: &[usize],
    des: &[usize],
    n_mc: usize,
    seed: u64,
) -> Result<Vec<PoptRow>> {
    let mut rows = Vec::new();
    for &strategy in strategies {
        for &d in ds {
            for &de in des {
                if de < d || de > big_d {
                    continue;
                }
                let cell_seed = derive_seed(seed, ((d as u64) << 32) | de as u64);
                rows.push(PoptRow {
                    strategy,
                    ambient_dim: big_d,
                    subspace_dim: d,
                    embed_dim: de,
                    estimate: estimate_popt(strategy, big_d, d, de, n_mc, cell_seed)?,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_popt_csv<W: Write>(rows: &[PoptRow], mut out: W) -> Result<()> {
    writeln!(out, "strategy,D,d,d_e,n_mc,estimate,standard_error")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.strategy,
            r.ambient_dim,
            r.subspace_dim,
            r.embed_dim,
            r.estimate.n_mc,
            r.estimate.estimate,
            r.estimate.standard_error
        )?;
    }
    Ok(())
}
