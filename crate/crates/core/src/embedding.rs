//! Random linear embeddings of the ambient box `[-1, 1]^D`.
//!
//! An [`EmbeddingSpec`] carries both directions of the projection: the
//! `d_e x D` down-projection `B` and the `D x d_e` up-projection used to
//! evaluate embedded points. For Gaussian and hypersphere embeddings the
//! up-projection is the pseudo-inverse of `B` and the feasible embedded set is
//! the polytope `-1 <= B^+ y <= 1`. HeSBO embeddings keep their native sparse
//! sign expansion and a box. REMBO embeddings are Gaussian up-projections used
//! with a `[-sqrt(d_e), sqrt(d_e)]` box and clipping.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, gaussian_matrix, pinv_with_rank, rng_from_seed};
use crate::lp::{solve_standard, LpOutcome};

/// Tolerance on polytope membership.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Proposal cap for rejection sampling.
pub const MAX_PROPOSALS: usize = 10_000_000;
/// Acceptance rate below which rejection sampling gives up.
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Gaussian,
    Hypersphere,
    Hesbo,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "rembo" | "normal" => Ok(Strategy::Gaussian),
            "hypersphere" | "alebo" => Ok(Strategy::Hypersphere),
            "hesbo" => Ok(Strategy::Hesbo),
            other => Err(Error::InvalidArgument(format!("unknown strategy `{other}`"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Gaussian => "gaussian",
            Strategy::Hypersphere => "hypersphere",
            Strategy::Hesbo => "hesbo",
        })
    }
}

/// How embedded points reach the ambient space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMode {
    /// `x = up * y`, restricted to the feasible region so no clipping occurs.
    Linear,
    /// `x = clip(up * y)` (REMBO).
    Clipped,
}

/// Linear inequality system `A y <= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub a_matrix: DMatrix<f64>,
    pub b_vector: DVector<f64>,
}

impl Polytope {
    pub fn new(a_matrix: DMatrix<f64>, b_vector: DVector<f64>) -> Result<Self> {
        if a_matrix.nrows() != b_vector.len() {
            return Err(Error::Dimension(format!(
                "polytope has {} rows but {} right-hand sides",
                a_matrix.nrows(),
                b_vector.len()
            )));
        }
        Ok(Polytope { a_matrix, b_vector })
    }

    /// `-1 <= up * y <= 1`.
    pub fn from_up_matrix(up: &DMatrix<f64>) -> Self {
        let (big_d, de) = up.shape();
        let mut a = DMatrix::zeros(2 * big_d, de);
        a.rows_mut(0, big_d).copy_from(up);
        a.rows_mut(big_d, big_d).copy_from(&(-up));
        Polytope {
            a_matrix: a,
            b_vector: DVector::from_element(2 * big_d, 1.0),
        }
    }

    /// `lo <= y <= hi` written as inequality rows.
    pub fn from_box(lo: &DVector<f64>, hi: &DVector<f64>) -> Self {
        let de = lo.len();
        let mut a = DMatrix::zeros(2 * de, de);
        let mut b = DVector::zeros(2 * de);
        for i in 0..de {
            a[(i, i)] = 1.0;
            b[i] = hi[i];
            a[(de + i, i)] = -1.0;
            b[de + i] = -lo[i];
        }
        Polytope {
            a_matrix: a,
            b_vector: b,
        }
    }

    pub fn dim(&self) -> usize {
        self.a_matrix.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.a_matrix.nrows()
    }

    /// Largest constraint violation `max_i (a_i y - b_i)`; nonpositive inside.
    pub fn max_violation(&self, y: &DVector<f64>) -> f64 {
        let r = &self.a_matrix * y - &self.b_vector;
        r.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, y: &DVector<f64>) -> bool {
        self.contains_with_tol(y, FEASIBILITY_TOL)
    }

    pub fn contains_with_tol(&self, y: &DVector<f64>, tol: f64) -> bool {
        y.len() == self.dim() && self.max_violation(y) <= tol
    }
}

/// Feasible embedded region.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleRegion {
    Polytope(Polytope),
    Box { lo: DVector<f64>, hi: DVector<f64> },
}

impl FeasibleRegion {
    pub fn contains(&self, y: &DVector<f64>) -> bool {
        match self {
            FeasibleRegion::Polytope(p) => p.contains(y),
            FeasibleRegion::Box { lo, hi } => {
                y.len() == lo.len()
                    && y
                        .iter()
                        .zip(lo.iter().zip(hi.iter()))
                        .all(|(v, (l, h))| *v >= l - FEASIBILITY_TOL && *v <= h + FEASIBILITY_TOL)
            }
        }
    }

    pub fn as_polytope(&self) -> Polytope {
        match self {
            FeasibleRegion::Polytope(p) => p.clone(),
            FeasibleRegion::Box { lo, hi } => Polytope::from_box(lo, hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpec {
    pub strategy: Strategy,
    pub mode: ProjectionMode,
    pub ambient_dim: usize,
    pub embed_dim: usize,
    pub seed: u64,
    /// `d_e x D`.
    pub down_matrix: DMatrix<f64>,
    /// `D x d_e`.
    pub up_matrix: DMatrix<f64>,
    pub feasible_region: FeasibleRegion,
}

fn check_dims(big_d: usize, de: usize) -> Result<()> {
    if de == 0 || big_d == 0 || de > big_d {
        return Err(Error::Dimension(format!(
            "need 1 <= d_e <= D, got d_e={de}, D={big_d}"
        )));
    }
    Ok(())
}

/// Draws the `d_e x D` projection matrix for a strategy.
pub fn sample_projection<R: Rng + ?Sized>(
    strategy: Strategy,
    big_d: usize,
    de: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    check_dims(big_d, de)?;
    Ok(match strategy {
        Strategy::Gaussian => gaussian_matrix(de, big_d, rng),
        Strategy::Hypersphere => {
            let mut b = gaussian_matrix(de, big_d, rng);
            for mut col in b.column_iter_mut() {
                let n = col.norm();
                col /= n;
            }
            b
        }
        Strategy::Hesbo => {
            let mut b = DMatrix::zeros(de, big_d);
            for i in 0..big_d {
                let j = rng.random_range(0..de);
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                b[(j, i)] = s;
            }
            b
        }
    })
}

/// Generates an embedding; deterministic in `seed`.
pub fn generate_embedding(
    strategy: Strategy,
    big_d: usize,
    de: usize,
    seed: u64,
) -> Result<EmbeddingSpec> {
    let mut rng = rng_from_seed(seed);
    let down = sample_projection(strategy, big_d, de, &mut rng)?;
    EmbeddingSpec::from_down_matrix(strategy, seed, down)
}

/// REMBO embedding: Gaussian up-projection `A`, box `[-sqrt(d_e), sqrt(d_e)]`
/// and clipping to the ambient box.
pub fn generate_rembo_embedding(big_d: usize, de: usize, seed: u64) -> Result<EmbeddingSpec> {
    let mut rng = rng_from_seed(seed);
    let g = sample_projection(Strategy::Gaussian, big_d, de, &mut rng)?;
    EmbeddingSpec::rembo_from_up_matrix(seed, g.transpose())
}

impl EmbeddingSpec {
    /// Builds a linear-mode spec from an explicit `d_e x D` down-projection.
    pub fn from_down_matrix(strategy: Strategy, seed: u64, down: DMatrix<f64>) -> Result<Self> {
        let (de, big_d) = down.shape();
        check_dims(big_d, de)?;
        match strategy {
            Strategy::Hesbo => {
                for (i, col) in down.column_iter().enumerate() {
                    let nz: Vec<f64> = col.iter().cloned().filter(|v| *v != 0.0).collect();
                    if nz.len() != 1 || nz[0].abs() != 1.0 {
                        return Err(Error::InvalidArgument(format!(
                            "HeSBO column {i} must hold exactly one +-1 entry"
                        )));
                    }
                }
                let up = down.transpose();
                Ok(EmbeddingSpec {
                    strategy,
                    mode: ProjectionMode::Linear,
                    ambient_dim: big_d,
                    embed_dim: de,
                    seed,
                    down_matrix: down,
                    up_matrix: up,
                    feasible_region: FeasibleRegion::Box {
                        lo: DVector::from_element(de, -1.0),
                        hi: DVector::from_element(de, 1.0),
                    },
                })
            }
            Strategy::Gaussian | Strategy::Hypersphere => {
                let (up, rank) = pinv_with_rank(&down);
                if rank < de {
                    return Err(Error::Degenerate(format!(
                        "projection has rank {rank} < d_e = {de}"
                    )));
                }
                let region = FeasibleRegion::Polytope(Polytope::from_up_matrix(&up));
                Ok(EmbeddingSpec {
                    strategy,
                    mode: ProjectionMode::Linear,
                    ambient_dim: big_d,
                    embed_dim: de,
                    seed,
                    down_matrix: down,
                    up_matrix: up,
                    feasible_region: region,
                })
            }
        }
    }

    pub fn rembo_from_up_matrix(seed: u64, up: DMatrix<f64>) -> Result<Self> {
        let (big_d, de) = up.shape();
        check_dims(big_d, de)?;
        let (down, rank) = pinv_with_rank(&up);
        if rank < de {
            return Err(Error::Degenerate(format!(
                "projection has rank {rank} < d_e = {de}"
            )));
        }
        let r = (de as f64).sqrt();
        Ok(EmbeddingSpec {
            strategy: Strategy::Gaussian,
            mode: ProjectionMode::Clipped,
            ambient_dim: big_d,
            embed_dim: de,
            seed,
            down_matrix: down,
            up_matrix: up,
            feasible_region: FeasibleRegion::Box {
                lo: DVector::from_element(de, -r),
                hi: DVector::from_element(de, r),
            },
        })
    }

    pub fn up_project(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        up_project(self, y)
    }

    pub fn polytope(&self) -> Result<Polytope> {
        polytope_of(self)
    }
}

/// Maps an embedded point to the ambient box.
pub fn up_project(spec: &EmbeddingSpec, y: &DVector<f64>) -> Result<DVector<f64>> {
    if y.len() != spec.embed_dim {
        return Err(Error::Dimension(format!(
            "embedded point has length {}, expected {}",
            y.len(),
            spec.embed_dim
        )));
    }
    let x = &spec.up_matrix * y;
    Ok(match spec.mode {
        ProjectionMode::Clipped => clip_to_box(&x),
        ProjectionMode::Linear => {
            if x.iter().all(|v| v.abs() <= 1.0) {
                x
            } else {
                clip_to_box(&x)
            }
        }
    })
}

/// Nearest point of `[-1, 1]^D`.
pub fn clip_to_box(x: &DVector<f64>) -> DVector<f64> {
    x.map(|v| v.clamp(-1.0, 1.0))
}

pub fn polytope_of(spec: &EmbeddingSpec) -> Result<Polytope> {
    match (spec.strategy, spec.mode) {
        (Strategy::Hesbo, _) | (_, ProjectionMode::Clipped) => {
            Err(Error::UnsupportedStrategy(spec.strategy))
        }
        _ => Ok(Polytope::from_up_matrix(&spec.up_matrix)),
    }
}

/// Per-coordinate bounding box of a polytope, one LP per bound.
///
/// Each bound is computed through the LP dual, which has only `d_e` equality
/// rows: `min y_i s.t. A y <= b` equals `-min { b^T l : A^T l = e_i, l >= 0 }`.
pub fn embedding_bounds(polytope: &Polytope) -> Result<(DVector<f64>, DVector<f64>)> {
    let de = polytope.dim();
    let at = polytope.a_matrix.transpose();
    let mut lo = DVector::zeros(de);
    let mut hi = DVector::zeros(de);
    for i in 0..de {
        for (sign, out) in [(1.0, &mut lo), (-1.0, &mut hi)] {
            // primal: min sign * y_i
            let mut rhs = DVector::zeros(de);
            rhs[i] = -sign;
            match solve_standard(&polytope.b_vector, &at, &rhs)? {
                LpOutcome::Optimal { value, .. } => out[i] = -sign * value,
                LpOutcome::Infeasible => return Err(Error::Unbounded),
                LpOutcome::Unbounded => return Err(Error::Infeasible),
            }
        }
    }
    Ok((lo, hi))
}

/// Uniform rejection sampler over a polytope with a bounding-box proposal.
#[derive(Debug, Clone)]
pub struct PolytopeSampler {
    polytope: Polytope,
    lo: DVector<f64>,
    hi: DVector<f64>,
    rows: Vec<f64>,
    cols: Vec<f64>,
    /// Reciprocals of `cols`, zero where the entry is negligible.
    inv_cols: Vec<f64>,
}

impl PolytopeSampler {
    pub fn new(polytope: Polytope) -> Result<Self> {
        let (lo, hi) = embedding_bounds(&polytope)?;
        Ok(Self::with_bounds(polytope, lo, hi))
    }

    pub fn with_bounds(polytope: Polytope, lo: DVector<f64>, hi: DVector<f64>) -> Self {
        let (m, de) = polytope.a_matrix.shape();
        let mut rows = Vec::with_capacity(m * de);
        for r in 0..m {
            for c in 0..de {
                rows.push(polytope.a_matrix[(r, c)]);
            }
        }
        let cols = polytope.a_matrix.as_slice().to_vec();
        let inv_cols = cols.iter().map(|a| if a.abs() > 1e-14 { 1.0 / a } else { 0.0 }).collect();
        PolytopeSampler {
            polytope,
            lo,
            hi,
            rows,
            cols,
            inv_cols,
        }
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn bounds(&self) -> (&DVector<f64>, &DVector<f64>) {
        (&self.lo, &self.hi)
    }

    fn feasible(&self, y: &[f64]) -> bool {
        let de = y.len();
        self.rows
            .chunks_exact(de)
            .zip(self.polytope.b_vector.iter())
            .all(|(row, b)| row.iter().zip(y).map(|(a, v)| a * v).sum::<f64>() <= b + FEASIBILITY_TOL)
    }

    fn propose<R: Rng + ?Sized>(&self, y: &mut [f64], rng: &mut R) {
        for (i, v) in y.iter_mut().enumerate() {
            *v = self.lo[i] + (self.hi[i] - self.lo[i]) * rng.random::<f64>();
        }
    }

    /// Rejection sampling. Gives up only once the acceptance rate after
    /// `MAX_PROPOSALS` proposals is below `MIN_ACCEPTANCE_RATE`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<DVector<f64>>> {
        let mut out = Vec::with_capacity(n);
        let mut y = vec![0.0; self.polytope.dim()];
        let mut proposed = 0usize;
        while out.len() < n {
            if proposed >= MAX_PROPOSALS && (out.len() as f64) < MIN_ACCEPTANCE_RATE * proposed as f64 {
                return Err(Error::SamplingFailure {
                    accepted: out.len(),
                    proposed,
                });
            }
            proposed += 1;
            self.propose(&mut y, rng);
            if self.feasible(&y) {
                out.push(DVector::from_column_slice(&y));
            }
        }
        Ok(out)
    }

    /// Rejection sampling with at most `budget` proposals, topped up by
    /// hit-and-run chains started from the accepted points and `starts`.
    /// Falls back to [`PolytopeSampler::sample`] when no feasible start is
    /// available.
    pub fn sample_budgeted<R: Rng + ?Sized>(
        &self,
        n: usize,
        budget: usize,
        starts: &[DVector<f64>],
        rng: &mut R,
    ) -> Result<Vec<DVector<f64>>> {
        let mut out = Vec::with_capacity(n);
        let mut y = vec![0.0; self.polytope.dim()];
        for _ in 0..budget {
            if out.len() >= n {
                return Ok(out);
            }
            self.propose(&mut y, rng);
            if self.feasible(&y) {
                out.push(DVector::from_column_slice(&y));
            }
        }
        let mut chains: Vec<Chain> = out
            .iter()
            .chain(starts.iter().filter(|s| self.feasible(s.as_slice())))
            .map(|y| self.chain_at(y))
            .collect();
        if chains.is_empty() {
            out.extend(self.sample(n - out.len(), rng)?);
            return Ok(out);
        }
        let thin = 2 * self.polytope.dim() + 4;
        let mut k = 0;
        while out.len() < n {
            let c = k % chains.len();
            for _ in 0..thin {
                self.coordinate_step(&mut chains[c], rng);
            }
            chains[c] = self.chain_at(&DVector::from_column_slice(&chains[c].y));
            out.push(DVector::from_column_slice(&chains[c].y));
            k += 1;
        }
        Ok(out)
    }

    fn chain_at(&self, y: &DVector<f64>) -> Chain {
        let de = y.len();
        let slack = self
            .rows
            .chunks_exact(de)
            .zip(self.polytope.b_vector.iter())
            .map(|(row, b)| (b - row.iter().zip(y.iter()).map(|(a, v)| a * v).sum::<f64>()).max(0.0))
            .collect();
        Chain {
            y: y.as_slice().to_vec(),
            slack,
        }
    }

    /// Coordinate hit-and-run: a uniform point on the chord through the
    /// current point along a random axis.
    fn coordinate_step<R: Rng + ?Sized>(&self, chain: &mut Chain, rng: &mut R) {
        let de = chain.y.len();
        let m = chain.slack.len();
        let j = rng.random_range(0..de);
        let col = &self.cols[j * m..(j + 1) * m];
        let mut t_lo = self.lo[j] - chain.y[j];
        let mut t_hi = self.hi[j] - chain.y[j];
        let inv = &self.inv_cols[j * m..(j + 1) * m];
        for (r, s) in inv.iter().zip(&chain.slack) {
            let t = s * r;
            if *r > 0.0 {
                t_hi = t_hi.min(t);
            } else if *r < 0.0 {
                t_lo = t_lo.max(t);
            }
        }
        if t_hi <= t_lo {
            return;
        }
        let t = t_lo + (t_hi - t_lo) * rng.random::<f64>();
        chain.y[j] += t;
        for (a, s) in col.iter().zip(chain.slack.iter_mut()) {
            *s = (*s - a * t).max(0.0);
        }
    }
}

struct Chain {
    y: Vec<f64>,
    slack: Vec<f64>,
}

pub fn rejection_sample_feasible(
    polytope: &Polytope,
    n: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let sampler = PolytopeSampler::new(polytope.clone())?;
    sampler.sample(n, &mut rng_from_seed(seed))
}

/// First `d` rows of a Haar-distributed rotation of `R^D`.
pub fn sample_haar_subspace(big_d: usize, d: usize, seed: u64) -> Result<DMatrix<f64>> {
    linalg::haar_rows(big_d, d, &mut rng_from_seed(seed))
}

/// Affinely rescaled view of a feasible region whose bounding box is
/// `[-1, 1]^{d_e}`; optimizers and surrogates work in these unit coordinates.
#[derive(Debug, Clone)]
pub struct SearchDomain {
    pub center: DVector<f64>,
    pub half_width: DVector<f64>,
    /// Feasible region in unit coordinates.
    pub sampler: PolytopeSampler,
}

impl SearchDomain {
    pub fn for_region(region: &FeasibleRegion) -> Result<Self> {
        let (polytope, lo, hi) = match region {
            FeasibleRegion::Polytope(p) => {
                let (lo, hi) = embedding_bounds(p)?;
                (p.clone(), lo, hi)
            }
            FeasibleRegion::Box { lo, hi } => (Polytope::from_box(lo, hi), lo.clone(), hi.clone()),
        };
        let center = (&lo + &hi) * 0.5;
        let half_width = (&hi - &lo) * 0.5;
        if half_width.iter().any(|h| *h <= 0.0) {
            return Err(Error::Degenerate("feasible region is flat".into()));
        }
        // A (c + H u) <= b  <=>  (A H) u <= b - A c
        let mut a = polytope.a_matrix.clone();
        for (j, h) in half_width.iter().enumerate() {
            a.column_mut(j).scale_mut(*h);
        }
        let b = &polytope.b_vector - &polytope.a_matrix * &center;
        let unit = Polytope::new(a, b)?;
        let de = center.len();
        let sampler = PolytopeSampler::with_bounds(
            unit,
            DVector::from_element(de, -1.0),
            DVector::from_element(de, 1.0),
        );
        Ok(SearchDomain {
            center,
            half_width,
            sampler,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn polytope(&self) -> &Polytope {
        self.sampler.polytope()
    }

    pub fn to_embedded(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.center + self.half_width.component_mul(u)
    }

    pub fn from_embedded(&self, y: &DVector<f64>) -> DVector<f64> {
        (y - &self.center).component_div(&self.half_width)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecJson {
    strategy: Strategy,
    mode: ProjectionMode,
    ambient_dim: usize,
    embed_dim: usize,
    seed: u64,
    down_matrix: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    up_matrix: Option<Vec<f64>>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl Serialize for EmbeddingSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let up = (self.mode == ProjectionMode::Clipped).then(|| row_major(&self.up_matrix));
        SpecJson {
            strategy: self.strategy,
            mode: self.mode,
            ambient_dim: self.ambient_dim,
            embed_dim: self.embed_dim,
            seed: self.seed,
            down_matrix: row_major(&self.down_matrix),
            up_matrix: up,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EmbeddingSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = SpecJson::deserialize(d)?;
        let (de, big_d) = (j.embed_dim, j.ambient_dim);
        if j.down_matrix.len() != de * big_d {
            return Err(D::Error::custom("down_matrix length is not d_e * D"));
        }
        let down = DMatrix::from_row_slice(de, big_d, &j.down_matrix);
        let spec = match j.mode {
            ProjectionMode::Linear => EmbeddingSpec::from_down_matrix(j.strategy, j.seed, down),
            ProjectionMode::Clipped => {
                let up = j
                    .up_matrix
                    .ok_or_else(|| D::Error::custom("clipped embeddings need up_matrix"))?;
                if up.len() != de * big_d {
                    return Err(D::Error::custom("up_matrix length is not D * d_e"));
                }
                EmbeddingSpec::rembo_from_up_matrix(j.seed, DMatrix::from_row_slice(big_d, de, &up))
                    .map(|mut s| {
                        s.down_matrix = down;
                        s
                    })
            }
        };
        spec.map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};

    #[test]
    fn hypersphere_columns_are_unit() {
        let spec = generate_embedding(Strategy::Hypersphere, 100, 4, 5).unwrap();
        for col in spec.down_matrix.column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hesbo_columns_have_single_sign() {
        let spec = generate_embedding(Strategy::Hesbo, 100, 4, 5).unwrap();
        for col in spec.down_matrix.column_iter() {
            let nz: Vec<f64> = col.iter().cloned().filter(|v| *v != 0.0).collect();
            assert_eq!(nz.len(), 1);
            assert_eq!(nz[0].abs(), 1.0);
        }
        assert_eq!(spec.up_matrix, spec.down_matrix.transpose());
    }

    #[test]
    fn gaussian_entries_have_standard_moments() {
        let spec = generate_embedding(Strategy::Gaussian, 1000, 12, 9).unwrap();
        let n = (1000 * 12) as f64;
        let mean = spec.down_matrix.sum() / n;
        let var = spec.down_matrix.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 / n.sqrt());
        assert!((var - 1.0).abs() < 0.1);
    }

    #[test]
    fn pseudo_inverse_is_right_inverse() {
        for strategy in [Strategy::Gaussian, Strategy::Hypersphere] {
            let spec = generate_embedding(strategy, 60, 5, 1).unwrap();
            let eye = &spec.down_matrix * &spec.up_matrix;
            assert!((eye - DMatrix::identity(5, 5)).amax() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(
            generate_embedding(Strategy::Gaussian, 3, 4, 0),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            generate_embedding(Strategy::Hesbo, 3, 0, 0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_embedding(Strategy::Hypersphere, 40, 3, 77).unwrap();
        let b = generate_embedding(Strategy::Hypersphere, 40, 3, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_projects_to_origin() {
        let spec = generate_embedding(Strategy::Hypersphere, 30, 4, 2).unwrap();
        let x = up_project(&spec, &DVector::zeros(4)).unwrap();
        assert_eq!(x, DVector::zeros(30));
    }

    #[test]
    fn rembo_clips_out_of_box_coordinates() {
        let mut up = DMatrix::zeros(5, 2);
        up[(3, 0)] = 2.7;
        up[(1, 1)] = 0.5;
        let spec = EmbeddingSpec::rembo_from_up_matrix(0, up).unwrap();
        let x = up_project(&spec, &dvector![1.0, 1.0]).unwrap();
        assert_eq!(x[3], 1.0);
        assert_eq!(x[1], 0.5);
    }

    #[test]
    fn hesbo_sign_expansion() {
        // x_5 = -y_2 (1-based), all other coordinates on y_1
        let mut down = DMatrix::zeros(3, 6);
        for i in 0..6 {
            down[(0, i)] = 1.0;
        }
        down[(0, 4)] = 0.0;
        down[(1, 4)] = -1.0;
        let spec = EmbeddingSpec::from_down_matrix(Strategy::Hesbo, 0, down).unwrap();
        let x = up_project(&spec, &dvector![0.3, -0.7, 0.1]).unwrap();
        assert!((x[4] - 0.7).abs() < 1e-15);
        assert!((x[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip_to_box(&dvector![2.0, -3.0, 0.5]), dvector![1.0, -1.0, 0.5]);
        let inside = dvector![0.1, -0.9, 1.0];
        assert_eq!(clip_to_box(&inside), inside);
    }

    #[test]
    fn polytope_row_count_and_origin() {
        let down = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, -0.5]);
        let spec = EmbeddingSpec::from_down_matrix(Strategy::Gaussian, 0, down).unwrap();
        let p = polytope_of(&spec).unwrap();
        assert_eq!(p.num_constraints(), 6);
        assert!(p.contains(&DVector::zeros(2)));
        assert!(p.max_violation(&DVector::zeros(2)) < 0.0);
    }

    #[test]
    fn polytope_of_hesbo_is_unsupported() {
        let spec = generate_embedding(Strategy::Hesbo, 10, 2, 0).unwrap();
        assert!(matches!(polytope_of(&spec), Err(Error::UnsupportedStrategy(_))));
        let rembo = generate_rembo_embedding(10, 2, 0).unwrap();
        assert!(polytope_of(&rembo).is_err());
    }

    #[test]
    fn identity_embedding_bounds_are_unit_box() {
        let spec =
            EmbeddingSpec::from_down_matrix(Strategy::Gaussian, 0, DMatrix::identity(3, 3)).unwrap();
        let (lo, hi) = embedding_bounds(&polytope_of(&spec).unwrap()).unwrap();
        for i in 0..3 {
            assert!((lo[i] + 1.0).abs() < 1e-9 && (hi[i] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bounds_are_tight_for_a_sheared_polygon() {
        // |y1 + y2| <= 1, |y1 - y2| <= 1: a diamond with vertices at (+-1, 0), (0, +-1)
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0, 1.0]);
        let p = Polytope::new(a, DVector::from_element(4, 1.0)).unwrap();
        let (lo, hi) = embedding_bounds(&p).unwrap();
        for i in 0..2 {
            assert!((lo[i] + 1.0).abs() < 1e-9 && (hi[i] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unbounded_polytope_is_an_error() {
        let p = Polytope::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), dvector![1.0]).unwrap();
        assert!(matches!(embedding_bounds(&p), Err(Error::Unbounded)));
    }

    #[test]
    fn rejection_samples_are_feasible_and_deterministic() {
        let spec = generate_embedding(Strategy::Hypersphere, 50, 4, 3).unwrap();
        let p = polytope_of(&spec).unwrap();
        let a = rejection_sample_feasible(&p, 10, 8).unwrap();
        let b = rejection_sample_feasible(&p, 10, 8).unwrap();
        assert_eq!(a, b);
        for y in &a {
            let x = up_project(&spec, y).unwrap();
            assert!(linalg::max_abs(&x) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn rejection_sampling_uniform_on_square() {
        let spec =
            EmbeddingSpec::from_down_matrix(Strategy::Gaussian, 0, DMatrix::identity(2, 2)).unwrap();
        let p = polytope_of(&spec).unwrap();
        let pts = rejection_sample_feasible(&p, 4000, 21).unwrap();
        // 4x4 grid of cells, 15 degrees of freedom; 99.9% quantile is 37.7
        let mut counts = [0usize; 16];
        for y in &pts {
            let cx = (((y[0] + 1.0) / 0.5) as usize).min(3);
            let cy = (((y[1] + 1.0) / 0.5) as usize).min(3);
            counts[cx * 4 + cy] += 1;
        }
        let expected = 4000.0 / 16.0;
        let chi2: f64 = counts
            .iter()
            .map(|c| (*c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 37.7, "chi2 = {chi2}");
    }

    #[test]
    fn search_domain_round_trips() {
        let spec = generate_embedding(Strategy::Hypersphere, 40, 3, 4).unwrap();
        let dom = SearchDomain::for_region(&spec.feasible_region).unwrap();
        let y = dvector![0.3, -1.2, 0.7];
        let back = dom.to_embedded(&dom.from_embedded(&y));
        assert!((back - &y).amax() < 1e-12);
        let pts = dom.sampler.sample(20, &mut rng_from_seed(1)).unwrap();
        for u in pts {
            assert!(spec.feasible_region.contains(&dom.to_embedded(&u)));
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        for spec in [
            generate_embedding(Strategy::Hypersphere, 20, 3, 1).unwrap(),
            generate_embedding(Strategy::Hesbo, 20, 3, 1).unwrap(),
            generate_rembo_embedding(20, 3, 1).unwrap(),
        ] {
            let s = serde_json::to_string(&spec).unwrap();
            let back: EmbeddingSpec = serde_json::from_str(&s).unwrap();
            assert_eq!(back.down_matrix, spec.down_matrix);
            assert_eq!(back.up_matrix, spec.up_matrix);
            assert_eq!(back.strategy, spec.strategy);
            assert_eq!(back.mode, spec.mode);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn clip_is_idempotent(v in proptest::collection::vec(-5.0f64..5.0, 1..20)) {
            let x = DVector::from_vec(v);
            let once = clip_to_box(&x);
            prop_assert_eq!(clip_to_box(&once), once);
        }

        #[test]
        fn feasible_points_project_linearly(seed in 0u64..1000, a in 0.0f64..1.0) {
            let spec = generate_embedding(Strategy::Hypersphere, 30, 3, seed).unwrap();
            let p = polytope_of(&spec).unwrap();
            let pts = rejection_sample_feasible(&p, 2, seed).unwrap();
            let mix = &pts[0] * a + &pts[1] * (1.0 - a);
            let lhs = up_project(&spec, &mix).unwrap();
            let rhs = up_project(&spec, &pts[0]).unwrap() * a
                + up_project(&spec, &pts[1]).unwrap() * (1.0 - a);
            prop_assert!((lhs - rhs).amax() < 1e-10);
        }

        #[test]
        fn clipped_projection_stays_in_box(seed in 0u64..1000, scale in 0.1f64..50.0) {
            let spec = generate_rembo_embedding(25, 4, seed).unwrap();
            let y = gaussian_matrix(4, 1, &mut rng_from_seed(seed + 1)).column(0) * scale;
            let x = up_project(&spec, &y.into_owned()).unwrap();
            prop_assert!(x.iter().all(|v| v.abs() <= 1.0));
        }

        #[test]
        fn reachable_points_are_fixed_by_projector(seed in 0u64..1000) {
            let spec = generate_embedding(Strategy::Gaussian, 30, 4, seed).unwrap();
            let p = polytope_of(&spec).unwrap();
            let y = &rejection_sample_feasible(&p, 1, seed).unwrap()[0];
            let x = up_project(&spec, y).unwrap();
            let proj = &spec.up_matrix * (&spec.down_matrix * &x);
            prop_assert!((proj - &x).amax() < 1e-8);
        }

        #[test]
        fn hesbo_box_never_clips(seed in 0u64..1000) {
            let spec = generate_embedding(Strategy::Hesbo, 40, 5, seed).unwrap();
            let mut rng = rng_from_seed(seed);
            let y = DVector::from_fn(5, |_, _| rng.random_range(-1.0..=1.0));
            let raw = &spec.up_matrix * &y;
            prop_assert!(raw.iter().all(|v| v.abs() <= 1.0));
        }

        #[test]
        fn sampled_points_lie_in_bounding_box(seed in 0u64..500) {
            let spec = generate_embedding(Strategy::Hypersphere, 20, 3, seed).unwrap();
            let p = polytope_of(&spec).unwrap();
            let (lo, hi) = embedding_bounds(&p).unwrap();
            prop_assert!(lo.iter().all(|v| *v <= 0.0) && hi.iter().all(|v| *v >= 0.0));
            for y in rejection_sample_feasible(&p, 5, seed).unwrap() {
                for i in 0..3 {
                    prop_assert!(y[i] >= lo[i] - 1e-9 && y[i] <= hi[i] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn budgeted_sampling_stays_feasible_and_uniform() {
        // Triangle x >= 0, y >= 0, x + y <= 1; centroid (1/3, 1/3).
        let a = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]);
        let p = Polytope::new(a, dvector![0.0, 0.0, 1.0]).unwrap();
        let s = PolytopeSampler::new(p.clone()).unwrap();
        let start = [dvector![0.01, 0.01]];
        let pts = s.sample_budgeted(20_000, 0, &start, &mut rng_from_seed(3)).unwrap();
        assert_eq!(pts.len(), 20_000);
        assert!(pts.iter().all(|y| p.contains_with_tol(y, 1e-9)));
        let mean = pts.iter().fold(DVector::zeros(2), |acc, y| acc + y) / pts.len() as f64;
        assert!((mean[0] - 1.0 / 3.0).abs() < 0.02 && (mean[1] - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn budgeted_sampling_matches_rejection_when_budget_suffices() {
        let p = Polytope::from_box(&dvector![-1.0, -1.0], &dvector![1.0, 1.0]);
        let s = PolytopeSampler::new(p).unwrap();
        let a = s.sample(50, &mut rng_from_seed(9)).unwrap();
        let b = s.sample_budgeted(50, 1000, &[], &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_fails_on_empty_interior() {
        // A sliver whose bounding box is the unit square.
        let a = DMatrix::from_row_slice(4, 2, &[1.0, -1.0, -1.0, 1.0, 1.0, 0.0, -1.0, 0.0]);
        let p = Polytope::new(a, dvector![0.0, 0.0, 1.0, 1.0]).unwrap();
        let s = PolytopeSampler::with_bounds(p, dvector![-1.0, -1.0], dvector![1.0, 1.0]);
        let err = s.sample(1, &mut rng_from_seed(0)).unwrap_err();
        assert!(matches!(err, Error::SamplingFailure { accepted: 0, .. }));
    }
}
