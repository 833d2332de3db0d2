//! Synthetic test problems and their high-dimensional extensions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::embedding::sample_haar_subspace;
use crate::error::{Error, Result};

/// `a (x2 - b x1^2 + c x1 - r)^2 + s (1 - t) cos(x1) + s` on
/// `[-5, 10] x [0, 15]`.
pub fn branin(x: &[f64]) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    let (x1, x2) = (x[0], x[1]);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

const HARTMANN6_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];

// scaled by 1e-4
const HARTMANN6_P: [[u32; 6]; 4] = [
    [1312, 1696, 5569, 124, 8283, 5886],
    [2329, 4135, 8307, 3736, 1004, 9991],
    [2348, 1451, 3522, 2883, 3047, 6650],
    [4047, 8828, 8732, 5743, 1091, 381],
];

/// Six-dimensional Hartmann function on `[0, 1]^6`.
pub fn hartmann6(x: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..4 {
        let mut inner = 0.0;
        for j in 0..6 {
            let p = HARTMANN6_P[i][j] as f64 * 1e-4;
            inner += HARTMANN6_A[i][j] * (x[j] - p).powi(2);
        }
        total -= HARTMANN6_ALPHA[i] * (-inner).exp();
    }
    total
}

/// Objective and the two constraints of the Gramacy problem on `[0, 1]^2`.
/// A point is feasible when both constraints are `<= 0`.
pub fn gramacy(x: &[f64]) -> (f64, f64, f64) {
    let (x1, x2) = (x[0], x[1]);
    let c1 = 1.5 - x1 - 2.0 * x2 - 0.5 * (2.0 * PI * (x1 * x1 - 2.0 * x2)).sin();
    let c2 = x1 * x1 + x2 * x2 - 1.5;
    (x1 + x2, c1, c2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseFunction {
    Branin,
    Hartmann6,
    Gramacy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objective: f64,
    /// Feasible when every entry is `<= 0`.
    pub constraints: Vec<f64>,
}

impl Evaluation {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.constraints.iter().all(|c| *c <= tol)
    }
}

/// A low-dimensional problem on its native box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestProblem {
    pub function: BaseFunction,
    pub native_lo: Vec<f64>,
    pub native_hi: Vec<f64>,
    pub known_optimum_value: f64,
    pub known_optimizers: Vec<Vec<f64>>,
}

impl TestProblem {
    pub fn branin() -> Self {
        TestProblem {
            function: BaseFunction::Branin,
            native_lo: vec![-5.0, 0.0],
            native_hi: vec![10.0, 15.0],
            known_optimum_value: 0.397_887_357_729_738_2,
            known_optimizers: vec![vec![-PI, 12.275], vec![PI, 2.275], vec![3.0 * PI, 2.475]],
        }
    }

    pub fn hartmann6() -> Self {
        TestProblem {
            function: BaseFunction::Hartmann6,
            native_lo: vec![0.0; 6],
            native_hi: vec![1.0; 6],
            known_optimum_value: -3.322_368_011_415_514,
            known_optimizers: vec![vec![
                0.201_689_507_251_18,
                0.150_010_689_389_465_77,
                0.476_873_974_275_495_77,
                0.275_332_428_391_796_06,
                0.311_651_616_794_818_73,
                0.657_300_528_814_076_5,
            ]],
        }
    }

    pub fn gramacy() -> Self {
        TestProblem {
            function: BaseFunction::Gramacy,
            native_lo: vec![0.0; 2],
            native_hi: vec![1.0; 2],
            known_optimum_value: 0.599_788_052_010_043_5,
            known_optimizers: vec![vec![0.195_122_688_571_772_2, 0.404_665_363_438_271_25]],
        }
    }

    pub fn of(function: BaseFunction) -> Self {
        match function {
            BaseFunction::Branin => Self::branin(),
            BaseFunction::Hartmann6 => Self::hartmann6(),
            BaseFunction::Gramacy => Self::gramacy(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.function {
            BaseFunction::Branin => "branin",
            BaseFunction::Hartmann6 => "hartmann6",
            BaseFunction::Gramacy => "gramacy",
        }
    }

    pub fn dim(&self) -> usize {
        self.native_lo.len()
    }

    pub fn num_constraints(&self) -> usize {
        match self.function {
            BaseFunction::Gramacy => 2,
            _ => 0,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Evaluation {
        match self.function {
            BaseFunction::Branin => Evaluation {
                objective: branin(x),
                constraints: vec![],
            },
            BaseFunction::Hartmann6 => Evaluation {
                objective: hartmann6(x),
                constraints: vec![],
            },
            BaseFunction::Gramacy => {
                let (f, c1, c2) = gramacy(x);
                Evaluation {
                    objective: f,
                    constraints: vec![c1, c2],
                }
            }
        }
    }

    /// Affine map from `[-1, 1]` to the native range of coordinate `k`.
    pub fn from_unit(&self, k: usize, u: f64) -> f64 {
        let (lo, hi) = (self.native_lo[k], self.native_hi[k]);
        lo + 0.5 * (u + 1.0) * (hi - lo)
    }

    pub fn to_unit(&self, k: usize, v: f64) -> f64 {
        let (lo, hi) = (self.native_lo[k], self.native_hi[k]);
        2.0 * (v - lo) / (hi - lo) - 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceMapping {
    AxisAligned {
        active_indices: Vec<usize>,
    },
    /// Native coordinate `k` is the affine image of `(T x)_k` from
    /// `[-r_k, r_k]`, with `r_k` the L1 norm of row `k` of `T`.
    RandomSubspace {
        projection: DMatrix<f64>,
        ranges: DVector<f64>,
    },
}

/// A base problem embedded in `[-1, 1]^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientProblem {
    pub id: String,
    pub base: TestProblem,
    pub ambient_dim: usize,
    pub mapping: SubspaceMapping,
}

impl AmbientProblem {
    pub fn to_native(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        if x.len() != self.ambient_dim {
            return Err(Error::Dimension(format!(
                "ambient point has length {}, problem has D = {}",
                x.len(),
                self.ambient_dim
            )));
        }
        Ok(match &self.mapping {
            SubspaceMapping::AxisAligned { active_indices } => active_indices
                .iter()
                .enumerate()
                .map(|(k, &i)| self.base.from_unit(k, x[i]))
                .collect(),
            SubspaceMapping::RandomSubspace { projection, ranges } => {
                let z = projection * x;
                (0..z.len())
                    .map(|k| self.base.from_unit(k, z[k] / ranges[k]))
                    .collect()
            }
        })
    }

    /// Ambient point mapping to `native` (axis-aligned only; inactive
    /// coordinates are zero).
    pub fn from_native(&self, native: &[f64]) -> Result<DVector<f64>> {
        match &self.mapping {
            SubspaceMapping::AxisAligned { active_indices } => {
                let mut x = DVector::zeros(self.ambient_dim);
                for (k, &i) in active_indices.iter().enumerate() {
                    x[i] = self.base.to_unit(k, native[k]);
                }
                Ok(x)
            }
            SubspaceMapping::RandomSubspace { .. } => Err(Error::InvalidArgument(
                "native points have no unique preimage under a random subspace".into(),
            )),
        }
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> Result<Evaluation> {
        Ok(self.base.evaluate(&self.to_native(x)?))
    }

    pub fn optimum_value(&self) -> f64 {
        self.base.known_optimum_value
    }

    pub fn num_constraints(&self) -> usize {
        self.base.num_constraints()
    }
}

/// Embeds `base` in `[-1, 1]^D` on the given active coordinates; every other
/// coordinate is ignored.
pub fn extend_axis_aligned(base: TestProblem, big_d: usize, active_indices: &[usize]) -> Result<AmbientProblem> {
    if active_indices.len() != base.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} active indices for a {}-dimensional problem",
            active_indices.len(),
            base.dim()
        )));
    }
    let mut seen = vec![false; big_d];
    for &i in active_indices {
        if i >= big_d || seen[i] {
            return Err(Error::InvalidArgument(format!(
                "active index {i} is out of range or repeated for D = {big_d}"
            )));
        }
        seen[i] = true;
    }
    Ok(AmbientProblem {
        id: format!("{}_d{big_d}", base.name()),
        base,
        ambient_dim: big_d,
        mapping: SubspaceMapping::AxisAligned {
            active_indices: active_indices.to_vec(),
        },
    })
}

/// Embeds `base` on a Haar-random `d`-dimensional subspace of `R^D`.
pub fn extend_random_subspace(base: TestProblem, big_d: usize, seed: u64) -> Result<AmbientProblem> {
    let d = base.dim();
    let t = sample_haar_subspace(big_d, d, seed)?;
    let ranges = DVector::from_fn(d, |k, _| t.row(k).iter().map(|v| v.abs()).sum());
    Ok(AmbientProblem {
        id: format!("{}_random_d{big_d}", base.name()),
        base,
        ambient_dim: big_d,
        mapping: SubspaceMapping::RandomSubspace {
            projection: t,
            ranges,
        },
    })
}

/// Seed of the fixed rotation behind registry ids with a `_random_` part.
pub const REGISTRY_SUBSPACE_SEED: u64 = 0;

/// Looks up `<function>_d<D>` (active coordinates first) or
/// `<function>_random_d<D>`.
pub fn problem_by_id(id: &str) -> Result<AmbientProblem> {
    let unknown = || Error::UnknownProblem(id.to_string());
    let (head, dim) = id.rsplit_once("_d").ok_or_else(unknown)?;
    let big_d: usize = dim.parse().map_err(|_| unknown())?;
    let (name, random) = match head.strip_suffix("_random") {
        Some(n) => (n, true),
        None => (head, false),
    };
    let base = match name {
        "branin" => TestProblem::branin(),
        "hartmann6" => TestProblem::hartmann6(),
        "gramacy" => TestProblem::gramacy(),
        _ => return Err(unknown()),
    };
    if big_d < base.dim() {
        return Err(unknown());
    }
    if random {
        extend_random_subspace(base, big_d, REGISTRY_SUBSPACE_SEED)
    } else {
        let active: Vec<usize> = (0..base.dim()).collect();
        extend_axis_aligned(base, big_d, &active)
    }
}

/// `log10(max(b_t - f*, 1e-12))` for each best-so-far value.
pub fn log_regret(best_so_far: &[f64], optimum: f64) -> Vec<f64> {
    best_so_far
        .iter()
        .map(|b| (b - optimum).max(1e-12).log10())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, rng_from_seed};
    use rand::Rng;

    #[test]
    fn branin_values() {
        let p = TestProblem::branin();
        for x in &p.known_optimizers {
            assert!((branin(x) - p.known_optimum_value).abs() < 1e-6);
        }
        assert!((branin(&[PI, 2.275]) - 0.398).abs() < 1e-3);
        // (0 - 0 + 0 - 6)^2 + 10 (1 - 1/(8 pi)) + 10
        let expected = 36.0 + 10.0 * (1.0 - 1.0 / (8.0 * PI)) + 10.0;
        assert!((branin(&[0.0, 0.0]) - expected).abs() < 1e-12);
    }

    #[test]
    fn hartmann6_tables_checksum() {
        let a: f64 = HARTMANN6_A.iter().flatten().sum();
        let p: u32 = HARTMANN6_P.iter().flatten().sum();
        assert!((a - 184.7).abs() < 1e-9);
        assert_eq!(p, 101_095);
        assert_eq!(HARTMANN6_ALPHA.iter().sum::<f64>(), 8.4);
    }

    #[test]
    fn hartmann6_values() {
        let p = TestProblem::hartmann6();
        assert!((hartmann6(&p.known_optimizers[0]) - p.known_optimum_value).abs() < 1e-9);
        assert!((hartmann6(&[0.5; 6]) - (-0.505_314_991_702_233_3)).abs() < 1e-12);
        let mut rng = rng_from_seed(1);
        for _ in 0..2000 {
            let x: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            assert!(hartmann6(&x) >= p.known_optimum_value);
        }
    }

    #[test]
    fn gramacy_values() {
        let (_, _, c2) = gramacy(&[1.0, 1.0]);
        assert!((c2 - 0.5).abs() < 1e-15);
        let p = TestProblem::gramacy();
        let e = p.evaluate(&p.known_optimizers[0]);
        assert!((e.objective - p.known_optimum_value).abs() < 1e-12);
        assert!(e.is_feasible(1e-8));
        assert!((p.known_optimum_value - 0.5998).abs() < 1e-4);
        let (f, _, _) = gramacy(&[0.3, 0.1]);
        let (f2, _, _) = gramacy(&[0.6, 0.2]);
        assert!((f2 - 2.0 * f).abs() < 1e-15);
    }

    #[test]
    fn branin_hesbo_diagonals() {
        let p = extend_axis_aligned(TestProblem::branin(), 2, &[0, 1]).unwrap();
        let grid = |sign: f64| {
            (0..=200_000)
                .map(|i| {
                    let u = -1.0 + 2.0 * i as f64 / 200_000.0;
                    p.evaluate(&DVector::from_vec(vec![u, sign * u])).unwrap().objective
                })
                .fold(f64::INFINITY, f64::min)
        };
        assert!((grid(-1.0) - 0.925).abs() < 0.01);
        assert!((grid(1.0) - 17.18).abs() < 0.01);
    }

    #[test]
    fn axis_aligned_ignores_inactive_coordinates() {
        let p = problem_by_id("hartmann6_d30").unwrap();
        let mut rng = rng_from_seed(2);
        for _ in 0..100 {
            let x = DVector::from_fn(30, |_, _| rng.random_range(-1.0..=1.0));
            let base = p.evaluate(&x).unwrap().objective;
            for i in 6..30 {
                let mut y = x.clone();
                y[i] = rng.random_range(-1.0..=1.0);
                assert_eq!(p.evaluate(&y).unwrap().objective.to_bits(), base.to_bits());
            }
        }
    }

    #[test]
    fn inactive_gradient_vanishes() {
        let p = problem_by_id("branin_d10").unwrap();
        let x = DVector::from_fn(10, |i, _| 0.1 * i as f64 - 0.45);
        for i in 2..10 {
            let h = 1e-5;
            let mut a = x.clone();
            a[i] += h;
            let mut b = x.clone();
            b[i] -= h;
            let g = (p.evaluate(&a).unwrap().objective - p.evaluate(&b).unwrap().objective) / (2.0 * h);
            assert!(g.abs() < 1e-10);
        }
    }

    #[test]
    fn optimizer_composes_through_extension() {
        let p = extend_axis_aligned(TestProblem::branin(), 50, &[7, 31]).unwrap();
        let x = p.from_native(&p.base.known_optimizers[1]).unwrap();
        assert!(x.iter().all(|v| v.abs() <= 1.0));
        assert!((p.evaluate(&x).unwrap().objective - p.optimum_value()).abs() < 1e-9);
        let back = p.to_native(&x).unwrap();
        for (a, b) in back.iter().zip(&p.base.known_optimizers[1]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_indices_rejected() {
        assert!(extend_axis_aligned(TestProblem::branin(), 10, &[1, 1]).is_err());
        assert!(extend_axis_aligned(TestProblem::branin(), 10, &[1, 10]).is_err());
        assert!(extend_axis_aligned(TestProblem::branin(), 10, &[1]).is_err());
    }

    #[test]
    fn random_subspace_behaviour() {
        let p = extend_random_subspace(TestProblem::hartmann6(), 40, 3).unwrap();
        let center = p.evaluate(&DVector::zeros(40)).unwrap().objective;
        assert_eq!(center, hartmann6(&[0.5; 6]));
        let SubspaceMapping::RandomSubspace { projection, .. } = &p.mapping else {
            unreachable!()
        };
        let mut rng = rng_from_seed(4);
        let x = gaussian_matrix(40, 1, &mut rng).column(0).map(|v| v.clamp(-1.0, 1.0) * 0.5);
        // move along the null space of T
        let r = gaussian_matrix(40, 1, &mut rng).column(0).into_owned();
        let n = &r - projection.transpose() * (projection * &r);
        let y = &x + n * 1e-2;
        let (a, b) = (p.evaluate(&x).unwrap().objective, p.evaluate(&y).unwrap().objective);
        assert!((a - b).abs() < 1e-12);
        // vertices sign(T row k) reach the native bounds exactly
        let v = projection.row(0).transpose().map(|t| t.signum());
        let native = p.to_native(&v).unwrap();
        assert!((native[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn registry_ids() {
        for id in ["branin_d100", "hartmann6_d100", "hartmann6_d1000", "gramacy_d100", "hartmann6_random_d1000"] {
            let p = problem_by_id(id).unwrap();
            assert_eq!(p.id, id);
        }
        assert!(problem_by_id("rosenbrock_d10").is_err());
        assert!(problem_by_id("branin_dx").is_err());
        assert!(problem_by_id("hartmann6_d3").is_err());
    }

    #[test]
    fn log_regret_floor() {
        let r = log_regret(&[2.0, 1.0, 1.0 - 1e-15], 1.0);
        assert_eq!(r[0], 0.0);
        assert_eq!(r[1], -12.0);
        assert_eq!(r[2], -12.0);
    }
}
