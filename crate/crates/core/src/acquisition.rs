//! Expected improvement, its feasibility-weighted form, and maximization over
//! a polytope by multi-start projected-gradient ascent.
//!
//! The ascent runs on the logarithm of the acquisition, which has the same
//! maximizers but stays informative where EI underflows.

use nalgebra::DVector;

use crate::embedding::{FeasibleRegion, Polytope, PolytopeSampler};
use crate::error::Result;
use crate::gp::{GaussianPrediction, GpFit};
use crate::linalg::rng_from_seed;
use crate::optim::{maximize_in_polytope, AscentOptions};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// Below this variance the posterior is treated as deterministic while
/// optimizing.
const MIN_VARIANCE: f64 = 1e-20;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `c(x) = 1/(x + 2/(x + 3/(x + ...)))`, so that the Mills ratio
/// `Phi(-x)/phi(x)` is `1/(x + c(x))`. Accurate for `x > 3`.
fn mills_tail(x: f64) -> f64 {
    let mut t = x;
    for k in (2..=60).rev() {
        t = x + k as f64 / t;
    }
    1.0 / t
}

/// `ln h(z)` and `d ln h / dz` with `h(z) = phi(z) + z Phi(z)`.
fn log_h(z: f64) -> (f64, f64) {
    if z > -3.0 {
        let cdf = normal_cdf(z);
        let h = normal_pdf(z) + z * cdf;
        (h.ln(), cdf / h)
    } else {
        let x = -z;
        let c = mills_tail(x);
        let ln_phi = -0.5 * z * z - LN_SQRT_2PI;
        (ln_phi + c.ln() - (x + c).ln(), 1.0 / c)
    }
}

/// `ln Phi(w)` and its derivative.
fn log_cdf(w: f64) -> (f64, f64) {
    if w > -3.0 {
        let cdf = normal_cdf(w);
        (cdf.ln(), normal_pdf(w) / cdf)
    } else {
        let x = -w;
        let c = mills_tail(x);
        (-0.5 * w * w - LN_SQRT_2PI - (x + c).ln(), x + c)
    }
}

/// EI for minimization: `sigma phi(z) + (best - mu) Phi(z)`,
/// `z = (best - mu) / sigma`.
pub fn expected_improvement(prediction: &GaussianPrediction, best: f64) -> f64 {
    if best == f64::INFINITY {
        return f64::INFINITY;
    }
    let sigma = prediction.std_dev();
    let gap = best - prediction.mean;
    if sigma <= 0.0 {
        return gap.max(0.0);
    }
    let z = gap / sigma;
    (sigma * normal_pdf(z) + gap * normal_cdf(z)).max(0.0)
}

/// EI with its partial derivatives with respect to the posterior mean and
/// standard deviation.
pub fn expected_improvement_grad(mean: f64, sd: f64, best: f64) -> (f64, f64, f64) {
    let gap = best - mean;
    if sd <= 0.0 {
        return if gap > 0.0 { (gap, -1.0, 0.0) } else { (0.0, 0.0, 0.0) };
    }
    let z = gap / sd;
    let cdf = normal_cdf(z);
    let pdf = normal_pdf(z);
    ((sd * pdf + gap * cdf).max(0.0), -cdf, pdf)
}

/// Probability that a constraint with Gaussian posterior is `<= 0`.
pub fn feasibility_probability(prediction: &GaussianPrediction) -> f64 {
    let sd = prediction.std_dev();
    if sd <= 0.0 {
        return if prediction.mean <= 0.0 { 1.0 } else { 0.0 };
    }
    normal_cdf(-prediction.mean / sd)
}

/// Surrogates and region for one acquisition step. All models share the
/// coordinates of `feasible_region`.
#[derive(Debug, Clone)]
pub struct AcquisitionProblem {
    pub objective_model: GpFit,
    pub constraint_models: Vec<GpFit>,
    /// Best feasible observed objective; `+inf` when nothing feasible has
    /// been seen, in which case only feasibility is rewarded.
    pub incumbent_best: f64,
    pub feasible_region: FeasibleRegion,
    sampler: PolytopeSampler,
}

impl AcquisitionProblem {
    pub fn new(
        objective_model: GpFit,
        constraint_models: Vec<GpFit>,
        incumbent_best: f64,
        feasible_region: FeasibleRegion,
    ) -> Result<Self> {
        let sampler = PolytopeSampler::new(feasible_region.as_polytope())?;
        Ok(AcquisitionProblem {
            objective_model,
            constraint_models,
            incumbent_best,
            feasible_region,
            sampler,
        })
    }

    /// Same as [`AcquisitionProblem::new`] with a prebuilt sampler for the
    /// region, skipping the bounding-box computation.
    pub fn with_sampler(
        objective_model: GpFit,
        constraint_models: Vec<GpFit>,
        incumbent_best: f64,
        sampler: PolytopeSampler,
    ) -> Self {
        AcquisitionProblem {
            objective_model,
            constraint_models,
            incumbent_best,
            feasible_region: FeasibleRegion::Polytope(sampler.polytope().clone()),
            sampler,
        }
    }

    pub fn polytope(&self) -> &Polytope {
        self.sampler.polytope()
    }

    fn ei_factor(&self, y: &DVector<f64>) -> f64 {
        if self.incumbent_best == f64::INFINITY {
            1.0
        } else {
            expected_improvement(&self.objective_model.predict(y), self.incumbent_best)
        }
    }

    /// `ln` of the acquisition and its gradient.
    pub fn log_value_grad(&self, y: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
        let d = y.len();
        let mut value = 0.0;
        let mut grad = DVector::zeros(d);
        if self.incumbent_best != f64::INFINITY {
            let pg = self.objective_model.predict_with_grad(y);
            let var = pg.prediction.variance.max(MIN_VARIANCE);
            let sd = var.sqrt();
            let dsd = &pg.dvariance / (2.0 * sd);
            let z = (self.incumbent_best - pg.prediction.mean) / sd;
            let (lh, dlh) = log_h(z);
            value += sd.ln() + lh;
            let dz = (-&pg.dmean - &dsd * z) / sd;
            grad += &dsd / sd + dz * dlh;
        }
        for c in &self.constraint_models {
            let pg = c.predict_with_grad(y);
            let var = pg.prediction.variance.max(MIN_VARIANCE);
            let sd = var.sqrt();
            let dsd = &pg.dvariance / (2.0 * sd);
            let w = -pg.prediction.mean / sd;
            let (lc, dlc) = log_cdf(w);
            value += lc;
            let dw = (-&pg.dmean - &dsd * w) / sd;
            grad += dw * dlc;
        }
        (value.is_finite() && grad.iter().all(|g| g.is_finite())).then_some((value, grad))
    }

    pub fn log_value(&self, y: &DVector<f64>) -> f64 {
        let mut value = 0.0;
        if self.incumbent_best != f64::INFINITY {
            let p = self.objective_model.predict(y);
            let sd = p.variance.max(MIN_VARIANCE).sqrt();
            value += sd.ln() + log_h((self.incumbent_best - p.mean) / sd).0;
        }
        for c in &self.constraint_models {
            let p = c.predict(y);
            let sd = p.variance.max(MIN_VARIANCE).sqrt();
            value += log_cdf(-p.mean / sd).0;
        }
        if value.is_nan() {
            f64::NEG_INFINITY
        } else {
            value
        }
    }

    /// Training input with the best feasible observed objective, if any lies
    /// in the region.
    fn best_training_point(&self) -> Option<DVector<f64>> {
        let obj = &self.objective_model;
        let n = obj.num_train();
        let feasible = |i: usize| {
            self.constraint_models
                .iter()
                .all(|c| c.num_train() == n && c.training_targets[i] <= 0.0)
        };
        let pick = |require_feasible: bool| {
            (0..n)
                .filter(|&i| !require_feasible || feasible(i))
                .min_by(|&a, &b| obj.training_targets[a].total_cmp(&obj.training_targets[b]))
        };
        let idx = pick(true).or_else(|| pick(false))?;
        let y = obj.training_inputs.row(idx).transpose();
        self.polytope().contains_with_tol(&y, 1e-9).then_some(y)
    }
}

/// Feasibility-weighted EI: `EI(y) prod_j P(c_j(y) <= 0)`.
pub fn feasibility_weighted_ei(problem: &AcquisitionProblem, y: &DVector<f64>) -> f64 {
    let mut v = problem.ei_factor(y);
    for c in &problem.constraint_models {
        v *= feasibility_probability(&c.predict(y));
    }
    v
}

#[derive(Debug, Clone)]
pub struct AcquisitionOptions {
    pub restarts: usize,
    pub probes: usize,
    /// Rejection proposals spent on probes before switching to hit-and-run.
    pub probe_budget: usize,
    pub ascent: AscentOptions,
}

impl Default for AcquisitionOptions {
    fn default() -> Self {
        AcquisitionOptions {
            restarts: 16,
            probes: 512,
            probe_budget: 200_000,
            ascent: AscentOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub point: DVector<f64>,
    /// Acquisition value at `point`.
    pub value: f64,
    /// Natural log of the acquisition value.
    pub log_value: f64,
}

/// Maximizes the feasibility-weighted EI over the problem's region with the
/// default probe count.
pub fn optimize_acquisition(problem: &AcquisitionProblem, restarts: usize, seed: u64) -> Result<Candidate> {
    let opts = AcquisitionOptions {
        restarts,
        ..Default::default()
    };
    optimize_acquisition_with(problem, &opts, seed)
}

/// Probes the region with sampled feasible points, then runs constrained
/// ascent from the best probes and from the best training point. The result
/// is never worse than any probe or start.
pub fn optimize_acquisition_with(
    problem: &AcquisitionProblem,
    opts: &AcquisitionOptions,
    seed: u64,
) -> Result<Candidate> {
    let mut rng = rng_from_seed(seed);
    let train = &problem.objective_model.training_inputs;
    let seeds: Vec<DVector<f64>> = (0..train.nrows()).map(|i| train.row(i).transpose()).collect();
    let probes = problem
        .sampler
        .sample_budgeted(opts.probes.max(1), opts.probe_budget, &seeds, &mut rng)?;
    let mut scored: Vec<(f64, usize)> = probes
        .iter()
        .enumerate()
        .map(|(i, y)| (problem.log_value(y), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut starts: Vec<DVector<f64>> = Vec::with_capacity(opts.restarts);
    if let Some(y) = problem.best_training_point() {
        starts.push(y);
    }
    for (_, i) in &scored {
        if starts.len() >= opts.restarts.max(1) {
            break;
        }
        starts.push(probes[*i].clone());
    }

    let (best_probe_val, best_probe_idx) = scored[0];
    let mut best = (best_probe_val, probes[best_probe_idx].clone());
    for y0 in starts {
        let v0 = problem.log_value(&y0);
        if v0 > best.0 {
            best = (v0, y0.clone());
        }
        let res = maximize_in_polytope(
            |y| problem.log_value_grad(y),
            problem.polytope(),
            y0,
            &opts.ascent,
        );
        if let Some(m) = res {
            if m.value > best.0 && problem.polytope().contains_with_tol(&m.x, 1e-6) {
                best = (m.value, m.x);
            }
        }
    }
    let point = best.1;
    Ok(Candidate {
        value: feasibility_weighted_ei(problem, &point),
        log_value: best.0,
        point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{fit_gp, GpConfig, GpParams, KernelKind};
    use crate::linalg::gaussian_matrix;
    use nalgebra::{dvector, DMatrix};

    fn gauss(mean: f64, variance: f64) -> GaussianPrediction {
        GaussianPrediction { mean, variance }
    }

    fn toy_fit(seed: u64) -> GpFit {
        let mut rng = rng_from_seed(seed);
        let x = gaussian_matrix(12, 2, &mut rng).map(|v| v.clamp(-1.0, 1.0) * 0.9);
        let y = DVector::from_fn(12, |i, _| (3.0 * x[(i, 0)]).sin() + x[(i, 1)].powi(2));
        fit_gp(&x, &y, &GpConfig::new(KernelKind::Mahalanobis), seed).unwrap()
    }

    fn unit_box(d: usize) -> FeasibleRegion {
        FeasibleRegion::Box {
            lo: DVector::from_element(d, -1.0),
            hi: DVector::from_element(d, 1.0),
        }
    }

    #[test]
    fn ei_closed_forms() {
        assert!((expected_improvement(&gauss(0.7, 0.0), 1.0) - 0.3).abs() < 1e-15);
        assert_eq!(expected_improvement(&gauss(1.3, 0.0), 1.0), 0.0);
        assert!((expected_improvement(&gauss(2.0, 1.0), 2.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn ei_gradient_matches_differences() {
        for &sd in &[1e-3, 0.05, 0.7, 3.0, 10.0] {
            for &mu in &[-1.0, 0.0, 0.4, 2.0] {
                let best = 0.5;
                let (_, dm, ds) = expected_improvement_grad(mu, sd, best);
                let h = 1e-6 * sd.max(1e-3);
                let ei = |m: f64, s: f64| expected_improvement_grad(m, s, best).0;
                let fm = (ei(mu + h, sd) - ei(mu - h, sd)) / (2.0 * h);
                let fs = (ei(mu, sd + h) - ei(mu, sd - h)) / (2.0 * h);
                assert!((fm - dm).abs() <= 1e-4 * dm.abs().max(1e-8), "mu {mu} sd {sd}");
                assert!((fs - ds).abs() <= 1e-4 * ds.abs().max(1e-8), "mu {mu} sd {sd}");
            }
        }
    }

    #[test]
    fn ei_monotone_in_mean_and_sd() {
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let v = expected_improvement(&gauss(-2.0 + 0.1 * i as f64, 0.25), 0.0);
            assert!(v < prev);
            prev = v;
        }
        let mut prev = 0.0;
        for i in 1..50 {
            let sd = 0.1 * i as f64;
            let v = expected_improvement(&gauss(0.3, sd * sd), 0.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn log_helpers_agree_with_direct_values() {
        for z in [-2.9, -3.1, -5.0, -8.0] {
            let direct = (normal_pdf(z) + z * normal_cdf(z)).ln();
            assert!((log_h(z).0 - direct).abs() < 1e-6 * direct.abs(), "z {z}");
            assert!((log_cdf(z).0 - normal_cdf(z).ln()).abs() < 1e-10 * direct.abs());
        }
        let (v, g) = log_h(-3.0 - 1e-9);
        let (v2, g2) = log_h(-3.0 + 1e-9);
        assert!((v - v2).abs() < 1e-7 && (g - g2).abs() < 1e-6);
        assert!(log_h(-40.0).0.is_finite());
    }

    #[test]
    fn fwei_without_constraints_is_ei() {
        let fit = toy_fit(1);
        let p = AcquisitionProblem::new(fit.clone(), vec![], 0.1, unit_box(2)).unwrap();
        let y = dvector![0.2, -0.5];
        assert_eq!(feasibility_weighted_ei(&p, &y), expected_improvement(&fit.predict(&y), 0.1));
    }

    fn constant_model(mean: f64, variance: f64) -> GpFit {
        // far from its single training point the posterior is the prior
        let params = GpParams::ard(KernelKind::ArdRbf, &dvector![1e-3, 1e-3], variance, 0.0, mean);
        GpFit::from_params(params, DMatrix::from_element(1, 2, 50.0), dvector![mean]).unwrap()
    }

    #[test]
    fn fwei_constraint_weights() {
        let fit = toy_fit(2);
        let y = dvector![0.1, 0.3];
        let ei = expected_improvement(&fit.predict(&y), 0.2);
        let half = AcquisitionProblem::new(fit.clone(), vec![constant_model(0.0, 1.0)], 0.2, unit_box(2)).unwrap();
        assert!((feasibility_weighted_ei(&half, &y) - 0.5 * ei).abs() < 1e-15);
        let bad = AcquisitionProblem::new(fit, vec![constant_model(10.0, 1e-6)], 0.2, unit_box(2)).unwrap();
        let v = feasibility_weighted_ei(&bad, &y);
        assert!(v < 1e-10 * ei && v <= ei);
    }

    #[test]
    fn log_acquisition_gradient_matches_differences() {
        let fit = toy_fit(3);
        let c = toy_fit(4);
        let p = AcquisitionProblem::new(fit, vec![c], -0.5, unit_box(2)).unwrap();
        let y = dvector![0.35, -0.2];
        let (_, g) = p.log_value_grad(&y).unwrap();
        for i in 0..2 {
            let h = 1e-6;
            let mut a = y.clone();
            a[i] += h;
            let mut b = y.clone();
            b[i] -= h;
            let fd = (p.log_value(&a) - p.log_value(&b)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-4 * fd.abs().max(1.0), "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn optimum_is_feasible_and_beats_probes() {
        let fit = toy_fit(5);
        let best = fit.training_targets.min();
        let tri = Polytope::new(
            DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]),
            dvector![1.0, 1.0, 0.5],
        )
        .unwrap();
        let p = AcquisitionProblem::new(fit, vec![], best, FeasibleRegion::Polytope(tri.clone())).unwrap();
        let c = optimize_acquisition(&p, 16, 9).unwrap();
        assert!(tri.max_violation(&c.point) <= 1e-6);
        let probes = crate::embedding::rejection_sample_feasible(&tri, 512, 77).unwrap();
        let top = probes.iter().map(|y| feasibility_weighted_ei(&p, y)).fold(0.0, f64::max);
        assert!(c.value >= top - 1e-6, "{} < {top}", c.value);
        let again = optimize_acquisition(&p, 16, 9).unwrap();
        assert_eq!(c.point, again.point);
    }

    #[test]
    fn single_observation_pushes_search_away() {
        let params = GpParams::mahalanobis(DMatrix::identity(2, 2) * 2.0, 4.0, 0.0, 0.0);
        let y0 = dvector![0.2, 0.1];
        let fit = GpFit::from_params(params, DMatrix::from_row_slice(1, 2, &[0.2, 0.1]), dvector![0.0]).unwrap();
        let p = AcquisitionProblem::new(fit, vec![], 0.0, unit_box(2)).unwrap();
        let c = optimize_acquisition(&p, 8, 1).unwrap();
        assert!((&c.point - &y0).norm() > 0.3);
        assert!(feasibility_weighted_ei(&p, &y0) < 1e-8);
    }

    #[test]
    fn infinite_incumbent_maximizes_feasibility() {
        let fit = toy_fit(6);
        let c = toy_fit(7);
        let p = AcquisitionProblem::new(fit, vec![c.clone()], f64::INFINITY, unit_box(2)).unwrap();
        let cand = optimize_acquisition(&p, 8, 3).unwrap();
        let pf = feasibility_probability(&c.predict(&cand.point));
        assert!((cand.value - pf).abs() < 1e-12);
        let probes = crate::embedding::rejection_sample_feasible(&Polytope::from_box(&dvector![-1.0, -1.0], &dvector![1.0, 1.0]), 256, 2).unwrap();
        for y in probes {
            assert!(feasibility_probability(&c.predict(&y)) <= pf + 1e-6);
        }
    }
}
