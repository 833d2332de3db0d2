//! Predictive quality of the embedding surrogates on held-out points.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::benchmarks::problem_by_id;
use crate::embedding::{generate_embedding, SearchDomain, Strategy};
use crate::error::{Error, Result};
use crate::gp::{fit_map, laplace_posterior_samples, GpConfig, GpFit, KernelKind};
use crate::linalg::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFitConfig {
    pub problem_id: String,
    pub embed_dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub laplace_samples: usize,
    pub gp_restarts: usize,
}

impl ModelFitConfig {
    pub fn new(problem_id: &str, embed_dim: usize, n_train: usize, n_test: usize, seed: u64) -> Self {
        ModelFitConfig {
            problem_id: problem_id.to_string(),
            embed_dim,
            n_train,
            n_test,
            seed,
            laplace_samples: 16,
            gp_restarts: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPrediction {
    pub model: String,
    pub test_index: usize,
    pub target: f64,
    pub mean: f64,
    /// Variance of the latent function.
    pub variance: f64,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFitMetrics {
    pub model: String,
    pub r_squared: f64,
    /// Mean Gaussian log density of the test targets, using latent plus noise
    /// variance.
    pub mean_log_predictive_density: f64,
    pub mean_predictive_variance: f64,
    /// Standard deviation of the predicted means across test points.
    pub prediction_std: f64,
    pub target_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFitResult {
    pub config: ModelFitConfig,
    pub predictions: Vec<ModelPrediction>,
    pub metrics: Vec<ModelFitMetrics>,
}

impl ModelFitResult {
    pub fn metrics_for(&self, model: &str) -> Option<&ModelFitMetrics> {
        self.metrics.iter().find(|m| m.model == model)
    }

    pub fn write_predictions_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n_train,model,test_index,target,mean,variance,noise_variance")?;
        for p in &self.predictions {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.config.n_train, p.model, p.test_index, p.target, p.mean, p.variance, p.noise_variance
            )?;
        }
        Ok(())
    }
}

pub const MAHALANOBIS_SAMPLED: &str = "mahalanobis_sampled";
pub const MAHALANOBIS_POINT: &str = "mahalanobis_point";
pub const ARD_RBF: &str = "ard_rbf";

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

fn metrics(model: &str, preds: &[ModelPrediction]) -> ModelFitMetrics {
    let targets: Vec<f64> = preds.iter().map(|p| p.target).collect();
    let means: Vec<f64> = preds.iter().map(|p| p.mean).collect();
    let n = preds.len() as f64;
    let tmean = targets.iter().sum::<f64>() / n;
    let ss_res: f64 = preds.iter().map(|p| (p.target - p.mean).powi(2)).sum();
    let ss_tot: f64 = targets.iter().map(|t| (t - tmean).powi(2)).sum();
    let lpd = preds
        .iter()
        .map(|p| {
            let v = (p.variance + p.noise_variance).max(1e-300);
            -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (p.target - p.mean).powi(2) / v)
        })
        .sum::<f64>()
        / n;
    ModelFitMetrics {
        model: model.to_string(),
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { f64::NAN },
        mean_log_predictive_density: lpd,
        mean_predictive_variance: preds.iter().map(|p| p.variance).sum::<f64>() / n,
        prediction_std: std_dev(&means),
        target_std: std_dev(&targets),
    }
}

fn predict_all(name: &str, fit: &GpFit, test: &[DVector<f64>], targets: &[f64], map_only: bool) -> Vec<ModelPrediction> {
    test.iter()
        .zip(targets)
        .enumerate()
        .map(|(i, (u, t))| {
            let p = if map_only { fit.predict_point_estimate(u) } else { fit.predict(u) };
            ModelPrediction {
                model: name.to_string(),
                test_index: i,
                target: *t,
                mean: p.mean,
                variance: p.variance,
                noise_variance: fit.map_params.noise_variance,
            }
        })
        .collect()
}

/// Fits the sampled and point-estimate Mahalanobis GPs and an ARD RBF GP on
/// random points of a hypersphere embedding, and scores them on test points
/// drawn the same way.
pub fn run_modelfit(config: &ModelFitConfig) -> Result<ModelFitResult> {
    if config.n_train < 2 || config.n_test == 0 || config.embed_dim == 0 {
        return Err(Error::Config("modelfit needs n_train >= 2, n_test >= 1, embed_dim >= 1".into()));
    }
    let problem = problem_by_id(&config.problem_id)?;
    let spec = generate_embedding(
        Strategy::Hypersphere,
        problem.ambient_dim,
        config.embed_dim,
        derive_seed(config.seed, 0),
    )?;
    let domain = SearchDomain::for_region(&spec.feasible_region)?;
    let mut rng = rng_from_seed(derive_seed(config.seed, 1));
    let train = domain.sampler.sample(config.n_train, &mut rng)?;
    let test = domain.sampler.sample(config.n_test, &mut rng)?;
    let eval = |u: &DVector<f64>| -> Result<f64> {
        let x = spec.up_project(&domain.to_embedded(u))?;
        Ok(problem.evaluate(&x)?.objective)
    };
    let y_train = DVector::from_vec(train.iter().map(eval).collect::<Result<Vec<_>>>()?);
    let y_test: Vec<f64> = test.iter().map(eval).collect::<Result<_>>()?;
    let x_train = DMatrix::from_fn(config.n_train, config.embed_dim, |i, j| train[i][j]);

    let mut maha_cfg = GpConfig::new(KernelKind::Mahalanobis);
    maha_cfg.restarts = config.gp_restarts;
    let map = fit_map(&x_train, &y_train, &maha_cfg, derive_seed(config.seed, 2))?;
    let gammas = laplace_posterior_samples(&map, config.laplace_samples, derive_seed(config.seed, 3))?;
    let sampled = map.clone().with_metric_samples(gammas)?;

    let mut ard_cfg = GpConfig::new(KernelKind::ArdRbf);
    ard_cfg.restarts = config.gp_restarts;
    let ard = fit_map(&x_train, &y_train, &ard_cfg, derive_seed(config.seed, 4))?;

    let groups = [
        predict_all(MAHALANOBIS_SAMPLED, &sampled, &test, &y_test, false),
        predict_all(MAHALANOBIS_POINT, &map, &test, &y_test, true),
        predict_all(ARD_RBF, &ard, &test, &y_test, true),
    ];
    let metrics = groups
        .iter()
        .map(|g| metrics(&g[0].model, g))
        .collect();
    Ok(ModelFitResult {
        config: config.clone(),
        predictions: groups.into_iter().flatten().collect(),
        metrics,
    })
}
