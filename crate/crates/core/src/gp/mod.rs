//! Gaussian-process surrogate: kernels, MAP fitting, Laplace metric draws and
//! moment-matched prediction.

pub mod kernel;
mod model;

pub use kernel::{
    ard_matern52_kernel, ard_metric, ard_rbf_kernel, cross_kernel, mahalanobis_kernel, KernelKind,
    LatentArdParams,
};
pub use model::{
    factor_from_gamma, fit_gp, fit_map, laplace_posterior_samples, log_marginal_likelihood,
    log_marginal_likelihood_grad, metric_hessian_diagonal, packed_params, sample_metrics,
    unpack_params, GaussianPrediction, GpConfig, GpFit, GpFitRecord, GpParams, PredictionGrad,
    Standardization,
};
