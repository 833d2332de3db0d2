use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::kernel::KernelKind;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, rng_from_seed};
use crate::optim::{lbfgs_minimize, LbfgsOptions};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Hyperparameters of a stationary GP with a constant mean.
///
/// The metric is stored through its factor: `Gamma = F^T F`, with `F`
/// upper-triangular with a positive diagonal for the Mahalanobis kernel and
/// diagonal for the ARD kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpParams {
    pub kernel: KernelKind,
    pub metric_factor: DMatrix<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub constant_mean: f64,
}

impl GpParams {
    pub fn mahalanobis(u_factor: DMatrix<f64>, signal_variance: f64, noise_variance: f64, constant_mean: f64) -> Self {
        GpParams {
            kernel: KernelKind::Mahalanobis,
            metric_factor: u_factor,
            signal_variance,
            noise_variance,
            constant_mean,
        }
    }

    pub fn ard(
        kernel: KernelKind,
        lengthscales: &DVector<f64>,
        signal_variance: f64,
        noise_variance: f64,
        constant_mean: f64,
    ) -> Self {
        let scales = lengthscales.map(|l| 1.0 / (std::f64::consts::SQRT_2 * l));
        GpParams {
            kernel,
            metric_factor: DMatrix::from_diagonal(&scales),
            signal_variance,
            noise_variance,
            constant_mean,
        }
    }

    pub fn dim(&self) -> usize {
        self.metric_factor.nrows()
    }

    pub fn gamma(&self) -> DMatrix<f64> {
        self.metric_factor.transpose() * &self.metric_factor
    }

    pub fn lengthscales(&self) -> Option<DVector<f64>> {
        (!self.kernel.full_metric()).then(|| {
            self.metric_factor
                .diagonal()
                .map(|u| 1.0 / (std::f64::consts::SQRT_2 * u.abs()))
        })
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.metric_factor.ncols() != d {
            return Err(Error::Dimension("metric factor must be square".into()));
        }
        if !(self.signal_variance > 0.0) || !(self.noise_variance >= 0.0) {
            return Err(Error::InvalidArgument(
                "signal variance must be positive and noise nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Free metric parameters (off-diagonal entries and log-diagonal entries).
fn metric_vector(kind: KernelKind, factor: &DMatrix<f64>) -> DVector<f64> {
    let d = factor.nrows();
    let mut out = Vec::with_capacity(kind.metric_param_count(d));
    for a in 0..d {
        if kind.full_metric() {
            for b in a..d {
                out.push(if a == b {
                    factor[(a, a)].abs().ln()
                } else {
                    factor[(a, b)]
                });
            }
        } else {
            out.push(factor[(a, a)].abs().ln());
        }
    }
    DVector::from_vec(out)
}

fn factor_from_vector(kind: KernelKind, d: usize, v: &[f64]) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(d, d);
    let mut k = 0;
    for a in 0..d {
        if kind.full_metric() {
            for b in a..d {
                f[(a, b)] = if a == b { v[k].exp() } else { v[k] };
                k += 1;
            }
        } else {
            f[(a, a)] = v[k].exp();
            k += 1;
        }
    }
    f
}

/// Upper-triangular factor of an SPD metric (`Gamma = F^T F`).
pub fn factor_from_gamma(kind: KernelKind, gamma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if kind.full_metric() {
        let chol = gamma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("metric is not positive definite".into()))?;
        Ok(chol.l().transpose())
    } else {
        Ok(DMatrix::from_diagonal(&gamma.diagonal().map(|g| g.max(0.0).sqrt())))
    }
}

/// Packs hyperparameters as
/// `[metric params.., ln sigma^2, ln(noise - floor), mean]`.
fn pack(p: &GpParams, noise_floor: f64) -> DVector<f64> {
    let m = metric_vector(p.kernel, &p.metric_factor);
    let mut v: Vec<f64> = m.iter().cloned().collect();
    v.push(p.signal_variance.ln());
    v.push((p.noise_variance - noise_floor).max(1e-300).ln());
    v.push(p.constant_mean);
    DVector::from_vec(v)
}

fn unpack(kind: KernelKind, d: usize, v: &DVector<f64>, noise_floor: f64) -> GpParams {
    let k = kind.metric_param_count(d);
    GpParams {
        kernel: kind,
        metric_factor: factor_from_vector(kind, d, &v.as_slice()[..k]),
        signal_variance: v[k].exp(),
        noise_variance: noise_floor + v[k + 1].exp(),
        constant_mean: v[k + 2],
    }
}

/// Kernel quantities for one set of hyperparameters on fixed training inputs.
struct GramParts {
    z: DMatrix<f64>,
    q: DMatrix<f64>,
    kf: DMatrix<f64>,
}

fn gram_parts(kind: KernelKind, factor: &DMatrix<f64>, sigma2: f64, x: &DMatrix<f64>) -> GramParts {
    let z = x * factor.transpose();
    let n = z.nrows();
    let mut q = DMatrix::zeros(n, n);
    let mut kf = DMatrix::zeros(n, n);
    for j in 0..n {
        kf[(j, j)] = sigma2 * kind.profile(0.0);
        for i in (j + 1)..n {
            let mut s = 0.0;
            for c in 0..z.ncols() {
                let d = z[(i, c)] - z[(j, c)];
                s += d * d;
            }
            q[(i, j)] = s;
            q[(j, i)] = s;
            let k = sigma2 * kind.profile(s);
            kf[(i, j)] = k;
            kf[(j, i)] = k;
        }
    }
    GramParts { z, q, kf }
}

/// Log marginal likelihood and its gradient with respect to the packed
/// parameter vector.
fn lml_with_grad(
    kind: KernelKind,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    p: &GpParams,
    noise_floor: f64,
    want_grad: bool,
) -> Result<(f64, Option<DVector<f64>>)> {
    let n = x.nrows();
    let d = x.ncols();
    let parts = gram_parts(kind, &p.metric_factor, p.signal_variance, x);
    let mut k = parts.kf.clone();
    for i in 0..n {
        k[(i, i)] += p.noise_variance;
    }
    let (chol, _) = cholesky_with_jitter(&k)?;
    let resid = y.map(|v| v - p.constant_mean);
    let alpha = chol.solve(&resid);
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    let lml = -0.5 * resid.dot(&alpha) - log_det_half - 0.5 * n as f64 * LN_2PI;
    if !want_grad {
        return Ok((lml, None));
    }

    let kinv = chol.inverse();
    let w = &alpha * alpha.transpose() - &kinv;
    let np = kind.metric_param_count(d);
    let mut grad = DVector::zeros(np + 3);

    // metric: G = 2 Z^T (diag(M 1) - M) X with M = W o sigma^2 p'(Q)
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            if i != j {
                m[(i, j)] = w[(i, j)] * p.signal_variance * kind.profile_deriv(parts.q[(i, j)]);
            }
        }
    }
    let row_sums = m.column_sum();
    let mut lap = -m;
    for i in 0..n {
        lap[(i, i)] += row_sums[i];
    }
    let g = (parts.z.transpose() * lap * x) * 2.0;
    let f = &p.metric_factor;
    let mut kidx = 0;
    for a in 0..d {
        if kind.full_metric() {
            for b in a..d {
                grad[kidx] = if a == b { g[(a, a)] * f[(a, a)] } else { g[(a, b)] };
                kidx += 1;
            }
        } else {
            grad[kidx] = g[(a, a)] * f[(a, a)];
            kidx += 1;
        }
    }
    grad[np] = 0.5 * w.component_mul(&parts.kf).sum();
    grad[np + 1] = 0.5 * w.trace() * (p.noise_variance - noise_floor);
    grad[np + 2] = alpha.sum();
    Ok((lml, Some(grad)))
}

/// Log marginal likelihood of `targets` under a GP with `params`.
pub fn log_marginal_likelihood(
    inputs: &DMatrix<f64>,
    targets: &DVector<f64>,
    params: &GpParams,
) -> Result<f64> {
    check_data(inputs, targets, params.dim())?;
    params.validate()?;
    Ok(lml_with_grad(params.kernel, inputs, targets, params, 0.0, false)?.0)
}

/// Log marginal likelihood with its gradient with respect to
/// `[metric params.., ln sigma^2, ln noise, mean]`.
pub fn log_marginal_likelihood_grad(
    inputs: &DMatrix<f64>,
    targets: &DVector<f64>,
    params: &GpParams,
) -> Result<(f64, DVector<f64>)> {
    check_data(inputs, targets, params.dim())?;
    params.validate()?;
    let (v, g) = lml_with_grad(params.kernel, inputs, targets, params, 0.0, true)?;
    Ok((v, g.expect("gradient requested")))
}

/// Packed parameter vector matching [`log_marginal_likelihood_grad`].
pub fn packed_params(params: &GpParams) -> DVector<f64> {
    pack(params, 0.0)
}

pub fn unpack_params(kind: KernelKind, d: usize, v: &DVector<f64>) -> GpParams {
    unpack(kind, d, v, 0.0)
}

fn check_data(x: &DMatrix<f64>, y: &DVector<f64>, d: usize) -> Result<()> {
    if x.nrows() != y.len() || x.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "{} input rows for {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() != d {
        return Err(Error::Dimension(format!(
            "inputs have {} columns, kernel expects {d}",
            x.ncols()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpConfig {
    pub kernel: KernelKind,
    pub restarts: usize,
    /// Number of Laplace draws of the metric; 0 keeps the MAP point estimate.
    pub laplace_samples: usize,
    /// Lower bound on the noise variance, in standardized target units.
    pub noise_floor: f64,
    pub max_iter: usize,
}

impl GpConfig {
    pub fn new(kernel: KernelKind) -> Self {
        GpConfig {
            kernel,
            restarts: 8,
            laplace_samples: if kernel.full_metric() { 16 } else { 0 },
            noise_floor: 1e-6,
            max_iter: 200,
        }
    }
}

/// Target standardization used while fitting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub scale: f64,
}

impl Standardization {
    fn of(y: &DVector<f64>) -> Self {
        let n = y.len() as f64;
        let mean = y.mean();
        let var = if y.len() > 1 {
            y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let scale = if var.sqrt() > 1e-12 * mean.abs().max(1.0) {
            var.sqrt()
        } else {
            1.0
        };
        Standardization { mean, scale }
    }

    fn apply(&self, y: &DVector<f64>) -> DVector<f64> {
        y.map(|v| (v - self.mean) / self.scale)
    }

    fn params_to_original(&self, p: &GpParams) -> GpParams {
        let s2 = self.scale * self.scale;
        GpParams {
            kernel: p.kernel,
            metric_factor: p.metric_factor.clone(),
            signal_variance: p.signal_variance * s2,
            noise_variance: p.noise_variance * s2,
            constant_mean: self.mean + self.scale * p.constant_mean,
        }
    }

    fn params_to_standard(&self, p: &GpParams) -> GpParams {
        let s2 = self.scale * self.scale;
        GpParams {
            kernel: p.kernel,
            metric_factor: p.metric_factor.clone(),
            signal_variance: p.signal_variance / s2,
            noise_variance: p.noise_variance / s2,
            constant_mean: (p.constant_mean - self.mean) / self.scale,
        }
    }
}

/// Negative log posterior in standardized units: the prior is N(0, 1) on the
/// metric parameters, N(0, 2^2) on ln sigma^2 and ln(noise - floor), flat on
/// the mean.
fn neg_log_posterior(
    kind: KernelKind,
    x: &DMatrix<f64>,
    y_std: &DVector<f64>,
    theta: &DVector<f64>,
    noise_floor: f64,
) -> Option<(f64, DVector<f64>)> {
    let d = x.ncols();
    let np = kind.metric_param_count(d);
    if theta.iter().any(|v| !v.is_finite()) || theta[np] > 30.0 || theta[np + 1] > 30.0 {
        return None;
    }
    let p = unpack(kind, d, theta, noise_floor);
    let (lml, grad) = lml_with_grad(kind, x, y_std, &p, noise_floor, true).ok()?;
    let mut grad = grad?;
    let mut lp = 0.0;
    for i in 0..np {
        lp -= 0.5 * theta[i] * theta[i];
        grad[i] -= theta[i];
    }
    for i in [np, np + 1] {
        lp -= 0.125 * theta[i] * theta[i];
        grad[i] -= 0.25 * theta[i];
    }
    Some((-(lml + lp), -grad))
}

/// Cached conditional posterior for one metric.
#[derive(Debug, Clone)]
struct Conditional {
    factor: DMatrix<f64>,
    z: DMatrix<f64>,
    alpha: DVector<f64>,
    kinv: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl Conditional {
    fn build(
        kind: KernelKind,
        factor: DMatrix<f64>,
        p: &GpParams,
        x: &DMatrix<f64>,
        y: &DVector<f64>,
    ) -> Result<Self> {
        let parts = gram_parts(kind, &factor, p.signal_variance, x);
        let mut k = parts.kf;
        for i in 0..k.nrows() {
            k[(i, i)] += p.noise_variance;
        }
        let (chol, _) = cholesky_with_jitter(&k)?;
        let alpha = chol.solve(&y.map(|v| v - p.constant_mean));
        let kinv = chol.inverse();
        Ok(Conditional {
            factor,
            z: parts.z,
            alpha,
            kinv,
            chol,
        })
    }

    /// Mean and latent variance with gradients at `u`.
    fn predict(&self, kind: KernelKind, p: &GpParams, u: &DVector<f64>, grad: bool) -> Pred {
        let zs = &self.factor * u;
        let n = self.z.nrows();
        let d = zs.len();
        let mut kvec = DVector::zeros(n);
        let mut dk = DVector::zeros(n);
        for j in 0..n {
            let mut q = 0.0;
            for c in 0..d {
                let t = zs[c] - self.z[(j, c)];
                q += t * t;
            }
            kvec[j] = p.signal_variance * kind.profile(q);
            if grad {
                dk[j] = p.signal_variance * kind.profile_deriv(q);
            }
        }
        let v = &self.kinv * &kvec;
        let mean = p.constant_mean + kvec.dot(&self.alpha);
        let var = (p.signal_variance - kvec.dot(&v)).max(0.0);
        if !grad {
            return Pred {
                mean,
                var,
                dmean: None,
                dvar: None,
            };
        }
        // dk_j/du = dk_j * 2 F^T (zs - z_j)
        let wa = dk.component_mul(&self.alpha);
        let wv = dk.component_mul(&v);
        let mut sa = DVector::zeros(d);
        let mut sv = DVector::zeros(d);
        for j in 0..n {
            for c in 0..d {
                let t = zs[c] - self.z[(j, c)];
                sa[c] += wa[j] * t;
                sv[c] += wv[j] * t;
            }
        }
        let ft = self.factor.transpose();
        Pred {
            mean,
            var,
            dmean: Some(&ft * sa * 2.0),
            dvar: Some(&ft * sv * -4.0),
        }
    }
}

struct Pred {
    mean: f64,
    var: f64,
    dmean: Option<DVector<f64>>,
    dvar: Option<DVector<f64>>,
}

/// Gaussian posterior predictive of the latent function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrediction {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianPrediction {
    pub fn std_dev(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }
}

/// Prediction together with its gradient with respect to the input.
#[derive(Debug, Clone)]
pub struct PredictionGrad {
    pub prediction: GaussianPrediction,
    pub dmean: DVector<f64>,
    pub dvariance: DVector<f64>,
}

/// A fitted GP: MAP hyperparameters (original target units), optional
/// Laplace draws of the metric, and cached factorizations for each.
#[derive(Debug, Clone)]
pub struct GpFit {
    pub map_params: GpParams,
    pub laplace_samples: Vec<DMatrix<f64>>,
    pub training_inputs: DMatrix<f64>,
    pub training_targets: DVector<f64>,
    pub standardization: Standardization,
    pub noise_floor: f64,
    map_model: Conditional,
    sample_models: Vec<Conditional>,
}

impl GpFit {
    /// Builds a fit directly from hyperparameters, without optimization.
    pub fn from_params(params: GpParams, inputs: DMatrix<f64>, targets: DVector<f64>) -> Result<Self> {
        check_data(&inputs, &targets, params.dim())?;
        params.validate()?;
        let map_model = Conditional::build(
            params.kernel,
            params.metric_factor.clone(),
            &params,
            &inputs,
            &targets,
        )?;
        Ok(GpFit {
            standardization: Standardization::of(&targets),
            map_params: params,
            laplace_samples: Vec::new(),
            training_inputs: inputs,
            training_targets: targets,
            noise_floor: 0.0,
            map_model,
            sample_models: Vec::new(),
        })
    }

    pub fn kernel(&self) -> KernelKind {
        self.map_params.kernel
    }

    pub fn dim(&self) -> usize {
        self.map_params.dim()
    }

    pub fn num_train(&self) -> usize {
        self.training_targets.len()
    }

    /// Replaces the metric draws used by [`GpFit::predict`].
    pub fn with_metric_samples(mut self, gammas: Vec<DMatrix<f64>>) -> Result<Self> {
        let kind = self.kernel();
        let mut models = Vec::with_capacity(gammas.len());
        for g in &gammas {
            let f = factor_from_gamma(kind, g)?;
            models.push(Conditional::build(
                kind,
                f,
                &self.map_params,
                &self.training_inputs,
                &self.training_targets,
            )?);
        }
        self.laplace_samples = gammas;
        self.sample_models = models;
        Ok(self)
    }

    fn models(&self) -> &[Conditional] {
        if self.sample_models.is_empty() {
            std::slice::from_ref(&self.map_model)
        } else {
            &self.sample_models
        }
    }

    /// Moment-matched mixture over the metric draws (MAP only when none).
    pub fn predict(&self, u: &DVector<f64>) -> GaussianPrediction {
        mixture(self.models().iter().map(|m| m.predict(self.kernel(), &self.map_params, u, false)))
            .prediction
    }

    /// Prediction using only the MAP metric.
    pub fn predict_point_estimate(&self, u: &DVector<f64>) -> GaussianPrediction {
        let p = self.map_model.predict(self.kernel(), &self.map_params, u, false);
        GaussianPrediction {
            mean: p.mean,
            variance: p.var,
        }
    }

    pub fn predict_with_grad(&self, u: &DVector<f64>) -> PredictionGrad {
        mixture(self.models().iter().map(|m| m.predict(self.kernel(), &self.map_params, u, true)))
    }

    /// Conditional predictions for each metric draw.
    pub fn component_predictions(&self, u: &DVector<f64>) -> Vec<GaussianPrediction> {
        self.models()
            .iter()
            .map(|m| {
                let p = m.predict(self.kernel(), &self.map_params, u, false);
                GaussianPrediction {
                    mean: p.mean,
                    variance: p.var,
                }
            })
            .collect()
    }

    /// Log determinant of the MAP Gram-plus-noise matrix (diagnostics).
    pub fn log_det(&self) -> f64 {
        2.0 * self
            .map_model
            .chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|v| v.ln())
            .sum::<f64>()
    }
}

fn mixture(preds: impl Iterator<Item = Pred>) -> PredictionGrad {
    let preds: Vec<Pred> = preds.collect();
    let m = preds.len() as f64;
    let mean = preds.iter().map(|p| p.mean).sum::<f64>() / m;
    let second = preds.iter().map(|p| p.mean * p.mean).sum::<f64>() / m;
    let avg_var = preds.iter().map(|p| p.var).sum::<f64>() / m;
    let spread = if preds.len() > 1 { (second - mean * mean).max(0.0) } else { 0.0 };
    let variance = avg_var + spread;
    let d = preds[0].dmean.as_ref().map(|g| g.len()).unwrap_or(0);
    let mut dmean = DVector::zeros(d);
    let mut dvariance = DVector::zeros(d);
    if d > 0 {
        for p in &preds {
            let dm = p.dmean.as_ref().expect("gradient requested");
            let dv = p.dvar.as_ref().expect("gradient requested");
            dmean += dm / m;
            dvariance += dv / m;
            if preds.len() > 1 {
                dvariance += dm * (2.0 * p.mean / m);
            }
        }
        if preds.len() > 1 {
            dvariance -= &dmean * (2.0 * mean);
        }
    }
    PredictionGrad {
        prediction: GaussianPrediction { mean, variance },
        dmean,
        dvariance,
    }
}

fn initial_theta<R: Rng + ?Sized>(kind: KernelKind, d: usize, noise_floor: f64, rng: &mut R) -> DVector<f64> {
    let base = 1.0 / (d as f64).sqrt();
    let mut f = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            if a == b || kind.full_metric() {
                let e: f64 = rng.sample::<f64, _>(StandardNormal) * 0.1;
                f[(a, b)] = if a == b { base * e.exp() } else { e };
            }
        }
    }
    let p = GpParams {
        kernel: kind,
        metric_factor: f,
        signal_variance: 1.0,
        noise_variance: noise_floor + 1e-2,
        constant_mean: 0.0,
    };
    pack(&p, noise_floor)
}

/// Multi-restart MAP estimate of the hyperparameters. The returned fit has no
/// metric samples attached.
pub fn fit_map(inputs: &DMatrix<f64>, targets: &DVector<f64>, config: &GpConfig, seed: u64) -> Result<GpFit> {
    let d = inputs.ncols();
    check_data(inputs, targets, d)?;
    if targets.len() < 2 {
        return Err(Error::InvalidArgument("MAP fitting needs at least two observations".into()));
    }
    let kind = config.kernel;
    let st = Standardization::of(targets);
    let y_std = st.apply(targets);
    let mut rng = rng_from_seed(seed);
    let opts = LbfgsOptions {
        max_iter: config.max_iter,
        grad_tol: 1e-5,
        ..Default::default()
    };
    let mut best: Option<(f64, DVector<f64>)> = None;
    for _ in 0..config.restarts.max(1) {
        let theta0 = initial_theta(kind, d, config.noise_floor, &mut rng);
        let obj = |t: &DVector<f64>| neg_log_posterior(kind, inputs, &y_std, t, config.noise_floor);
        if let Some(m) = lbfgs_minimize(obj, theta0, &opts) {
            if best.as_ref().map_or(true, |(v, _)| m.value < *v) {
                best = Some((m.value, m.x));
            }
        }
    }
    let (_, theta) = best.ok_or_else(|| Error::Fit("every restart failed to evaluate".into()))?;
    let p_std = unpack(kind, d, &theta, config.noise_floor);
    let params = st.params_to_original(&p_std);
    let map_model = Conditional::build(kind, params.metric_factor.clone(), &params, inputs, targets)?;
    Ok(GpFit {
        map_params: params,
        laplace_samples: Vec::new(),
        training_inputs: inputs.clone(),
        training_targets: targets.clone(),
        standardization: st,
        noise_floor: config.noise_floor,
        map_model,
        sample_models: Vec::new(),
    })
}

/// Diagonal of the Hessian of the negative log posterior with respect to the
/// metric parameters, by central differences of the analytic gradient.
pub fn metric_hessian_diagonal(fit: &GpFit) -> Result<DVector<f64>> {
    let kind = fit.kernel();
    let d = fit.dim();
    let st = fit.standardization;
    let y_std = st.apply(&fit.training_targets);
    let theta = pack(&st.params_to_standard(&fit.map_params), fit.noise_floor);
    let np = kind.metric_param_count(d);
    let mut h = DVector::zeros(np);
    for i in 0..np {
        let step = 1e-4 * theta[i].abs().max(1.0);
        let mut tp = theta.clone();
        tp[i] += step;
        let mut tm = theta.clone();
        tm[i] -= step;
        let gp = neg_log_posterior(kind, &fit.training_inputs, &y_std, &tp, fit.noise_floor);
        let gm = neg_log_posterior(kind, &fit.training_inputs, &y_std, &tm, fit.noise_floor);
        h[i] = match (gp, gm) {
            (Some((_, a)), Some((_, b))) => (a[i] - b[i]) / (2.0 * step),
            _ => 0.0,
        };
    }
    Ok(h)
}

/// Draws metric matrices around `center` (packed metric parameters) with
/// independent Gaussian perturbations of the given variances.
pub fn sample_metrics<R: Rng + ?Sized>(
    kind: KernelKind,
    d: usize,
    center: &DVector<f64>,
    variances: &DVector<f64>,
    m: usize,
    rng: &mut R,
) -> Vec<DMatrix<f64>> {
    (0..m)
        .map(|_| {
            let v: Vec<f64> = center
                .iter()
                .zip(variances.iter())
                .map(|(c, s2)| c + s2.sqrt() * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let f = factor_from_vector(kind, d, &v);
            let g = f.transpose() * &f;
            (&g + g.transpose()) * 0.5
        })
        .collect()
}

/// Laplace approximation with a diagonal Hessian: `m` metric draws from
/// `N(theta_map, 1 / max(H_ii, 1e-8))`.
pub fn laplace_posterior_samples(fit: &GpFit, m: usize, seed: u64) -> Result<Vec<DMatrix<f64>>> {
    let kind = fit.kernel();
    let d = fit.dim();
    let h = metric_hessian_diagonal(fit)?;
    let variances = h.map(|v| 1.0 / v.max(1e-8));
    let center = metric_vector(kind, &fit.map_params.metric_factor);
    Ok(sample_metrics(kind, d, &center, &variances, m, &mut rng_from_seed(seed)))
}

/// MAP fit followed by Laplace sampling of the metric when configured.
pub fn fit_gp(inputs: &DMatrix<f64>, targets: &DVector<f64>, config: &GpConfig, seed: u64) -> Result<GpFit> {
    let fit = fit_map(inputs, targets, config, seed)?;
    if config.laplace_samples == 0 {
        return Ok(fit);
    }
    let gammas = laplace_posterior_samples(&fit, config.laplace_samples, seed.wrapping_add(0x5EED))?;
    fit.with_metric_samples(gammas)
}

/// Serializable snapshot of a fit (matrices row-major).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpFitRecord {
    pub kernel: KernelKind,
    pub dim: usize,
    pub metric_factor: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub constant_mean: f64,
    pub laplace_samples: Vec<Vec<f64>>,
    pub training_inputs: Vec<f64>,
    pub training_targets: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl GpFit {
    pub fn to_record(&self) -> GpFitRecord {
        GpFitRecord {
            kernel: self.kernel(),
            dim: self.dim(),
            metric_factor: row_major(&self.map_params.metric_factor),
            signal_variance: self.map_params.signal_variance,
            noise_variance: self.map_params.noise_variance,
            constant_mean: self.map_params.constant_mean,
            laplace_samples: self.laplace_samples.iter().map(row_major).collect(),
            training_inputs: row_major(&self.training_inputs),
            training_targets: self.training_targets.iter().cloned().collect(),
        }
    }

    pub fn from_record(r: &GpFitRecord) -> Result<Self> {
        let d = r.dim;
        let n = r.training_targets.len();
        if r.metric_factor.len() != d * d || r.training_inputs.len() != n * d {
            return Err(Error::Dimension("GP record matrices have the wrong size".into()));
        }
        let params = GpParams {
            kernel: r.kernel,
            metric_factor: DMatrix::from_row_slice(d, d, &r.metric_factor),
            signal_variance: r.signal_variance,
            noise_variance: r.noise_variance,
            constant_mean: r.constant_mean,
        };
        let fit = GpFit::from_params(
            params,
            DMatrix::from_row_slice(n, d, &r.training_inputs),
            DVector::from_vec(r.training_targets.clone()),
        )?;
        let gammas = r
            .laplace_samples
            .iter()
            .map(|g| {
                if g.len() != d * d {
                    Err(Error::Dimension("metric sample has the wrong size".into()))
                } else {
                    Ok(DMatrix::from_row_slice(d, d, g))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        fit.with_metric_samples(gammas)
    }
}
