//! Stationary kernels built on a quadratic form `q = r^T Gamma r`.
//!
//! Every kernel here is `sigma^2 * p(q)` for a radial profile `p`, where the
//! metric is either a full `Gamma = U^T U` (Mahalanobis) or a diagonal
//! `Gamma = diag(u^2)` (ARD). With lengthscales `l_k` the ARD metric is
//! `u_k = 1 / (sqrt(2) l_k)`, so the RBF profile `exp(-q)` is the usual ARD
//! RBF and the Matern profile uses the scaled distance `s = sqrt(2 q)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Full-metric RBF.
    Mahalanobis,
    ArdRbf,
    ArdMatern52,
}

impl KernelKind {
    pub fn full_metric(self) -> bool {
        matches!(self, KernelKind::Mahalanobis)
    }

    /// Number of free metric parameters in dimension `d`.
    pub fn metric_param_count(self, d: usize) -> usize {
        if self.full_metric() {
            d * (d + 1) / 2
        } else {
            d
        }
    }

    /// Unit-variance profile value at `q`.
    #[inline]
    pub fn profile(self, q: f64) -> f64 {
        match self {
            KernelKind::Mahalanobis | KernelKind::ArdRbf => (-q).exp(),
            KernelKind::ArdMatern52 => {
                let s = (2.0 * q.max(0.0)).sqrt();
                let r5 = 5f64.sqrt() * s;
                (1.0 + r5 + 5.0 / 3.0 * s * s) * (-r5).exp()
            }
        }
    }

    /// Derivative of the unit-variance profile with respect to `q`.
    #[inline]
    pub fn profile_deriv(self, q: f64) -> f64 {
        match self {
            KernelKind::Mahalanobis | KernelKind::ArdRbf => -(-q).exp(),
            KernelKind::ArdMatern52 => {
                let s = (2.0 * q.max(0.0)).sqrt();
                let r5 = 5f64.sqrt() * s;
                -5.0 / 3.0 * (1.0 + r5) * (-r5).exp()
            }
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mahalanobis" => Ok(KernelKind::Mahalanobis),
            "ard_rbf" | "rbf" => Ok(KernelKind::ArdRbf),
            "ard_matern52" | "matern52" | "matern" => Ok(KernelKind::ArdMatern52),
            other => Err(Error::InvalidArgument(format!("unknown kernel `{other}`"))),
        }
    }
}

fn quad_form(r: &DVector<f64>, gamma: &DMatrix<f64>) -> f64 {
    (gamma * r).dot(r)
}

/// `sigma2 * exp(-(y - y')^T Gamma (y - y'))`.
pub fn mahalanobis_kernel(
    y: &DVector<f64>,
    y2: &DVector<f64>,
    gamma: &DMatrix<f64>,
    sigma2: f64,
) -> Result<f64> {
    let d = y.len();
    if y2.len() != d || gamma.shape() != (d, d) {
        return Err(Error::Dimension(format!(
            "points of length {} and {} with a {}x{} metric",
            d,
            y2.len(),
            gamma.nrows(),
            gamma.ncols()
        )));
    }
    let r = y - y2;
    Ok(sigma2 * (-quad_form(&r, gamma)).exp())
}

fn check_lengthscales(z: &DVector<f64>, z2: &DVector<f64>, ls: &DVector<f64>) -> Result<()> {
    if z.len() != z2.len() || z.len() != ls.len() {
        return Err(Error::Dimension("ARD kernel inputs disagree in length".into()));
    }
    if let Some(bad) = ls.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "lengthscales must be positive, got {bad}"
        )));
    }
    Ok(())
}

/// `sigma2 * exp(-sum_k (z_k - z'_k)^2 / (2 l_k^2))`.
pub fn ard_rbf_kernel(
    z: &DVector<f64>,
    z2: &DVector<f64>,
    lengthscales: &DVector<f64>,
    sigma2: f64,
) -> Result<f64> {
    check_lengthscales(z, z2, lengthscales)?;
    let q: f64 = z
        .iter()
        .zip(z2.iter())
        .zip(lengthscales.iter())
        .map(|((a, b), l)| (a - b).powi(2) / (2.0 * l * l))
        .sum();
    Ok(sigma2 * (-q).exp())
}

/// ARD Matern-5/2 with `s = sqrt(sum_k (z_k - z'_k)^2 / l_k^2)`.
pub fn ard_matern52_kernel(
    z: &DVector<f64>,
    z2: &DVector<f64>,
    lengthscales: &DVector<f64>,
    sigma2: f64,
) -> Result<f64> {
    check_lengthscales(z, z2, lengthscales)?;
    let q: f64 = z
        .iter()
        .zip(z2.iter())
        .zip(lengthscales.iter())
        .map(|((a, b), l)| (a - b).powi(2) / (2.0 * l * l))
        .sum();
    Ok(sigma2 * KernelKind::ArdMatern52.profile(q))
}

/// Metric `Gamma = diag(1 / (2 l_k^2))` equivalent to ARD lengthscales.
pub fn ard_metric(lengthscales: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(&lengthscales.map(|l| 1.0 / (2.0 * l * l)))
}

/// ARD-RBF process on a `d`-dimensional true subspace `z = T x`.
#[derive(Debug, Clone)]
pub struct LatentArdParams {
    pub lengthscales: DVector<f64>,
    /// `d x D`.
    pub true_projection: DMatrix<f64>,
    pub signal_variance: f64,
}

impl LatentArdParams {
    /// Metric induced on an embedding whose up-projection is `up` (`D x d_e`):
    /// `Gamma = (T up)^T diag(1/(2 l^2)) (T up)`.
    pub fn implied_metric(&self, up: &DMatrix<f64>) -> DMatrix<f64> {
        let tb = &self.true_projection * up;
        let gamma = tb.transpose() * ard_metric(&self.lengthscales) * &tb;
        (&gamma + gamma.transpose()) * 0.5
    }

    /// Covariance of `f(up y)` and `f(up y')` computed in the true subspace.
    pub fn composed_covariance(
        &self,
        up: &DMatrix<f64>,
        y: &DVector<f64>,
        y2: &DVector<f64>,
    ) -> Result<f64> {
        let z = &self.true_projection * (up * y);
        let z2 = &self.true_projection * (up * y2);
        ard_rbf_kernel(&z, &z2, &self.lengthscales, self.signal_variance)
    }
}

/// Kernel matrix between row-sets `x1` (n1 x d) and `x2` (n2 x d) for a
/// metric factor `l` (`Gamma = l^T l`).
pub fn cross_kernel(
    kind: KernelKind,
    factor: &DMatrix<f64>,
    sigma2: f64,
    x1: &DMatrix<f64>,
    x2: &DMatrix<f64>,
) -> DMatrix<f64> {
    let z1 = x1 * factor.transpose();
    let z2 = x2 * factor.transpose();
    DMatrix::from_fn(z1.nrows(), z2.nrows(), |i, j| {
        let mut q = 0.0;
        for c in 0..z1.ncols() {
            let d = z1[(i, c)] - z2[(j, c)];
            q += d * d;
        }
        sigma2 * kind.profile(q)
    })
}
