//! Weighted inverse regression ensemble: linear sufficient dimension
//! reduction for metric-space responses.
//!
//! The estimator needs only the predictor matrix and the pairwise response
//! distances. The candidate matrix is the U-statistic
//!
//! ```text
//! Lambda_hat = - sum_{i != j} (X_i - mu)(X_j - mu)^T d(Y_i, Y_j) / (n (n-1))
//! ```
//!
//! and the fitted basis consists of the top left singular vectors of
//! `M_hat = Sigma_hat^+ Lambda_hat`, where `Sigma_hat` uses the 1/n divisor
//! and `+` is the eigenvalue-thresholded pseudo-inverse (plain inversion is
//! unstable on near-constant predictor columns such as border pixels).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::DistanceMatrix;

/// Relative eigenvalue cutoff for the pseudo-inverse of `Sigma_hat`.
const SIGMA_EIG_CUTOFF: f64 = 1e-10;

/// Predictor observations, one row per case.
#[derive(Debug, Clone)]
pub struct PredictorMatrix {
    x: DMatrix<f64>,
}

impl PredictorMatrix {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 observations, got {}",
                x.nrows()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::Validation("predictor matrix has no columns".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite predictor entry".into()));
        }
        Ok(PredictorMatrix { x })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }
}

/// The U-statistic candidate matrix; exactly symmetric.
#[derive(Debug, Clone)]
pub struct WireLambda {
    pub lambda: DMatrix<f64>,
}

/// A fitted linear reduction.
#[derive(Debug, Clone)]
pub struct SubspaceEstimate {
    /// `p x d` basis with orthonormal columns (all-zero when the candidate
    /// matrix vanishes identically; see `warnings`).
    pub basis: DMatrix<f64>,
    /// All `p` singular values of `M_hat`, nonincreasing.
    pub singular_values: DVector<f64>,
    /// Structural dimension used for the fit.
    pub d: usize,
    pub m_hat: DMatrix<f64>,
    pub sigma_hat: DMatrix<f64>,
    pub mu_hat: DVector<f64>,
    /// Non-fatal conditions observed during the fit (rank deficiency,
    /// vanishing candidate matrix).
    pub warnings: Vec<String>,
}

/// U-statistic estimate of the candidate matrix, computed through the
/// identity `-C^T D C / (n(n-1))` with `C` the column-centered predictors;
/// the diagonal of `D` is zero so no i = j exclusion pass is needed.
pub fn wire_lambda(x: &PredictorMatrix, d: &DistanceMatrix) -> Result<WireLambda> {
    if d.n() != x.n() {
        return Err(Error::Dimension(format!(
            "distance matrix has {} rows but predictors have {}",
            d.n(),
            x.n()
        )));
    }
    let n = x.n() as f64;
    let (c, _) = linalg::center_columns(x.matrix());
    let dc = d.values() * &c;
    let mut lambda = c.transpose() * dc;
    lambda.scale_mut(-1.0 / (n * (n - 1.0)));
    let sym = 0.5 * (&lambda + lambda.transpose());
    Ok(WireLambda { lambda: sym })
}

/// Fits the linear reduction of dimension `d`.
pub fn wire_fit(x: &PredictorMatrix, dist: &DistanceMatrix, d: usize) -> Result<SubspaceEstimate> {
    let p = x.p();
    if d < 1 || d > p {
        return Err(Error::Parameter(format!(
            "structural dimension must satisfy 1 <= d <= p, got d={d}, p={p}"
        )));
    }
    let core = wire_core(x, dist)?;
    finish_fit(core, d)
}

/// Shared internals between [`wire_fit`] and the ladle bootstrap: centering,
/// covariance pseudo-inverse, candidate matrix, and the SVD of `M_hat`.
pub(crate) struct WireCore {
    pub m_hat: DMatrix<f64>,
    pub sigma_hat: DMatrix<f64>,
    pub mu_hat: DVector<f64>,
    /// Left singular vectors of `M_hat`, all `p`, sign-fixed.
    pub left_vectors: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub sigma_rank: usize,
    pub lambda_is_zero: bool,
}

pub(crate) fn wire_core(x: &PredictorMatrix, dist: &DistanceMatrix) -> Result<WireCore> {
    let lambda = wire_lambda(x, dist)?.lambda;
    let n = x.n() as f64;
    let (c, mu_hat) = linalg::center_columns(x.matrix());
    let mut sigma_hat = c.transpose() * &c;
    sigma_hat.scale_mut(1.0 / n);
    linalg::mirror_upper(&mut sigma_hat);

    let inv = linalg::pinv_psd(&sigma_hat, SIGMA_EIG_CUTOFF);
    let m_hat = &inv.pinv * &lambda;
    let lambda_is_zero = lambda.iter().all(|&v| v == 0.0);
    let (mut left_vectors, singular_values) = linalg::svd_desc(&m_hat)?;
    linalg::fix_column_signs(&mut left_vectors);
    Ok(WireCore {
        m_hat,
        sigma_hat,
        mu_hat,
        left_vectors,
        singular_values,
        sigma_rank: inv.rank,
        lambda_is_zero,
    })
}

fn finish_fit(core: WireCore, d: usize) -> Result<SubspaceEstimate> {
    let p = core.m_hat.nrows();
    let mut warnings = Vec::new();
    if core.sigma_rank < d {
        warnings.push(format!(
            "predictor covariance has numerical rank {} < d = {d}; fit uses its pseudo-inverse",
            core.sigma_rank
        ));
    }
    let basis = if core.lambda_is_zero {
        warnings.push(
            "candidate matrix is identically zero; returning a zero basis".to_string(),
        );
        DMatrix::zeros(p, d)
    } else {
        core.left_vectors.columns(0, d).into_owned()
    };
    Ok(SubspaceEstimate {
        basis,
        singular_values: core.singular_values,
        d,
        m_hat: core.m_hat,
        sigma_hat: core.sigma_hat,
        mu_hat: core.mu_hat,
        warnings,
    })
}

/// Reduced predictors `X * basis`; row i holds the fitted coordinates of
/// observation i.
pub fn sufficient_predictors(
    x: &PredictorMatrix,
    fit: &SubspaceEstimate,
) -> Result<DMatrix<f64>> {
    if x.p() != fit.basis.nrows() {
        return Err(Error::Dimension(format!(
            "predictors have {} columns but the basis expects {}",
            x.p(),
            fit.basis.nrows()
        )));
    }
    Ok(x.matrix() * &fit.basis)
}
