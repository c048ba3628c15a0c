//! Evaluation statistics: trace correlation between estimated and reference
//! subspaces, and the squared distance correlation between two samples.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::linalg;

/// Which statistic an [`EvalReport`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalStatistic {
    TraceCorrelation,
    DcorSquared,
}

/// A named evaluation result in [0, 1].
#[derive(Debug, Clone, Copy)]
pub struct EvalReport {
    pub statistic: EvalStatistic,
    pub value: f64,
}

/// Subspace-recovery accuracy `tr(P_true P_hat) / d` with projections built
/// from the Gram-inverse formula `P = B (B^T B)^{-1} B^T`.
///
/// Both inputs must have full column rank. The column counts may differ (the
/// reference span of a model can be wider than the fitted dimension);
/// normalization uses the smaller count so the statistic stays in [0, 1].
pub fn trace_correlation(b_true: &DMatrix<f64>, b_hat: &DMatrix<f64>) -> Result<f64> {
    if b_true.nrows() != b_hat.nrows() {
        return Err(Error::Dimension(format!(
            "bases live in different spaces: {} vs {} rows",
            b_true.nrows(),
            b_hat.nrows()
        )));
    }
    let p_true = projection(b_true)?;
    let p_hat = projection(b_hat)?;
    let d = b_true.ncols().min(b_hat.ncols()) as f64;
    let trace = (&p_true * &p_hat).trace();
    Ok(trace / d)
}

fn projection(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if b.ncols() == 0 || b.ncols() > b.nrows() {
        return Err(Error::Validation(format!(
            "basis must be a tall nonempty matrix, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    let gram = b.transpose() * b;
    // column-rank deficiency shows up as a failed (or wildly scaled) factorization
    let (evals, _) = linalg::sym_eigen_desc(&gram);
    let min = evals[evals.len() - 1];
    if !(min > 1e-12 * evals[0].max(f64::MIN_POSITIVE)) {
        return Err(Error::Validation(
            "basis is rank deficient; cannot form its projection".into(),
        ));
    }
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::Validation("basis Gram matrix is not positive definite".into()))?;
    let solved = chol.solve(&b.transpose());
    Ok(b * solved)
}

/// Squared distance correlation between two samples with matching row
/// counts, in its V-statistic (double-centered) form.
pub fn distance_correlation_sq(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64> {
    if u.nrows() != v.nrows() {
        return Err(Error::Dimension(format!(
            "samples differ in size: {} vs {} rows",
            u.nrows(),
            v.nrows()
        )));
    }
    let n = u.nrows();
    if n < 2 {
        return Err(Error::Validation(
            "distance correlation needs at least 2 observations".into(),
        ));
    }
    let a = double_centered_distances(u);
    let b = double_centered_distances(v);
    let n2 = (n * n) as f64;
    let mut cov = 0.0;
    let mut var_u = 0.0;
    let mut var_v = 0.0;
    for i in 0..n {
        for j in 0..n {
            cov += a[(i, j)] * b[(i, j)];
            var_u += a[(i, j)] * a[(i, j)];
            var_v += b[(i, j)] * b[(i, j)];
        }
    }
    cov /= n2;
    var_u /= n2;
    var_v /= n2;
    if var_u <= 0.0 {
        return Err(Error::Validation(
            "first sample has zero distance variance (constant input)".into(),
        ));
    }
    if var_v <= 0.0 {
        return Err(Error::Validation(
            "second sample has zero distance variance (constant input)".into(),
        ));
    }
    let rho2 = cov / (var_u * var_v).sqrt();
    if rho2 < 0.0 {
        if rho2 >= -1e-12 {
            return Ok(0.0);
        }
        return Err(Error::Numerical(format!(
            "distance correlation produced {rho2}, beyond rounding tolerance"
        )));
    }
    // Cauchy-Schwarz caps the exact value at 1; trim rounding overshoot.
    Ok(rho2.min(1.0))
}

fn double_centered_distances(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut d = crate::metrics::euclidean_pairwise(m);
    let row_means: Vec<f64> = (0..n).map(|i| d.row(i).sum() / n as f64).collect();
    let grand = d.sum() / (n * n) as f64;
    for i in 0..n {
        for j in 0..n {
            d[(i, j)] = d[(i, j)] - row_means[i] - row_means[j] + grand;
        }
    }
    d
}

/// Principal angles (radians, ascending) between the column spans of two
/// bases with orthonormalized columns.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension("bases live in different spaces".into()));
    }
    let qa = orthonormal_columns(a)?;
    let qb = orthonormal_columns(b)?;
    let cross = qa.transpose() * qb;
    let (_, sigma) = linalg::svd_desc(&cross)?;
    Ok(sigma.iter().map(|&s| s.clamp(-1.0, 1.0).acos()).collect())
}

fn orthonormal_columns(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let qr = m.clone().qr();
    let q = qr.q();
    let r = qr.r();
    for i in 0..r.nrows().min(r.ncols()) {
        if r[(i, i)].abs() < 1e-12 {
            return Err(Error::Validation("basis is rank deficient".into()));
        }
    }
    Ok(q)
}
