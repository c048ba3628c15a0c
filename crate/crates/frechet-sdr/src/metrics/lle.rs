//! Distances in a locally-linear-embedding coordinate system.
//!
//! Reconstruction weights are solved per point over its k Euclidean nearest
//! neighbors with the local Gram regularized by `reg * trace` on the
//! diagonal and constrained to sum to one. The embedding takes the
//! eigenvectors of `M = (I - W)^T (I - W)` belonging to the m smallest
//! nonzero eigenvalues (the constant eigenvector is dropped), scaled by
//! sqrt(n), and the returned matrix holds pairwise Euclidean distances of
//! the embedded points.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::{euclidean_pairwise, knn_indices, DistanceMatrix};

pub fn lle_distances(y: &DMatrix<f64>, k: usize, m: usize, reg: f64) -> Result<DistanceMatrix> {
    let n = y.nrows();
    if k < 1 || k >= n {
        return Err(Error::Parameter(format!(
            "lle needs 1 <= k < n, got k={k} with n={n}"
        )));
    }
    if m < 1 || m >= n {
        return Err(Error::Parameter(format!(
            "lle needs 1 <= m < n, got m={m} with n={n}"
        )));
    }
    if reg <= 0.0 {
        return Err(Error::Parameter("lle regularizer must be > 0".into()));
    }

    let euclid = euclidean_pairwise(y);
    let neighbors = knn_indices(&euclid, k);
    let weights: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| reconstruction_weights(y, i, &neighbors[i], reg))
        .collect();

    // T = I - W, rows of W are sparse over the neighbor sets
    let mut t = DMatrix::identity(n, n);
    for (i, w) in weights.into_iter().enumerate() {
        let w = w?;
        for (&j, &wj) in neighbors[i].iter().zip(&w) {
            t[(i, j)] -= wj;
        }
    }
    let mut cost = t.transpose() * &t;
    linalg::mirror_upper(&mut cost);

    let (values, vectors) = linalg::sym_eigen_desc(&cost);
    // ascending order; drop numerically-zero eigenvalues (the constant
    // eigenvector, plus one per extra graph component)
    let max_val = values[0].max(0.0);
    let zero_cut = 1e-12 * max_val.max(1.0);
    let ascending: Vec<usize> = (0..n).rev().collect();
    let kept: Vec<usize> = ascending
        .into_iter()
        .filter(|&idx| values[idx] > zero_cut)
        .take(m)
        .collect();
    if kept.len() < m {
        return Err(Error::Numerical(format!(
            "lle found only {} nonzero eigenvalues, need {m}",
            kept.len()
        )));
    }
    let scale = (n as f64).sqrt();
    let embedding = DMatrix::from_fn(n, m, |r, c| vectors[(r, kept[c])] * scale);
    DistanceMatrix::new(exact_pairwise(&embedding))
}

fn reconstruction_weights(
    y: &DMatrix<f64>,
    i: usize,
    neighbors: &[usize],
    reg: f64,
) -> Result<Vec<f64>> {
    let k = neighbors.len();
    // local Gram of neighbor offsets
    let mut gram = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let mut s = 0.0;
            for c in 0..y.ncols() {
                s += (y[(neighbors[a], c)] - y[(i, c)]) * (y[(neighbors[b], c)] - y[(i, c)]);
            }
            gram[(a, b)] = s;
            gram[(b, a)] = s;
        }
    }
    let trace = gram.trace();
    if !trace.is_finite() || trace <= 0.0 {
        return Err(Error::Numerical(format!(
            "degenerate local Gram at point {i}: all neighbors coincide with it"
        )));
    }
    for a in 0..k {
        gram[(a, a)] += reg * trace;
    }
    let chol = Cholesky::new(gram).ok_or_else(|| {
        Error::Numerical(format!("local Gram at point {i} is not positive definite"))
    })?;
    let w = chol.solve(&DVector::from_element(k, 1.0));
    let total: f64 = w.sum();
    if !total.is_finite() || total.abs() < 1e-300 {
        return Err(Error::Numerical(format!(
            "reconstruction weights at point {i} do not normalize"
        )));
    }
    Ok(w.iter().map(|v| v / total).collect())
}

fn exact_pairwise(m: &DMatrix<f64>) -> DMatrix<f64> {
    euclidean_pairwise(m)
}
