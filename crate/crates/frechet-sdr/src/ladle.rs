//! Bootstrap ladle estimator of the structural dimension.
//!
//! The ladle combines eigenvector bootstrap variability `f_n` with the
//! normalized squared singular values `g_n` of the candidate matrix and
//! picks `d = argmin (f_n + g_n)` over `k = 0..r_p`. Bootstrap replicates
//! reuse the precomputed distance matrix through index lookups (resampled
//! duplicates get distance zero, exactly as if the metric were recomputed),
//! and each replicate draws from its own tagged substream, so the result is
//! bit-identical for a given seed at any parallelism degree.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::DistanceMatrix;
use crate::stream;
use crate::wire::{wire_core, PredictorMatrix};

/// Ladle output: the chosen dimension together with the three curves.
#[derive(Debug, Clone, PartialEq)]
pub struct LadleResult {
    pub d_hat: usize,
    /// Bootstrap eigenvector-variability curve, indices `0..=r_p`; `f_n[0] = 0`.
    pub f_n: Vec<f64>,
    /// Normalized squared singular values, indices `0..=r_p`.
    pub g_n: Vec<f64>,
    /// Elementwise `f_n + g_n`.
    pub objective: Vec<f64>,
    pub r_p: usize,
    pub n_boot: usize,
    /// Replicates that contributed; the difference from `n_boot` were
    /// skipped as degenerate after exhausting their retries.
    pub n_boot_completed: usize,
    pub seed: u64,
}

/// Search bound for the candidate dimension: `p - 1` when `p <= 10`, else
/// `floor(p / ln p)`.
pub fn ladle_rp(p: usize) -> usize {
    ladle_rp_with_log_base(p, std::f64::consts::E)
}

/// [`ladle_rp`] with a configurable logarithm base for sensitivity checks;
/// the bound is capped at `p - 1`.
pub fn ladle_rp_with_log_base(p: usize, base: f64) -> usize {
    assert!(p >= 2, "ladle needs p >= 2");
    if p <= 10 {
        p - 1
    } else {
        let r = (p as f64 / (p as f64).log(base)).floor() as usize;
        r.min(p - 1)
    }
}

/// Runs the ladle with the default search bound.
pub fn ladle_estimate(
    x: &PredictorMatrix,
    dist: &DistanceMatrix,
    n_boot: usize,
    seed: u64,
) -> Result<LadleResult> {
    if x.p() < 2 {
        return Err(Error::Parameter("ladle needs p >= 2".into()));
    }
    ladle_estimate_with_rp(x, dist, n_boot, seed, ladle_rp(x.p()))
}

/// Runs the ladle with an explicit search bound `r_p <= p - 1`.
pub fn ladle_estimate_with_rp(
    x: &PredictorMatrix,
    dist: &DistanceMatrix,
    n_boot: usize,
    seed: u64,
    r_p: usize,
) -> Result<LadleResult> {
    let n = x.n();
    let p = x.p();
    if n_boot < 1 {
        return Err(Error::Parameter("need at least one bootstrap replicate".into()));
    }
    if dist.n() != n {
        return Err(Error::Dimension(format!(
            "distance matrix has {} rows but predictors have {n}",
            dist.n()
        )));
    }
    if r_p < 1 || r_p > p - 1 {
        return Err(Error::Parameter(format!(
            "search bound must satisfy 1 <= r_p <= p-1, got r_p={r_p}, p={p}"
        )));
    }

    let full = wire_core(x, dist)?;
    // the bootstrap must support at least as many directions as the search
    // examines, capped by what the full sample itself supports
    let required_rank = full.sigma_rank.min(r_p + 1);

    let contributions: Vec<Option<Vec<f64>>> = (0..n_boot as u64)
        .into_par_iter()
        .map(|b| bootstrap_contribution(x, dist, &full.left_vectors, r_p, seed, b, required_rank))
        .collect();

    let mut f0 = vec![0.0_f64; r_p + 1];
    let mut completed = 0usize;
    for contribution in contributions.into_iter().flatten() {
        completed += 1;
        for (k, v) in contribution.into_iter().enumerate() {
            f0[k + 1] += v;
        }
    }
    if completed == 0 {
        return Err(Error::Numerical(
            "every bootstrap replicate was degenerate".into(),
        ));
    }
    for v in f0.iter_mut() {
        *v /= completed as f64;
    }

    let f0_sum: f64 = f0.iter().sum();
    let f_n: Vec<f64> = f0.iter().map(|&v| v / (1.0 + f0_sum)).collect();

    let lambda_sq: Vec<f64> = (0..=r_p)
        .map(|k| full.singular_values[k] * full.singular_values[k])
        .collect();
    let lambda_sum: f64 = lambda_sq.iter().sum();
    let g_n: Vec<f64> = lambda_sq.iter().map(|&v| v / (1.0 + lambda_sum)).collect();

    let objective: Vec<f64> = f_n.iter().zip(&g_n).map(|(a, b)| a + b).collect();
    let mut d_hat = 0usize;
    for (k, &v) in objective.iter().enumerate() {
        if v < objective[d_hat] {
            d_hat = k;
        }
    }

    Ok(LadleResult {
        d_hat,
        f_n,
        g_n,
        objective,
        r_p,
        n_boot,
        n_boot_completed: completed,
        seed,
    })
}

/// One bootstrap replicate: draws indices from the `(seed, b, retry)`
/// substream, refits, and returns `1 - |det(B_k^T B*_k)|` for `k = 1..=r_p`.
/// Degenerate covariance draws are retried up to 10 times, then skipped.
fn bootstrap_contribution(
    x: &PredictorMatrix,
    dist: &DistanceMatrix,
    full_vectors: &DMatrix<f64>,
    r_p: usize,
    seed: u64,
    b: u64,
    required_rank: usize,
) -> Option<Vec<f64>> {
    let n = x.n();
    for retry in 0..=10u64 {
        let mut rng = stream::substream(seed, &[stream::tag::LADLE_BOOT, b, retry]);
        let indices: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();

        let xb = DMatrix::from_fn(n, x.p(), |i, j| x.matrix()[(indices[i], j)]);
        let mut db = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = dist.get(indices[i], indices[j]);
                db[(i, j)] = v;
                db[(j, i)] = v;
            }
        }
        let xb = PredictorMatrix::new(xb).ok()?;
        let db = DistanceMatrix::new(db).ok()?;
        let core = match wire_core(&xb, &db) {
            Ok(core) => core,
            Err(_) => continue,
        };
        if core.sigma_rank < required_rank {
            continue;
        }

        // B_k^T B*_k is the leading k x k block of the full cross product
        let cross = full_vectors.transpose() * &core.left_vectors;
        let values: Vec<f64> = (1..=r_p)
            .map(|k| {
                let block = cross.view((0, 0), (k, k)).into_owned();
                (1.0 - linalg::det(&block).abs()).max(0.0)
            })
            .collect();
        return Some(values);
    }
    None
}
