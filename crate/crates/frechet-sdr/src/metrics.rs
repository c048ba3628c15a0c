//! Distance metrics on response objects.
//!
//! Responses are only ever consumed through their pairwise distance matrix,
//! so this module is the single place where the geometry of the response
//! space enters. Supported metrics: Euclidean, great-circle distance on the
//! unit sphere, 2-Wasserstein between one-dimensional location-scale
//! distributions, and the learned manifold metrics (Isomap, LLE).

mod isomap;
mod lle;

pub use isomap::isomap_distances;
pub use lle::lle_distances;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A collection of `n` response objects of a common kind.
#[derive(Debug, Clone)]
pub enum ResponseSet {
    /// Rows are points of a Euclidean space.
    EuclideanVectors(DMatrix<f64>),
    /// Rows are points of a unit sphere (unit Euclidean norm within 1e-9).
    SpherePoints(DMatrix<f64>),
    /// Each element is a distribution with quantile function
    /// `Q(tau) = mu + sigma * Phi^{-1}(tau)`, stored as `(mu, sigma)`.
    QuantileDistributions(Vec<(f64, f64)>),
}

impl ResponseSet {
    pub fn euclidean(rows: DMatrix<f64>) -> Result<Self> {
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite response entry".into()));
        }
        Ok(ResponseSet::EuclideanVectors(rows))
    }

    pub fn sphere(rows: DMatrix<f64>) -> Result<Self> {
        for (i, row) in rows.row_iter().enumerate() {
            let norm = row.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Validation(format!(
                    "sphere point {i} has norm {norm}, expected 1 within 1e-9"
                )));
            }
        }
        Ok(ResponseSet::SpherePoints(rows))
    }

    pub fn quantile(pairs: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(mu, sigma)) in pairs.iter().enumerate() {
            if !mu.is_finite() || !sigma.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite location-scale pair at index {i}"
                )));
            }
            if sigma < 0.0 {
                return Err(Error::Domain(format!(
                    "negative scale {sigma} at index {i}"
                )));
            }
        }
        Ok(ResponseSet::QuantileDistributions(pairs))
    }

    /// Number of response objects.
    pub fn len(&self) -> usize {
        match self {
            ResponseSet::EuclideanVectors(m) | ResponseSet::SpherePoints(m) => m.nrows(),
            ResponseSet::QuantileDistributions(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Symmetric nonnegative matrix of pairwise response distances with an
/// exactly zero diagonal; the only representation of the responses the
/// estimators ever consume.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
}

impl DistanceMatrix {
    /// Wraps a matrix that already satisfies the invariants exactly:
    /// bit-equal symmetry, zero diagonal, no negative or non-finite entries.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Dimension(format!(
                "distance matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let n = values.nrows();
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::Validation(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let v = values[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!(
                        "invalid distance {v} at ({i},{j})"
                    )));
                }
                if v != values[(j, i)] {
                    return Err(Error::Validation(format!(
                        "asymmetric entries at ({i},{j})"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { values })
    }

    /// Accepts a matrix that satisfies the invariants within 1e-9, then
    /// repairs it exactly: symmetrize by `(D + D^T)/2`, zero the diagonal,
    /// and clamp rounding-level negatives to zero.
    pub fn from_noisy(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Dimension(format!(
                "distance matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let tol = 1e-9;
        let n = values.nrows();
        for i in 0..n {
            if values[(i, i)].abs() > tol {
                return Err(Error::Validation(format!(
                    "diagonal entry {} at {i} exceeds tolerance",
                    values[(i, i)]
                )));
            }
            for j in 0..n {
                let v = values[(i, j)];
                if !v.is_finite() || v < -tol {
                    return Err(Error::Validation(format!(
                        "invalid distance {v} at ({i},{j})"
                    )));
                }
                if (v - values[(j, i)]).abs() > tol {
                    return Err(Error::Validation(format!(
                        "asymmetry beyond tolerance at ({i},{j})"
                    )));
                }
            }
        }
        let mut fixed = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = ((values[(i, j)] + values[(j, i)]) / 2.0).max(0.0);
                fixed[(i, j)] = v;
                fixed[(j, i)] = v;
            }
        }
        Ok(DistanceMatrix { values: fixed })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }
}

/// Which metric to apply to a response set.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    Euclidean,
    GeodesicSphere,
    Wasserstein,
    /// The distance matrix is supplied externally rather than computed.
    Precomputed,
    Isomap {
        k: usize,
    },
    Lle {
        k: usize,
        m: usize,
        reg: f64,
    },
}

impl MetricSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MetricSpec::Isomap { k } if k < 1 => {
                Err(Error::Parameter("isomap neighbor count must be >= 1".into()))
            }
            MetricSpec::Lle { k, m, reg } => {
                if k < 1 {
                    Err(Error::Parameter("lle neighbor count must be >= 1".into()))
                } else if m < 1 {
                    Err(Error::Parameter("lle embedding dimension must be >= 1".into()))
                } else if reg <= 0.0 {
                    Err(Error::Parameter("lle regularizer must be > 0".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Euclidean distance between two vectors of equal length.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "vector lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Great-circle distance `arccos(a . b)` between two unit vectors, with the
/// inner product clamped to [-1, 1] so rounding never produces NaN.
pub fn geodesic_sphere_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "vector lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    for (name, v) in [("first", a), ("second", b)] {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!(
                "{name} argument has norm {norm}, expected a unit vector"
            )));
        }
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0).acos())
}

/// 2-Wasserstein distance between two location-scale distributions sharing
/// the standard-normal quantile base: `sqrt((mu1-mu2)^2 + (sigma1-sigma2)^2)`.
pub fn wasserstein_location_scale(p: (f64, f64), q: (f64, f64)) -> Result<f64> {
    if p.1 < 0.0 || q.1 < 0.0 {
        return Err(Error::Domain(format!(
            "negative scale parameter: {} / {}",
            p.1, q.1
        )));
    }
    let dmu = p.0 - q.0;
    let dsig = p.1 - q.1;
    Ok((dmu * dmu + dsig * dsig).sqrt())
}

/// 2-Wasserstein distance between two distributions given by quantile values
/// on the midpoint grid `tau_i = (i - 0.5)/m`: `sqrt(mean((Qp - Qq)^2))`.
pub fn wasserstein_quantile_grid(qp: &[f64], qq: &[f64]) -> Result<f64> {
    if qp.len() != qq.len() {
        return Err(Error::Dimension(format!(
            "quantile grids differ in length: {} vs {}",
            qp.len(),
            qq.len()
        )));
    }
    let m = qp.len();
    if m < 2 {
        return Err(Error::Validation("quantile grid needs at least 2 nodes".into()));
    }
    for (name, q) in [("first", qp), ("second", qq)] {
        if q.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Validation(format!(
                "{name} quantile sequence is decreasing"
            )));
        }
    }
    let sum: f64 = qp.iter().zip(qq).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sum / m as f64).sqrt())
}

/// Pairwise distance matrix for a response set under the given metric.
///
/// Only the upper triangle is computed; the lower is mirrored, so the output
/// is bit-exactly symmetric with an exactly zero diagonal.
pub fn pairwise_distance_matrix(ys: &ResponseSet, spec: &MetricSpec) -> Result<DistanceMatrix> {
    spec.validate()?;
    match (spec, ys) {
        (MetricSpec::Precomputed, _) => Err(Error::Config(
            "precomputed metric needs an externally supplied matrix; load it instead".into(),
        )),
        (MetricSpec::Euclidean, ResponseSet::EuclideanVectors(m))
        | (MetricSpec::Euclidean, ResponseSet::SpherePoints(m)) => {
            let rows = rows_of(m);
            build_pairwise(rows.len(), |i, j| euclidean_distance(&rows[i], &rows[j]))
        }
        (MetricSpec::GeodesicSphere, ResponseSet::SpherePoints(m)) => {
            let rows = rows_of(m);
            build_pairwise(rows.len(), |i, j| {
                geodesic_sphere_distance(&rows[i], &rows[j])
            })
        }
        (MetricSpec::Wasserstein, ResponseSet::QuantileDistributions(pairs)) => {
            build_pairwise(pairs.len(), |i, j| {
                wasserstein_location_scale(pairs[i], pairs[j])
            })
        }
        (MetricSpec::Isomap { k }, ResponseSet::EuclideanVectors(m))
        | (MetricSpec::Isomap { k }, ResponseSet::SpherePoints(m)) => isomap_distances(m, *k),
        (MetricSpec::Lle { k, m: dim, reg }, ResponseSet::EuclideanVectors(m))
        | (MetricSpec::Lle { k, m: dim, reg }, ResponseSet::SpherePoints(m)) => {
            lle_distances(m, *k, *dim, *reg)
        }
        (spec, ys) => Err(Error::Config(format!(
            "metric {spec:?} cannot be applied to {} responses",
            match ys {
                ResponseSet::EuclideanVectors(_) => "euclidean-vector",
                ResponseSet::SpherePoints(_) => "sphere-point",
                ResponseSet::QuantileDistributions(_) => "quantile-distribution",
            }
        ))),
    }
}

/// Copies matrix rows out as plain vectors for slice-based metric calls.
pub(crate) fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().cloned().collect())
        .collect()
}

fn build_pairwise<F>(n: usize, f: F) -> Result<DistanceMatrix>
where
    F: Fn(usize, usize) -> Result<f64>,
{
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = f(i, j)?;
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    DistanceMatrix::new(d)
}

/// Full Euclidean pairwise matrix of the rows of `m`, used by the manifold
/// metrics; exactly symmetric by construction.
pub(crate) fn euclidean_pairwise(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for c in 0..m.ncols() {
                let diff = m[(i, c)] - m[(j, c)];
                s += diff * diff;
            }
            let v = s.sqrt();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Indices of the `k` nearest neighbors of each point (self excluded),
/// ordered by distance with index ties broken low-first.
pub(crate) fn knn_indices(dist: &DMatrix<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = dist.nrows();
    (0..n)
        .map(|i| {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| {
                dist[(i, a)]
                    .partial_cmp(&dist[(i, b)])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            order.truncate(k);
            order
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn euclidean_pythagorean() {
        assert_relative_eq!(
            euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(),
            5.0
        );
        assert_eq!(euclidean_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(euclidean_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn euclidean_matches_componentwise_oracle() {
        let mut rng = crate::stream::substream(11, &[]);
        use rand::Rng;
        for _ in 0..20 {
            let a: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut acc = 0.0;
            for i in 0..10 {
                acc += (a[i] - b[i]).powi(2);
            }
            assert_relative_eq!(
                euclidean_distance(&a, &b).unwrap(),
                acc.sqrt(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn geodesic_reference_points() {
        assert_eq!(geodesic_sphere_distance(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(
            geodesic_sphere_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            std::f64::consts::FRAC_PI_2
        );
        assert_relative_eq!(
            geodesic_sphere_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(),
            std::f64::consts::PI
        );
        assert!(geodesic_sphere_distance(&[2.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn geodesic_clamps_rounding_overshoot() {
        // unit vector built so the self inner product exceeds 1 by rounding
        let v = [0.6_f64, 0.8_f64 + 1e-9];
        let d = geodesic_sphere_distance(&v, &v).unwrap();
        assert!(d.is_finite() && d >= 0.0);
    }

    #[test]
    fn wasserstein_closed_form() {
        assert_eq!(wasserstein_location_scale((0.0, 1.0), (0.0, 1.0)).unwrap(), 0.0);
        assert_relative_eq!(
            wasserstein_location_scale((1.0, 1.0), (0.0, 1.0)).unwrap(),
            1.0
        );
        assert_relative_eq!(
            wasserstein_location_scale((3.0, 2.0), (0.0, 1.0)).unwrap(),
            10.0_f64.sqrt()
        );
        assert!(wasserstein_location_scale((0.0, -0.1), (0.0, 1.0)).is_err());
    }

    #[test]
    fn quantile_grid_reference_cases() {
        let q: Vec<f64> = (0..100).map(|i| i as f64 / 10.0).collect();
        assert_eq!(wasserstein_quantile_grid(&q, &q).unwrap(), 0.0);
        let shifted: Vec<f64> = q.iter().map(|v| v - 2.5).collect();
        assert_relative_eq!(
            wasserstein_quantile_grid(&q, &shifted).unwrap(),
            2.5,
            epsilon = 1e-12
        );
        let mut bad = q.clone();
        bad[3] = -1.0;
        assert!(wasserstein_quantile_grid(&q, &bad).is_err());
        assert!(wasserstein_quantile_grid(&q, &q[..50]).is_err());
    }

    // The closed form against midpoint-grid integration of the quantile
    // difference; the independent oracle for wasserstein_location_scale.
    #[test]
    fn closed_form_agrees_with_quantile_integration() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let normal = Normal::new(0.0, 1.0).unwrap();
        let m = 10_000;
        let grid = |mu: f64, sigma: f64| -> Vec<f64> {
            (0..m)
                .map(|i| {
                    let tau = (i as f64 + 0.5) / m as f64;
                    mu + sigma * normal.inverse_cdf(tau)
                })
                .collect()
        };
        let exact = wasserstein_location_scale((3.0, 2.0), (0.0, 1.0)).unwrap();
        let numeric = wasserstein_quantile_grid(&grid(3.0, 2.0), &grid(0.0, 1.0)).unwrap();
        assert!((exact - numeric).abs() <= 1e-3, "{exact} vs {numeric}");

        let mut rng = crate::stream::substream(5, &[]);
        use rand::Rng;
        for _ in 0..100 {
            let (mu1, s1) = (rng.random_range(-2.0..2.0), rng.random_range(0.1..3.0));
            let (mu2, s2) = (rng.random_range(-2.0..2.0), rng.random_range(0.1..3.0));
            let exact = wasserstein_location_scale((mu1, s1), (mu2, s2)).unwrap();
            let numeric =
                wasserstein_quantile_grid(&grid(mu1, s1), &grid(mu2, s2)).unwrap();
            assert!((exact - numeric).abs() <= 1e-3, "{exact} vs {numeric}");
        }
    }

    #[test]
    fn pairwise_single_point() {
        let ys = ResponseSet::euclidean(DMatrix::from_row_slice(1, 2, &[1.0, 2.0])).unwrap();
        let d = pairwise_distance_matrix(&ys, &MetricSpec::Euclidean).unwrap();
        assert_eq!(d.n(), 1);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn pairwise_matches_scalar_calls() {
        let m = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 3.0, 4.0, 1.0, 1.0, -2.0, 0.5]);
        let rows = rows_of(&m);
        let ys = ResponseSet::euclidean(m.clone()).unwrap();
        let d = pairwise_distance_matrix(&ys, &MetricSpec::Euclidean).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j {
                    0.0
                } else {
                    euclidean_distance(&rows[i], &rows[j]).unwrap()
                };
                assert_eq!(d.get(i, j), expect);
            }
        }
        assert_eq!(d.get(0, 1), 5.0);
    }

    #[test]
    fn pairwise_rejects_incompatible_spec() {
        let ys = ResponseSet::euclidean(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]))
            .unwrap();
        assert!(matches!(
            pairwise_distance_matrix(&ys, &MetricSpec::Wasserstein),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            pairwise_distance_matrix(&ys, &MetricSpec::Precomputed),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn distance_matrix_from_noisy_repairs() {
        let raw = DMatrix::from_row_slice(
            2,
            2,
            &[1e-10, 2.0 + 1e-10, 2.0 - 1e-10, -1e-10],
        );
        let d = DistanceMatrix::from_noisy(raw).unwrap();
        assert_eq!(d.get(0, 0), 0.0);
        assert_eq!(d.get(0, 1), d.get(1, 0));
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(DistanceMatrix::from_noisy(bad).is_err());
    }

    proptest! {
        // Exact symmetry and zero diagonal for every metric kind on random data.
        #[test]
        fn pairwise_exactly_symmetric(seed in 0u64..200) {
            let mut rng = crate::stream::substream(seed, &[99]);
            use rand::Rng;
            let n = rng.random_range(2..12usize);
            let q = rng.random_range(2..5usize);
            let rows = DMatrix::from_fn(n, q, |_, _| rng.random_range(-2.0..2.0));
            let specs: Vec<(ResponseSet, MetricSpec)> = vec![
                (ResponseSet::euclidean(rows.clone()).unwrap(), MetricSpec::Euclidean),
                ({
                    let mut s = rows.clone();
                    for mut r in s.row_iter_mut() {
                        let norm = r.norm();
                        if norm > 0.0 { r /= norm; }
                    }
                    ResponseSet::sphere(s).unwrap()
                }, MetricSpec::GeodesicSphere),
                (ResponseSet::quantile(
                    (0..n).map(|_| (rng.random_range(-2.0..2.0), rng.random_range(0.0..2.0))).collect(),
                ).unwrap(), MetricSpec::Wasserstein),
            ];
            for (ys, spec) in specs {
                let d = pairwise_distance_matrix(&ys, &spec).unwrap();
                for i in 0..n {
                    prop_assert_eq!(d.get(i, i), 0.0);
                    for j in 0..n {
                        prop_assert_eq!(d.get(i, j), d.get(j, i));
                        prop_assert!(d.get(i, j) >= 0.0);
                    }
                }
            }
        }

        #[test]
        fn wasserstein_grid_location_shift(c in -5.0f64..5.0) {
            let q: Vec<f64> = (0..64).map(|i| (i as f64).sqrt()).collect();
            let shifted: Vec<f64> = q.iter().map(|v| v + c).collect();
            let d = wasserstein_quantile_grid(&q, &shifted).unwrap();
            prop_assert!((d - c.abs()).abs() < 1e-12);
        }
    }
}
