//! Decomposition wrappers with deterministic ordering and sign conventions.
//!
//! nalgebra does not promise an eigenvalue order, so everything spectral is
//! funneled through the sorted helpers here.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Column means of an `n x p` matrix.
pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows() as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

/// Subtracts the column mean from every entry; returns the centered matrix
/// and the mean vector.
pub fn center_columns(x: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let means = column_means(x);
    let mut c = x.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    (c, means)
}

/// Symmetric eigendecomposition sorted by descending eigenvalue.
pub fn sym_eigen_desc(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = a.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Moore-Penrose inverse of a symmetric PSD matrix, inverting eigenvalues
/// above `rel_cutoff * max_eigenvalue` and zeroing the rest.
pub struct PsdInverse {
    pub pinv: DMatrix<f64>,
    pub rank: usize,
    pub max_eigenvalue: f64,
}

pub fn pinv_psd(a: &DMatrix<f64>, rel_cutoff: f64) -> PsdInverse {
    let (values, vectors) = sym_eigen_desc(a);
    let max_eigenvalue = values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = rel_cutoff * max_eigenvalue;
    let inv: Vec<f64> = values
        .iter()
        .map(|&v| if v > cutoff && v > 0.0 { 1.0 / v } else { 0.0 })
        .collect();
    let rank = inv.iter().filter(|&&w| w != 0.0).count();
    let p = a.nrows();
    let mut pinv = DMatrix::zeros(p, p);
    for (j, col) in vectors.column_iter().enumerate() {
        if inv[j] != 0.0 {
            for r in 0..p {
                let w = inv[j] * col[r];
                for c in r..p {
                    pinv[(r, c)] += w * col[c];
                }
            }
        }
    }
    mirror_upper(&mut pinv);
    PsdInverse {
        pinv,
        rank,
        max_eigenvalue,
    }
}

/// Singular value decomposition with singular values sorted descending and
/// the corresponding left singular vectors; ties keep the original order.
pub fn svd_desc(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let svd = m.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not produce left singular vectors".into()))?;
    let s = svd.singular_values;
    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        s[j].partial_cmp(&s[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = DVector::from_iterator(k, order.iter().map(|&i| s[i]));
    let mut left = DMatrix::zeros(u.nrows(), k);
    for (dst, &src) in order.iter().enumerate() {
        left.set_column(dst, &u.column(src));
    }
    Ok((left, values))
}

/// Makes the entry of largest absolute value in each column positive,
/// breaking ties toward the lowest row index. Zero columns are untouched.
pub fn fix_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0.0_f64;
        let mut best_val = 0.0_f64;
        for &v in col.iter() {
            if v.abs() > best {
                best = v.abs();
                best_val = v;
            }
        }
        if best_val < 0.0 {
            col.neg_mut();
        }
    }
}

/// Determinant via LU with partial pivoting.
pub fn det(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

/// Copies the strict upper triangle onto the lower one, making the matrix
/// bit-exactly symmetric.
pub fn mirror_upper(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            m[(j, i)] = m[(i, j)];
        }
    }
}

/// `f * f^T` assembled one upper-triangle dot product at a time, then
/// mirrored, so the result is symmetric by construction.
pub fn gram_of_rows(f: &DMatrix<f64>) -> DMatrix<f64> {
    let n = f.nrows();
    let ft = f.transpose(); // column j = row j of f; column-major access is faster
    let cols: Vec<_> = (0..n).map(|j| ft.column(j)).collect();
    let entries: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i..n).map(|j| cols[i].dot(&cols[j]))).collect())
        .collect();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for (off, &v) in entries[i].iter().enumerate() {
            let j = i + off;
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    w
}

/// Largest absolute entry of `m - m^T`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sym_eigen_sorted_and_reconstructs() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let (vals, vecs) = sym_eigen_desc(&a);
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        let rebuilt = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert_relative_eq!(rebuilt, a, epsilon = 1e-12);
    }

    #[test]
    fn pinv_psd_inverts_full_rank() {
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 1.2, 0.7, 0.1]);
        let a = &b * b.transpose() + DMatrix::identity(3, 3);
        let inv = pinv_psd(&a, 1e-12);
        assert_eq!(inv.rank, 3);
        assert_relative_eq!(&a * &inv.pinv, DMatrix::identity(3, 3), epsilon = 1e-10);
    }

    #[test]
    fn pinv_psd_zeroes_null_space() {
        // rank-1 matrix
        let v = DVector::from_column_slice(&[1.0, 2.0, 2.0]);
        let a = &v * v.transpose();
        let inv = pinv_psd(&a, 1e-10);
        assert_eq!(inv.rank, 1);
        // A pinv A = A
        assert_relative_eq!(&a * &inv.pinv * &a, a, epsilon = 1e-9);
    }

    #[test]
    fn svd_desc_orders_values() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let (u, s) = svd_desc(&m).unwrap();
        assert_relative_eq!(s[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(s[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(s[2], 1.0, epsilon = 1e-12);
        assert_relative_eq!(u.column(0).abs().max(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sign_fix_prefers_lowest_index_on_ties() {
        let mut m = DMatrix::from_row_slice(3, 1, &[-0.5, 0.5, -0.1]);
        fix_column_signs(&mut m);
        // largest |entry| is tied between rows 0 and 1; row 0 wins and is negative
        assert_eq!(m[(0, 0)], 0.5);
        assert_eq!(m[(1, 0)], -0.5);
    }

    #[test]
    fn gram_of_rows_matches_gemm_and_is_symmetric() {
        let f = DMatrix::from_fn(7, 4, |i, j| ((i * 3 + j) as f64).sin());
        let w = gram_of_rows(&f);
        assert_eq!(asymmetry(&w), 0.0);
        let gemm = &f * f.transpose();
        assert_relative_eq!(w, gemm, epsilon = 1e-12);
    }

    #[test]
    fn det_matches_known_value() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(det(&m), -2.0, epsilon = 1e-12);
    }
}
