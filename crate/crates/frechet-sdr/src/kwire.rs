//! Kernel weighted inverse regression ensemble: nonlinear sufficient
//! dimension reduction through the coordinate representation
//!
//! ```text
//! W = (G + e I)^{-1} G D G D G (G + e I)^{-1},   G = (I - J/n) K (I - J/n)
//! ```
//!
//! whose top eigenvectors `gamma_l` give the coefficient vectors
//! `alpha_l = (G + e I)^{-1} gamma_l` of the fitted predictor functions.
//! `W` is assembled as a Gram product `F F^T` with `F = (G + e I)^{-1} G D
//! G^{1/2}`, which is the same matrix but symmetric by construction; the
//! ridge solves go through a Cholesky factorization, never an explicit
//! inverse. Everything is O(n^3); a few thousand observations is the
//! supported regime.

use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::dataio;
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::DistanceMatrix;
use crate::wire::PredictorMatrix;

/// Kernel on the predictor space.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `exp(-|x - x'|^2 / (2 sigma_kappa^2))`
    Gaussian { sigma_kappa: f64 },
}

impl KernelSpec {
    pub fn gaussian(sigma_kappa: f64) -> Result<Self> {
        if !(sigma_kappa > 0.0) {
            return Err(Error::Parameter(format!(
                "kernel bandwidth must be > 0, got {sigma_kappa}"
            )));
        }
        Ok(KernelSpec::Gaussian { sigma_kappa })
    }

    pub fn evaluate(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Gaussian { sigma_kappa } => {
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-sq / (2.0 * sigma_kappa * sigma_kappa)).exp()
            }
        }
    }

    pub fn sigma_kappa(&self) -> f64 {
        match *self {
            KernelSpec::Gaussian { sigma_kappa } => sigma_kappa,
        }
    }
}

/// A fitted nonlinear reduction, self-contained for later prediction.
#[derive(Debug, Clone)]
pub struct KwireFit {
    /// `n x d` coefficient vectors, column l is `alpha_l`.
    pub alpha: DMatrix<f64>,
    /// `n x d` eigenvectors of `W`, orthonormal columns.
    pub gamma: DMatrix<f64>,
    /// All `n` eigenvalues of `W`, nonincreasing, clamped at zero.
    pub eigenvalues: DVector<f64>,
    pub epsilon_n: f64,
    pub kernel: KernelSpec,
    pub x_train: PredictorMatrix,
    /// Column means of the training kernel matrix.
    pub kernel_col_means: DVector<f64>,
    /// Number of predictor functions extracted.
    pub d: usize,
}

/// Kernel matrix `K[i][j] = kappa(X_i, X_j)`; exactly symmetric, unit
/// diagonal for the Gaussian kernel.
pub fn gram_matrix(x: &PredictorMatrix, kernel: &KernelSpec) -> DMatrix<f64> {
    let rows = crate::metrics::rows_of(x.matrix());
    let n = rows.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = kernel.evaluate(&rows[i], &rows[i]);
        for j in (i + 1)..n {
            let v = kernel.evaluate(&rows[i], &rows[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Doubly-centered kernel matrix `(I - J/n) K (I - J/n)`, computed entrywise
/// as `K_ij - rowmean_i - rowmean_j + grandmean` on the upper triangle and
/// mirrored.
pub fn center_gram(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / n as f64).collect();
    let grand = k.sum() / (n * n) as f64;
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = k[(i, j)] - row_means[i] - row_means[j] + grand;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// The assembled operator matrix `W` together with the ridge factorization
/// that produced it.
struct OperatorParts {
    w: DMatrix<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    kernel_col_means: DVector<f64>,
}

fn assemble_operator(
    x: &PredictorMatrix,
    d_y: &DistanceMatrix,
    epsilon_n: f64,
    kernel: &KernelSpec,
) -> Result<OperatorParts> {
    let n = x.n();
    let k = gram_matrix(x, kernel);
    let kernel_col_means = linalg::column_means(&k);
    let g = center_gram(&k);

    let mut ridge = g.clone();
    for i in 0..n {
        ridge[(i, i)] += epsilon_n;
    }
    let chol = Cholesky::new(ridge).ok_or_else(|| {
        Error::Numerical("centered kernel plus ridge is not positive definite".into())
    })?;

    // symmetric square root of G from its spectrum, negatives clipped
    let (g_evals, g_evecs) = linalg::sym_eigen_desc(&g);
    let mut root = g_evecs.clone();
    for (j, mut col) in root.column_iter_mut().enumerate() {
        col *= g_evals[j].max(0.0).sqrt();
    }

    let gd = &g * d_y.values();
    let b = chol.solve(&gd); // (G + eI)^{-1} G D
    let f = &b * &root;
    let w = linalg::gram_of_rows(&f);
    Ok(OperatorParts {
        w,
        chol,
        kernel_col_means,
    })
}

/// The operator matrix `(G + eI)^{-1} G D G D G (G + eI)^{-1}` whose top
/// eigenvectors drive the fit; exposed for diagnostics and property checks.
pub fn kwire_operator_matrix(
    x: &PredictorMatrix,
    d_y: &DistanceMatrix,
    epsilon_n: f64,
    kernel: &KernelSpec,
) -> Result<DMatrix<f64>> {
    validate_kwire_args(x, d_y, 1, epsilon_n)?;
    Ok(assemble_operator(x, d_y, epsilon_n, kernel)?.w)
}

fn validate_kwire_args(
    x: &PredictorMatrix,
    d_y: &DistanceMatrix,
    d: usize,
    epsilon_n: f64,
) -> Result<()> {
    let n = x.n();
    if !(epsilon_n > 0.0) {
        return Err(Error::Parameter(format!(
            "ridge parameter must be > 0, got {epsilon_n}"
        )));
    }
    if d < 1 || d > n {
        return Err(Error::Parameter(format!(
            "need 1 <= d <= n, got d={d} with n={n}"
        )));
    }
    if d_y.n() != n {
        return Err(Error::Dimension(format!(
            "distance matrix has {} rows but predictors have {n}",
            d_y.n()
        )));
    }
    Ok(())
}

/// Fits the nonlinear reduction with `d` predictor functions.
pub fn kwire_fit(
    x: &PredictorMatrix,
    d_y: &DistanceMatrix,
    d: usize,
    epsilon_n: f64,
    kernel: &KernelSpec,
) -> Result<KwireFit> {
    validate_kwire_args(x, d_y, d, epsilon_n)?;
    let OperatorParts {
        w,
        chol,
        kernel_col_means,
    } = assemble_operator(x, d_y, epsilon_n, kernel)?;

    let (mut evals, evecs) = linalg::sym_eigen_desc(&w);
    for v in evals.iter_mut() {
        *v = v.max(0.0);
    }
    let mut gamma = evecs.columns(0, d).into_owned();
    linalg::fix_column_signs(&mut gamma);
    let alpha = chol.solve(&gamma);

    Ok(KwireFit {
        alpha,
        gamma,
        eigenvalues: evals,
        epsilon_n,
        kernel: kernel.clone(),
        x_train: x.clone(),
        kernel_col_means,
        d,
    })
}

/// In-sample predictor values `G alpha`; each column has mean zero over the
/// training sample by construction.
pub fn kwire_insample(fit: &KwireFit) -> DMatrix<f64> {
    let k = gram_matrix(&fit.x_train, &fit.kernel);
    let g = center_gram(&k);
    &g * &fit.alpha
}

/// Out-of-sample predictor values
/// `f_l(x) = k(x)^T alpha_l - mean(k(x)) * sum(alpha_l)`, the expansion of
/// `sum_i alpha_{l,i} (kappa(x, X_i) - mean_s kappa(x, X_s))`.
///
/// Unlike [`kwire_insample`] these are not centered; at the training rows
/// the two differ by a constant per column.
pub fn kwire_predict(fit: &KwireFit, x_new: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = fit.x_train.p();
    if x_new.ncols() != p {
        return Err(Error::Dimension(format!(
            "new predictors have {} columns, training had {p}",
            x_new.ncols()
        )));
    }
    let train_rows = crate::metrics::rows_of(fit.x_train.matrix());
    let new_rows = crate::metrics::rows_of(x_new);
    let n = train_rows.len();
    let alpha_sums: Vec<f64> = (0..fit.d).map(|l| fit.alpha.column(l).sum()).collect();
    let mut out = DMatrix::zeros(new_rows.len(), fit.d);
    for (r, xr) in new_rows.iter().enumerate() {
        let kvec: Vec<f64> = train_rows
            .iter()
            .map(|t| fit.kernel.evaluate(xr, t))
            .collect();
        let kmean: f64 = kvec.iter().sum::<f64>() / n as f64;
        for l in 0..fit.d {
            let dot: f64 = kvec
                .iter()
                .zip(fit.alpha.column(l).iter())
                .map(|(kv, av)| kv * av)
                .sum();
            out[(r, l)] = dot - kmean * alpha_sums[l];
        }
    }
    Ok(out)
}

impl KwireFit {
    /// Writes the fit as a directory of CSV files (`alpha.csv`, `gamma.csv`,
    /// `eigenvalues.csv`, `x_train.csv`, `kernel_col_means.csv`,
    /// `params.csv`) so prediction can run in a later process.
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        dataio::write_csv_matrix(&dir.join("alpha.csv"), &self.alpha)?;
        dataio::write_csv_matrix(&dir.join("gamma.csv"), &self.gamma)?;
        dataio::write_csv_matrix(
            &dir.join("eigenvalues.csv"),
            &DMatrix::from_column_slice(self.eigenvalues.len(), 1, self.eigenvalues.as_slice()),
        )?;
        dataio::write_csv_matrix(&dir.join("x_train.csv"), self.x_train.matrix())?;
        dataio::write_csv_matrix(
            &dir.join("kernel_col_means.csv"),
            &DMatrix::from_column_slice(
                self.kernel_col_means.len(),
                1,
                self.kernel_col_means.as_slice(),
            ),
        )?;
        let params = format!(
            "kernel,gaussian\nsigma_kappa,{:.17e}\nepsilon_n,{:.17e}\nd,{}\n",
            self.kernel.sigma_kappa(),
            self.epsilon_n,
            self.d
        );
        std::fs::write(dir.join("params.csv"), params)
            .map_err(|e| Error::io(dir.join("params.csv"), e))
    }

    /// Reads a fit bundle written by [`KwireFit::save_dir`].
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let alpha = dataio::read_csv_matrix(&dir.join("alpha.csv"))?;
        let gamma = dataio::read_csv_matrix(&dir.join("gamma.csv"))?;
        let eigenvalues = dataio::read_csv_matrix(&dir.join("eigenvalues.csv"))?;
        let x_train = PredictorMatrix::new(dataio::read_csv_matrix(&dir.join("x_train.csv"))?)?;
        let col_means = dataio::read_csv_matrix(&dir.join("kernel_col_means.csv"))?;
        let params_path = dir.join("params.csv");
        let text =
            std::fs::read_to_string(&params_path).map_err(|e| Error::io(&params_path, e))?;
        let mut sigma = None;
        let mut epsilon = None;
        let mut d = None;
        for (ln, line) in text.lines().enumerate() {
            let mut parts = line.splitn(2, ',');
            let key = parts.next().unwrap_or_default();
            let value = parts.next().ok_or_else(|| Error::Parse {
                line: ln + 1,
                message: "expected key,value".into(),
            })?;
            match key {
                "kernel" => {
                    if value != "gaussian" {
                        return Err(Error::Validation(format!("unknown kernel '{value}'")));
                    }
                }
                "sigma_kappa" => sigma = value.parse::<f64>().ok(),
                "epsilon_n" => epsilon = value.parse::<f64>().ok(),
                "d" => d = value.parse::<usize>().ok(),
                other => {
                    return Err(Error::Validation(format!(
                        "unknown parameter '{other}' in fit bundle"
                    )))
                }
            }
        }
        let (sigma, epsilon, d) = match (sigma, epsilon, d) {
            (Some(s), Some(e), Some(d)) => (s, e, d),
            _ => {
                return Err(Error::Validation(
                    "fit bundle params.csv is missing sigma_kappa/epsilon_n/d".into(),
                ))
            }
        };
        if alpha.ncols() != d || gamma.ncols() != d || alpha.nrows() != x_train.n() {
            return Err(Error::Validation(
                "fit bundle matrices do not match the declared shape".into(),
            ));
        }
        Ok(KwireFit {
            alpha,
            gamma,
            eigenvalues: DVector::from_column_slice(eigenvalues.column(0).as_slice()),
            epsilon_n: epsilon,
            kernel: KernelSpec::gaussian(sigma)?,
            x_train,
            kernel_col_means: DVector::from_column_slice(col_means.column(0).as_slice()),
            d,
        })
    }
}
