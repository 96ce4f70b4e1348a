//! Turning raw streams into per-frame inputs: sliding-window point clouds for
//! multivariate series and PCA features for the Hotelling baseline.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// The `w` cross-sections ending at index `t` (0-based), as a point cloud.
pub fn takens_embed(series: &[Vec<f64>], w: usize, t: usize) -> Result<PointCloud> {
    if w == 0 {
        return Err(Error::invalid("window must be positive"));
    }
    if t + 1 < w {
        return Err(Error::InsufficientHistory { needed: w, available: t + 1 });
    }
    if t >= series.len() {
        return Err(Error::invalid(format!("time index {t} beyond series of length {}", series.len())));
    }
    PointCloud::from_rows(&series[t + 1 - w..=t])
}

/// Sliding-window clouds for every `t` with a full window.
pub fn takens_stream(series: &[Vec<f64>], w: usize) -> Result<Vec<PointCloud>> {
    if series.len() < w {
        return Err(Error::InsufficientHistory { needed: w, available: series.len() });
    }
    (w - 1..series.len()).map(|t| takens_embed(series, w, t)).collect()
}

/// Centered PCA with `r` retained components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// Column-major `p x r`.
    components: Vec<f64>,
    variances: Vec<f64>,
    r: usize,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.r
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Sample variance along each component, nonincreasing.
    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn components(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.mean.len(), self.r, &self.components)
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.mean.len();
        if x.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: x.len() });
        }
        Ok((0..self.r)
            .map(|k| {
                let c = &self.components[k * p..(k + 1) * p];
                c.iter().zip(x).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum()
            })
            .collect())
    }
}

/// Fits PCA by eigendecomposition of the sample covariance. When the
/// dimension exceeds the sample count the `n x n` Gram matrix is decomposed
/// instead; the components are the same.
pub fn fit_pca(training: &[Vec<f64>], r: usize) -> Result<PcaModel> {
    let n = training.len();
    let p = training.first().map(Vec::len).ok_or(Error::EmptyInput("PCA training frames"))?;
    if r == 0 || r > p.min(n) {
        return Err(Error::invalid(format!("cannot keep {r} components from {n} frames of dimension {p}")));
    }
    if n < 2 {
        return Err(Error::InsufficientHistory { needed: 2, available: n });
    }
    let mut x = DMatrix::zeros(n, p);
    for (i, row) in training.iter().enumerate() {
        if row.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("PCA training frames"));
        }
        x.row_mut(i).copy_from(&DVector::from_row_slice(row).transpose());
    }
    let mean = x.row_mean();
    for mut row in x.row_iter_mut() {
        row -= &mean;
    }
    let scale = 1.0 / (n - 1) as f64;

    let (components, variances) = if p <= n {
        let cov = x.transpose() * &x * scale;
        let (vals, vecs) = sorted_eigen(cov);
        (vecs.columns(0, r).into_owned(), vals[..r].to_vec())
    } else {
        let gram = &x * x.transpose() * scale;
        let (vals, vecs) = sorted_eigen(gram);
        let mut comps = DMatrix::zeros(p, r);
        for k in 0..r {
            let lambda = vals[k];
            if !(lambda > 1e-12 * vals[0].max(f64::MIN_POSITIVE)) {
                return Err(Error::Singular("PCA: fewer informative directions than requested components"));
            }
            let v = x.transpose() * vecs.column(k) / ((n - 1) as f64 * lambda).sqrt();
            comps.set_column(k, &v);
        }
        (comps, vals[..r].to_vec())
    };

    Ok(PcaModel {
        mean: mean.iter().copied().collect(),
        components: components.as_slice().to_vec(),
        variances,
        r,
    })
}

/// Eigenpairs of a symmetric matrix sorted by decreasing eigenvalue, with a
/// sign convention (largest-magnitude entry positive) for reproducibility.
fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let mut vecs = eig.eigenvectors.select_columns(&order);
    for mut c in vecs.column_iter_mut() {
        let big = c.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if big < 0.0 {
            c.neg_mut();
        }
    }
    (vals, vecs)
}
