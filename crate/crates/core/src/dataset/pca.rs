use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Principal-component projection plus the min-max normalization that turns
/// projections into spike probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub dim: usize,
    pub n_components: usize,
    pub mean: Vec<f64>,
    /// Row-major `[n_components x dim]`, rows orthonormal.
    pub components: Vec<f64>,
    /// Variance captured by each component, descending.
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
    pub fit_samples: usize,
    /// Per-feature normalization bounds; empty until [`PcaModel::fit_normalization`].
    #[serde(default)]
    pub feature_min: Vec<f64>,
    #[serde(default)]
    pub feature_max: Vec<f64>,
}

/// Fits a PCA to `n` samples of length `dim` (row-major `data`) from the
/// sample covariance's eigen-decomposition. Each component's
/// largest-magnitude entry is made positive.
pub fn fit_pca(data: &[f64], n: usize, dim: usize, n_components: usize) -> Result<PcaModel> {
    if data.len() != n * dim {
        return Err(Error::DimensionMismatch {
            what: "PCA input",
            expected: n * dim,
            got: data.len(),
        });
    }
    fit_pca_rows(n, dim, n_components, |i, out| {
        out.copy_from_slice(&data[i * dim..(i + 1) * dim])
    })
}

/// [`fit_pca`] over rows produced on demand by `row(i, out)`.
pub fn fit_pca_rows(n: usize, dim: usize, n_components: usize, row: impl Fn(usize, &mut [f64])) -> Result<PcaModel> {
    if n < n_components.max(2) || n_components == 0 || n_components > dim {
        return Err(Error::Pca(format!(
            "{n_components} components need at least as many samples and dimensions (n={n}, dim={dim})"
        )));
    }
    let mut buf = vec![0.0; dim];
    let mut mean = vec![0.0; dim];
    for i in 0..n {
        row(i, &mut buf);
        for (m, &x) in mean.iter_mut().zip(&buf) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    const CHUNK: usize = 512;
    for start in (0..n).step_by(CHUNK) {
        let rows = CHUNK.min(n - start);
        let mut block = DMatrix::<f64>::zeros(rows, dim);
        for r in 0..rows {
            row(start + r, &mut buf);
            for c in 0..dim {
                block[(r, c)] = buf[c] - mean[c];
            }
        }
        cov.gemm_tr(1.0, &block, &block, 1.0);
    }
    cov /= (n - 1) as f64;
    let total_variance = cov.trace();
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let kth = eig.eigenvalues[order[n_components - 1]];
    if !(kth > 1e-12 * top) || top == 0.0 {
        return Err(Error::Pca(format!(
            "data rank is below {n_components} (component {n_components} variance {kth:e})"
        )));
    }
    let mut components = Vec::with_capacity(n_components * dim);
    let mut explained_variance = Vec::with_capacity(n_components);
    for &k in &order[..n_components] {
        let col = eig.eigenvectors.column(k);
        let mut v: Vec<f64> = col.iter().copied().collect();
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        if lead < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        components.extend(v);
        explained_variance.push(eig.eigenvalues[k]);
    }
    Ok(PcaModel {
        dim,
        n_components,
        mean,
        components,
        explained_variance,
        total_variance,
        fit_samples: n,
        feature_min: Vec::new(),
        feature_max: Vec::new(),
    })
}

impl PcaModel {
    pub fn explained_ratio(&self) -> f64 {
        self.explained_variance.iter().sum::<f64>() / self.total_variance
    }

    pub fn component(&self, k: usize) -> &[f64] {
        &self.components[k * self.dim..(k + 1) * self.dim]
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "project: input length");
        (0..self.n_components)
            .map(|k| {
                self.component(k)
                    .iter()
                    .zip(x)
                    .zip(&self.mean)
                    .map(|((&c, &x), &m)| c * (x - m))
                    .sum()
            })
            .collect()
    }

    pub fn reconstruct(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.n_components, "reconstruct: input length");
        let mut x = self.mean.clone();
        for (k, &zk) in z.iter().enumerate() {
            for (xi, &c) in x.iter_mut().zip(self.component(k)) {
                *xi += zk * c;
            }
        }
        x
    }

    /// Sets per-feature bounds from projected training rows.
    pub fn fit_normalization<'a>(&mut self, projected: impl IntoIterator<Item = &'a [f64]>) {
        let k = self.n_components;
        let mut lo = vec![f64::INFINITY; k];
        let mut hi = vec![f64::NEG_INFINITY; k];
        for z in projected {
            for i in 0..k {
                lo[i] = lo[i].min(z[i]);
                hi[i] = hi[i].max(z[i]);
            }
        }
        self.feature_min = lo;
        self.feature_max = hi;
    }

    /// Min-max scaled and clamped to `[0, 1]`.
    pub fn normalize(&self, z: &[f64]) -> Result<Vec<f64>> {
        if self.feature_min.len() != self.n_components {
            return Err(Error::Pca("normalization bounds not fitted".into()));
        }
        Ok(z.iter()
            .enumerate()
            .map(|(i, &v)| {
                let span = self.feature_max[i] - self.feature_min[i];
                if span > 0.0 {
                    ((v - self.feature_min[i]) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
