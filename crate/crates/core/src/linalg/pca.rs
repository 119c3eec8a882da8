use serde::{Deserialize, Serialize};

use super::{sym_eigen, Matrix};
use crate::error::{Error, Result};

/// A fitted principal component projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `D × num_components`, orthonormal columns ordered by explained variance.
    #[serde(with = "matrix_serde")]
    pub components: Matrix,
    /// Variance along each kept component.
    pub explained_variance: Vec<f64>,
    /// Trace of the sample covariance, i.e. the variance summed over all axes.
    pub total_variance: f64,
}

impl Pca {
    pub fn num_components(&self) -> usize {
        self.components.cols()
    }

    /// Fraction of total variance along each kept component. All zeros when
    /// the data has no variance.
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        if self.total_variance <= 0.0 {
            return vec![0.0; self.explained_variance.len()];
        }
        self.explained_variance
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }

    /// `(x − mean) · components`
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::dim(format!(
                "PCA fitted on {} features, got {}",
                self.mean.len(),
                x.cols()
            )));
        }
        let k = self.components.cols();
        let mut out = Matrix::zeros(x.rows(), k);
        let mut centered = vec![0.0; self.mean.len()];
        for (i, row) in x.row_iter().enumerate() {
            for ((c, v), m) in centered.iter_mut().zip(row).zip(&self.mean) {
                *c = v - m;
            }
            for j in 0..k {
                out[(i, j)] = centered
                    .iter()
                    .enumerate()
                    .map(|(d, c)| c * self.components[(d, j)])
                    .sum();
            }
        }
        Ok(out)
    }
}

/// Fits PCA by eigendecomposition of the sample covariance.
///
/// Each component is sign-normalized so that its largest-magnitude entry is
/// positive (first such entry on ties).
pub fn pca_fit(x: &Matrix, num_components: usize) -> Result<Pca> {
    if x.rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "PCA needs at least 2 samples, got {}",
            x.rows()
        )));
    }
    if num_components == 0 || num_components > x.rows().min(x.cols()) {
        return Err(Error::dim(format!(
            "num_components {num_components} must be in 1..={}",
            x.rows().min(x.cols())
        )));
    }
    let (mean, cov) = x.covariance()?;
    let total_variance = cov.trace();
    let eig = sym_eigen(&cov)?;
    let d = x.cols();
    let mut components = Matrix::zeros(d, num_components);
    for j in 0..num_components {
        let col = eig.eigenvectors.column(j);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (i, v) in col.into_iter().enumerate() {
            components[(i, j)] = sign * v;
        }
    }
    let explained_variance = eig.eigenvalues[..num_components]
        .iter()
        .map(|v| v.max(0.0))
        .collect();
    Ok(Pca {
        mean,
        components,
        explained_variance,
        total_variance,
    })
}

pub(crate) mod matrix_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::Matrix;

    #[derive(Serialize, Deserialize)]
    struct Repr {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        Repr {
            rows: m.rows(),
            cols: m.cols(),
            data: m.as_slice().to_vec(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let r = Repr::deserialize(d)?;
        Matrix::from_vec(r.rows, r.cols, r.data).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_line() {
        let x = Matrix::from_fn(20, 2, |i, j| {
            let t = i as f64 - 7.0;
            if j == 0 {
                t + 3.0
            } else {
                2.0 * t - 1.0
            }
        });
        let pca = pca_fit(&x, 2).unwrap();
        let s5 = 5f64.sqrt();
        assert!((pca.components[(0, 0)] - 1.0 / s5).abs() < 1e-12);
        assert!((pca.components[(1, 0)] - 2.0 / s5).abs() < 1e-12);
        let ratio = pca.explained_variance_ratio();
        assert!(ratio[1] < 1e-10, "{ratio:?}");
    }

    #[test]
    fn duplicated_point() {
        let x = Matrix::from_fn(10, 3, |_, j| j as f64 + 0.5);
        let pca = pca_fit(&x, 2).unwrap();
        assert_eq!(pca.explained_variance, vec![0.0, 0.0]);
        let proj = pca.transform(&x).unwrap();
        assert!(proj.as_slice().iter().all(|&v| v == 0.0));
        let ctc = pca.components.t_matmul(&pca.components).unwrap();
        assert!(ctc.sub(&Matrix::identity(2)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn component_count_checked() {
        let x = Matrix::zeros(5, 2);
        assert!(pca_fit(&x, 3).is_err());
        assert!(pca_fit(&x, 0).is_err());
        assert!(pca_fit(&Matrix::zeros(1, 2), 1).is_err());
        let pca = pca_fit(&x, 1).unwrap();
        assert!(pca.transform(&Matrix::zeros(1, 3)).is_err());
    }
}
