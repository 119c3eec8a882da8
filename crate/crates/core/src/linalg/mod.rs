//! Dense linear algebra kernels.

mod eigen;
mod kmeans;
mod matrix;
mod pca;

pub use eigen::{psd_sqrt, sym_eigen, EigenDecomposition, PSD_TOL, SYMMETRY_TOL};
pub(crate) use eigen::check_psd;
pub use kmeans::{kmeans, nearest_centroid, KMeansFit, MAX_ITERATIONS};
pub use matrix::{dot, squared_distance, Matrix};
pub use pca::{pca_fit, Pca};
