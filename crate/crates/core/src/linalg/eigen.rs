//! Symmetric eigendecomposition by cyclic Jacobi rotations, and the PSD
//! matrix square root built on it.

use super::Matrix;
use crate::error::{Error, Result};

/// Absolute symmetry tolerance, scaled by `max(1, max |a_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues in `[-PSD_TOL, 0)` are treated as rounding noise and clamped.
pub const PSD_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    /// `Q · diag(f(λ)) · Qᵀ`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let q = &self.eigenvectors;
        let n = q.rows();
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..mapped.len())
                    .map(|k| q[(i, k)] * mapped[k] * q[(j, k)])
                    .sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix {
        self.reconstruct_with(|l| l)
    }
}

fn check_symmetric(a: &Matrix) -> Result<()> {
    let asym = a.max_asymmetry().ok_or_else(|| {
        Error::dim(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        ))
    })?;
    if asym > SYMMETRY_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    Ok(())
}

/// Eigendecomposition of a real symmetric matrix.
///
/// Runs cyclic Jacobi sweeps over the upper triangle until the off-diagonal
/// mass is negligible relative to the diagonal. Only the upper triangle is
/// read after the symmetry check.
pub fn sym_eigen(a: &Matrix) -> Result<EigenDecomposition> {
    check_symmetric(a)?;
    let n = a.rows();
    let mut m = Matrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] });
    let mut v = Matrix::identity(n);

    let total: f64 = m.frobenius_norm();
    if total > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += m[(p, q)] * m[(p, q)];
                }
            }
            if off.sqrt() <= f64::EPSILON * total * 1e-2 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Annihilates `m[p][q]` with one Jacobi rotation, accumulating it into `v`.
fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    // smaller root of t² + 2θt − 1 = 0
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);
    let n = m.rows();

    m[(p, p)] = app - t * apq;
    m[(q, q)] = aqq + t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = m[(r, p)];
        let arq = m[(r, q)];
        let new_rp = arp - s * (arq + tau * arp);
        let new_rq = arq + s * (arp - tau * arq);
        m[(r, p)] = new_rp;
        m[(p, r)] = new_rp;
        m[(r, q)] = new_rq;
        m[(q, r)] = new_rq;
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp - s * (vrq + tau * vrp);
        v[(r, q)] = vrq + s * (vrp - tau * vrq);
    }
}

/// Symmetric square root of a positive semi-definite matrix.
pub fn psd_sqrt(a: &Matrix) -> Result<Matrix> {
    let eig = sym_eigen(a)?;
    check_psd(&eig)?;
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

pub(crate) fn check_psd(eig: &EigenDecomposition) -> Result<()> {
    let scale = eig
        .eigenvalues
        .iter()
        .fold(1.0f64, |m, l| m.max(l.abs()));
    match eig.eigenvalues.last() {
        Some(&min) if min < -PSD_TOL * scale => Err(Error::NotPsd {
            min_eigenvalue: min,
        }),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_frobenius(a: &Matrix, b: &Matrix) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(1e-300)
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = sym_eigen(&Matrix::identity(3)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_is_axis_aligned() {
        let eig = sym_eigen(&Matrix::from_diag(&[1.0, 4.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![4.0, 1.0]);
        assert_eq!(eig.eigenvectors.column(0), vec![0.0, 1.0]);
        assert_eq!(eig.eigenvectors.column(1), vec![1.0, 0.0]);
    }

    #[test]
    fn two_by_two_characteristic_polynomial() {
        // λ² − 4λ + 3 = (λ − 3)(λ − 1)
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let eig = sym_eigen(&a).unwrap();
        assert!((eig.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);
        assert!(rel_frobenius(&eig.reconstruct(), &a) < 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            sym_eigen(&Matrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
        let a = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eigen(&a), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn sqrt_of_diagonal() {
        let s = psd_sqrt(&Matrix::from_diag(&[4.0, 9.0])).unwrap();
        assert_eq!(s, Matrix::from_diag(&[2.0, 3.0]));
        assert_eq!(psd_sqrt(&Matrix::identity(4)).unwrap(), Matrix::identity(4));
    }

    #[test]
    fn sqrt_squares_back() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let s = psd_sqrt(&a).unwrap();
        assert!(rel_frobenius(&s.matmul(&s).unwrap(), &a) < 1e-12);
        assert_eq!(s.max_asymmetry(), Some(0.0));
    }

    #[test]
    fn sqrt_rejects_negative_definite() {
        let a = Matrix::from_diag(&[1.0, -1e-3]);
        assert!(matches!(psd_sqrt(&a), Err(Error::NotPsd { .. })));
        // rounding noise is clamped
        let s = psd_sqrt(&Matrix::from_diag(&[1.0, -1e-12])).unwrap();
        assert_eq!(s, Matrix::from_diag(&[1.0, 0.0]));
    }

    #[test]
    fn empty_matrix() {
        let eig = sym_eigen(&Matrix::zeros(0, 0)).unwrap();
        assert!(eig.eigenvalues.is_empty());
    }
}
