//! Cross-checks against nalgebra's independent decompositions.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fedcgau::hetero::{frechet_distance_sq, GaussianSummary};
use fedcgau::linalg::{pca_fit, sym_eigen, Matrix};

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn random_psd(rng: &mut ChaCha8Rng, d: usize, rank: usize) -> Matrix {
    let g = Matrix::from_fn(d, rank, |_, _| rng.random_range(-1.0..1.0));
    g.matmul_t(&g).unwrap().symmetrized().unwrap()
}

#[test]
fn jacobi_eigenvalues_match_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for d in 1..=16 {
        for _ in 0..5 {
            let a = Matrix::from_fn(d, d, |_, _| rng.random_range(-3.0..3.0))
                .symmetrized()
                .unwrap();
            let ours = sym_eigen(&a).unwrap();
            let mut theirs: Vec<f64> = to_na(&a).symmetric_eigen().eigenvalues.iter().copied().collect();
            theirs.sort_by(|x, y| y.partial_cmp(x).unwrap());
            for (x, y) in ours.eigenvalues.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-10 * (1.0 + y.abs()), "d={d}: {x} vs {y}");
            }
            let err = ours.reconstruct().sub(&a).unwrap().max_abs();
            assert!(err < 1e-10, "d={d}: reconstruction error {err}");
        }
    }
}

/// `tr (Σ₁Σ₂)^{1/2}` from the eigenvalues of the non-symmetric product, which
/// are real and nonnegative for PSD inputs.
fn cross_term_nonsymmetric(a: &Matrix, b: &Matrix) -> f64 {
    let prod = to_na(a) * to_na(b);
    prod.complex_eigenvalues()
        .iter()
        .map(|z| z.re.max(0.0).sqrt())
        .sum()
}

#[test]
fn frechet_matches_nonsymmetric_product_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for d in 1..=16 {
        for _ in 0..4 {
            // full rank keeps the product's eigenvalues well conditioned
            let s1 = random_psd(&mut rng, d, d + 2);
            let s2 = random_psd(&mut rng, d, d + 2);
            let m1: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let m2: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mean_term: f64 = m1.iter().zip(&m2).map(|(x, y)| (x - y).powi(2)).sum();
            let expect =
                mean_term + s1.trace() + s2.trace() - 2.0 * cross_term_nonsymmetric(&s1, &s2);
            let a = GaussianSummary {
                mean: m1,
                covariance: s1,
                sample_count: 0,
            };
            let b = GaussianSummary {
                mean: m2,
                covariance: s2,
                sample_count: 0,
            };
            let ours = frechet_distance_sq(&a, &b).unwrap();
            let scale = 1.0 + a.covariance.trace() + b.covariance.trace();
            assert!(
                (ours - expect.max(0.0)).abs() < 1e-7 * scale,
                "d={d}: {ours} vs {expect}"
            );
        }
    }
}

#[test]
fn pca_spans_nalgebra_leading_eigenvectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scales = [5.0, 3.0, 1.0, 0.5, 0.1];
    let x = Matrix::from_fn(300, 5, |_, j| scales[j] * rng.random_range(-1.0..1.0));
    let pca = pca_fit(&x, 2).unwrap();
    let (_, cov) = x.covariance().unwrap();
    let eig = to_na(&cov).symmetric_eigen();
    let mut order: Vec<usize> = (0..5).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    for (c, &i) in order.iter().take(2).enumerate() {
        assert!((pca.explained_variance[c] - eig.eigenvalues[i]).abs() < 1e-9);
        let v = eig.eigenvectors.column(i);
        let dot: f64 = (0..5).map(|r| v[r] * pca.components[(r, c)]).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-8, "component {c}: |dot| = {}", dot.abs());
    }
}
