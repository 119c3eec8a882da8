//! Synthetic embedding generators.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::EmbeddingDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Client id of the XOR clusters with positive `x₂`.
pub const XOR_CLIENT_UP: usize = 0;
/// Client id of the XOR clusters with negative `x₂`.
pub const XOR_CLIENT_DOWN: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub num_classes: usize,
    pub blobs_per_class: usize,
    pub samples_per_blob: usize,
    pub dim: usize,
    pub separation: f64,
    pub spread: f64,
    pub seed: u64,
}

/// Blobs whose centers are shared by all classes up to a class shift.
///
/// Group `g` sits at `g · separation` along the first axis and the class-`c`
/// blob of that group is displaced by `c · class_shift · separation` along
/// the same axis. With `class_shift = 1` the class-`c` blob of group `g`
/// lands on the class-`c−1` blob of group `g+1`, so features alone do not
/// determine the class; the group does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedBlobSpec {
    pub num_classes: usize,
    pub num_groups: usize,
    pub samples_per_blob: usize,
    pub dim: usize,
    pub separation: f64,
    pub spread: f64,
    pub class_shift: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XorSpec {
    pub samples_per_cluster: usize,
    pub spread: f64,
    pub seed: u64,
}

impl Default for XorSpec {
    fn default() -> Self {
        XorSpec {
            samples_per_cluster: 200,
            spread: 0.25,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticBlobs {
    pub dataset: EmbeddingDataset,
    /// Global blob index `class · blobs_per_class + blob` for each sample.
    pub blob_ids: Vec<usize>,
    /// Blob index within the sample's class.
    pub groups: Vec<usize>,
    /// One row per global blob index.
    pub centers: Matrix,
}

fn check_count(name: &'static str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::Range {
            name,
            value: 0.0,
            range: ">= 1",
        });
    }
    Ok(())
}

fn check_scales(separation: f64, spread: f64) -> Result<()> {
    if !(separation > 0.0 && separation.is_finite()) {
        return Err(Error::Range {
            name: "separation",
            value: separation,
            range: "(0, inf)",
        });
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::Range {
            name: "spread",
            value: spread,
            range: "[0, inf)",
        });
    }
    Ok(())
}

fn gaussian_around(rng: &mut ChaCha8Rng, center: &[f64], spread: f64, out: &mut Vec<f64>) {
    for &c in center {
        let z: f64 = rng.sample(StandardNormal);
        out.push(c + spread * z);
    }
}

/// Isotropic Gaussian blobs, `blobs_per_class` per class, centered on
/// distinct points of an integer lattice scaled by `separation`.
pub fn synth_blobs(spec: &BlobSpec) -> Result<SyntheticBlobs> {
    check_count("num_classes", spec.num_classes)?;
    check_count("blobs_per_class", spec.blobs_per_class)?;
    check_count("samples_per_blob", spec.samples_per_blob)?;
    check_count("dim", spec.dim)?;
    check_scales(spec.separation, spec.spread)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let num_blobs = spec.num_classes * spec.blobs_per_class;
    // lattice side so that the lattice holds at least twice the blob count
    let mut side: u64 = 2;
    while (side as f64).powi(spec.dim.min(64) as i32) < 2.0 * num_blobs as f64 {
        side += 1;
    }
    let mut seen = HashSet::new();
    let mut centers = Matrix::zeros(num_blobs, spec.dim);
    let mut b = 0;
    while b < num_blobs {
        let point: Vec<u64> = (0..spec.dim).map(|_| rng.random_range(0..side)).collect();
        if !seen.insert(point.clone()) {
            continue;
        }
        for (dst, &p) in centers.row_mut(b).iter_mut().zip(&point) {
            *dst = p as f64 * spec.separation;
        }
        b += 1;
    }

    let n = num_blobs * spec.samples_per_blob;
    let mut data = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    let mut blob_ids = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for class in 0..spec.num_classes {
        for blob in 0..spec.blobs_per_class {
            let id = class * spec.blobs_per_class + blob;
            for _ in 0..spec.samples_per_blob {
                gaussian_around(&mut rng, centers.row(id), spec.spread, &mut data);
                labels.push(class);
                blob_ids.push(id);
                groups.push(blob);
            }
        }
    }
    let dataset =
        EmbeddingDataset::new(Matrix::from_vec(n, spec.dim, data)?, labels, spec.num_classes)?;
    Ok(SyntheticBlobs {
        dataset,
        blob_ids,
        groups,
        centers,
    })
}

pub fn synth_shifted_blobs(spec: &ShiftedBlobSpec) -> Result<SyntheticBlobs> {
    check_count("num_classes", spec.num_classes)?;
    check_count("num_groups", spec.num_groups)?;
    check_count("samples_per_blob", spec.samples_per_blob)?;
    check_count("dim", spec.dim)?;
    check_scales(spec.separation, spec.spread)?;
    if !spec.class_shift.is_finite() {
        return Err(Error::Range {
            name: "class_shift",
            value: spec.class_shift,
            range: "finite",
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let num_blobs = spec.num_classes * spec.num_groups;
    let centers = Matrix::from_fn(num_blobs, spec.dim, |b, j| {
        let (class, group) = (b / spec.num_groups, b % spec.num_groups);
        if j == 0 {
            (group as f64 + spec.class_shift * class as f64) * spec.separation
        } else {
            0.0
        }
    });

    let n = num_blobs * spec.samples_per_blob;
    let mut data = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    let mut blob_ids = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for b in 0..num_blobs {
        for _ in 0..spec.samples_per_blob {
            gaussian_around(&mut rng, centers.row(b), spec.spread, &mut data);
            labels.push(b / spec.num_groups);
            blob_ids.push(b);
            groups.push(b % spec.num_groups);
        }
    }
    let dataset =
        EmbeddingDataset::new(Matrix::from_vec(n, spec.dim, data)?, labels, spec.num_classes)?;
    Ok(SyntheticBlobs {
        dataset,
        blob_ids,
        groups,
        centers,
    })
}

/// XOR with clients: four Gaussian clusters at `(±1, ±1)`.
///
/// Label 0 (negative) when both coordinates share a sign, 1 otherwise.
/// Clusters with `x₂ > 0` belong to [`XOR_CLIENT_UP`], the rest to
/// [`XOR_CLIENT_DOWN`]. Draws that leave their cluster's quadrant are
/// redrawn so the sign rule holds for every sample.
pub fn synth_xor(spec: &XorSpec) -> Result<EmbeddingDataset> {
    check_count("samples_per_cluster", spec.samples_per_cluster)?;
    if !(spec.spread >= 0.0 && spec.spread.is_finite()) {
        return Err(Error::Range {
            name: "spread",
            value: spec.spread,
            range: "[0, inf)",
        });
    }
    const CENTERS: [[f64; 2]; 4] = [[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]];

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = 4 * spec.samples_per_cluster;
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    let mut clients = Vec::with_capacity(n);
    for center in CENTERS {
        let label = usize::from(center[0] * center[1] < 0.0);
        let client = if center[1] > 0.0 {
            XOR_CLIENT_UP
        } else {
            XOR_CLIENT_DOWN
        };
        for _ in 0..spec.samples_per_cluster {
            let mut point = Vec::with_capacity(2);
            loop {
                point.clear();
                gaussian_around(&mut rng, &center, spec.spread, &mut point);
                if point[0] * center[0] > 0.0 && point[1] * center[1] > 0.0 {
                    break;
                }
            }
            data.extend_from_slice(&point);
            labels.push(label);
            clients.push(client);
        }
    }
    EmbeddingDataset::new(Matrix::from_vec(n, 2, data)?, labels, 2)?.with_clients(clients)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_spec() -> BlobSpec {
        BlobSpec {
            num_classes: 2,
            blobs_per_class: 3,
            samples_per_blob: 5,
            dim: 2,
            separation: 10.0,
            spread: 0.0,
            seed: 9,
        }
    }

    #[test]
    fn zero_spread_blobs_are_points() {
        let s = synth_blobs(&blob_spec()).unwrap();
        assert_eq!(s.dataset.len(), 30);
        for (i, row) in s.dataset.features().row_iter().enumerate() {
            assert_eq!(row, s.centers.row(s.blob_ids[i]));
        }
        // distinct lattice points at least `separation` apart
        for a in 0..6 {
            for b in a + 1..6 {
                let d = crate::linalg::squared_distance(s.centers.row(a), s.centers.row(b));
                assert!(d >= 100.0 - 1e-9);
            }
        }
    }

    #[test]
    fn single_blob_mean_within_bound() {
        let spec = BlobSpec {
            num_classes: 1,
            blobs_per_class: 1,
            samples_per_blob: 4000,
            dim: 3,
            separation: 5.0,
            spread: 2.0,
            seed: 1,
        };
        let s = synth_blobs(&spec).unwrap();
        let mean = s.dataset.features().column_means();
        let bound = 3.0 * spec.spread / (spec.samples_per_blob as f64).sqrt();
        for (m, c) in mean.iter().zip(s.centers.row(0)) {
            assert!((m - c).abs() < bound, "{m} vs {c}");
        }
    }

    #[test]
    fn blob_validation() {
        let mut spec = blob_spec();
        spec.separation = 0.0;
        assert!(synth_blobs(&spec).is_err());
        let mut spec = blob_spec();
        spec.samples_per_blob = 0;
        assert!(synth_blobs(&spec).is_err());
    }

    #[test]
    fn xor_sign_rule() {
        let ds = synth_xor(&XorSpec::default()).unwrap();
        assert_eq!(ds.len(), 800);
        let clients = ds.clients().unwrap();
        for ((row, &label), &client) in ds.features().row_iter().zip(ds.labels()).zip(clients) {
            assert_eq!(label == 1, row[0] * row[1] < 0.0);
            assert_eq!(client == XOR_CLIENT_UP, row[1] > 0.0);
        }
    }

    #[test]
    fn degenerate_xor_has_four_points() {
        let ds = synth_xor(&XorSpec {
            samples_per_cluster: 3,
            spread: 0.0,
            seed: 0,
        })
        .unwrap();
        let mut distinct: Vec<Vec<u64>> = ds
            .features()
            .row_iter()
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn shifted_blobs_overlap_across_classes() {
        let s = synth_shifted_blobs(&ShiftedBlobSpec {
            num_classes: 2,
            num_groups: 4,
            samples_per_blob: 2,
            dim: 3,
            separation: 10.0,
            spread: 0.0,
            class_shift: 1.0,
            seed: 0,
        })
        .unwrap();
        // class 1, group 0 sits on class 0, group 1
        assert_eq!(s.centers.row(4), s.centers.row(1));
        assert_eq!(s.dataset.class_counts(), vec![8, 8]);
    }
}
