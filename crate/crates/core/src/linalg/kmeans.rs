//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{squared_distance, Matrix};
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Matrix,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeansFit {
    pub fn sse(&self) -> f64 {
        self.sse_history.last().copied().unwrap_or(0.0)
    }
}

/// Index of the nearest row of `centroids` (lowest index on ties) and its
/// squared distance.
pub fn nearest_centroid(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.row_iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

pub fn kmeans(x: &Matrix, k: usize, seed: u64) -> Result<KMeansFit> {
    let n = x.rows();
    if k == 0 {
        return Err(Error::Infeasible("k-means needs k >= 1".into()));
    }
    if k > n {
        return Err(Error::Infeasible(format!(
            "k-means with k = {k} on {n} points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(x, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut distances = vec![0.0; n];
    let mut sse_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut changed = false;
        for (i, row) in x.row_iter().enumerate() {
            let (mut c, d) = nearest_centroid(row, &centroids);
            // ties keep the current label so reseeded duplicates stay put
            if labels[i] != usize::MAX
                && squared_distance(row, centroids.row(labels[i])) == d
            {
                c = labels[i];
            }
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            distances[i] = d;
        }
        sse_history.push(distances.iter().sum());
        if !changed {
            converged = true;
            break;
        }
        update_centroids(x, &mut labels, &mut distances, &mut centroids);
    }

    Ok(KMeansFit {
        centroids,
        labels,
        sse_history,
        iterations,
        converged,
    })
}

fn plus_plus_init(x: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = x.rows();
    let mut centroids = Matrix::zeros(k, x.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(x.row(first));
    let mut min_dist: Vec<f64> = x
        .row_iter()
        .map(|r| squared_distance(r, centroids.row(0)))
        .collect();

    for c in 1..k {
        let total: f64 = min_dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, d) in min_dist.iter().enumerate() {
                acc += d;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // every point coincides with a chosen centroid
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(x.row(pick));
        for (i, row) in x.row_iter().enumerate() {
            let d = squared_distance(row, centroids.row(c));
            if d < min_dist[i] {
                min_dist[i] = d;
            }
        }
    }
    centroids
}

/// Moves every centroid to the mean of its points. An empty cluster takes
/// the point currently farthest from its own centroid, which is then
/// relabelled so the next empty cluster picks a different point.
fn update_centroids(
    x: &Matrix,
    labels: &mut [usize],
    distances: &mut [f64],
    centroids: &mut Matrix,
) {
    let k = centroids.rows();
    let mut counts = vec![0usize; k];
    let mut sums = Matrix::zeros(k, x.cols());
    for (row, &l) in x.row_iter().zip(labels.iter()) {
        counts[l] += 1;
        for (s, v) in sums.row_mut(l).iter_mut().zip(row) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let far = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if distances[b] >= distances[i] => Some(b),
                _ => Some(i),
            });
        let Some(far) = far else { continue };
        let old = labels[far];
        counts[old] -= 1;
        for (s, v) in sums.row_mut(old).iter_mut().zip(x.row(far)) {
            *s -= v;
        }
        labels[far] = c;
        distances[far] = 0.0;
        counts[c] = 1;
        sums.row_mut(c).copy_from_slice(x.row(far));
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        let inv = 1.0 / counts[c] as f64;
        for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
            *dst = s * inv;
        }
    }
}
