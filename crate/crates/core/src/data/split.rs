use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EmbeddingDataset;
use crate::error::{Error, Result};

/// Disjoint index sets covering `0..n`; each part is sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub parts: Vec<Vec<usize>>,
}

impl Partition {
    pub fn apply(&self, ds: &EmbeddingDataset) -> Vec<EmbeddingDataset> {
        self.parts.iter().map(|p| ds.subset(p)).collect()
    }
}

/// Largest-remainder apportionment of `n` items by `fractions`; ties go to
/// the lower index.
fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Seeded random partition of `ds` by `fractions`, optionally stratified by
/// class.
///
/// Under stratification every class is apportioned separately; it is an
/// error for a class with at least as many samples as there are splits to be
/// absent from some split.
pub fn split(
    ds: &EmbeddingDataset,
    fractions: &[f64],
    stratified: bool,
    seed: u64,
) -> Result<Partition> {
    if fractions.is_empty() {
        return Err(Error::config("split needs at least one fraction"));
    }
    if let Some(&f) = fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::Range {
            name: "split fraction",
            value: f,
            range: "(0, 1]",
        });
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Range {
            name: "sum of split fractions",
            value: total,
            range: "1 ± 1e-9",
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = vec![Vec::new(); fractions.len()];
    let groups: Vec<Vec<usize>> = if stratified {
        let mut by_class = vec![Vec::new(); ds.num_classes()];
        for (i, &l) in ds.labels().iter().enumerate() {
            by_class[l].push(i);
        }
        by_class
    } else {
        vec![(0..ds.len()).collect()]
    };

    for (class, mut members) in groups.into_iter().enumerate() {
        members.shuffle(&mut rng);
        let counts = apportion(members.len(), fractions);
        if stratified && members.len() >= fractions.len() {
            if let Some(split) = counts.iter().position(|&c| c == 0) {
                return Err(Error::Stratification { class, split });
            }
        }
        let mut rest = &members[..];
        for (part, &c) in parts.iter_mut().zip(&counts) {
            let (take, tail) = rest.split_at(c);
            part.extend_from_slice(take);
            rest = tail;
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    Ok(Partition { parts })
}

/// Holds out `round(fraction · n_c)` samples of every class `c`, without
/// erroring on classes too small to contribute. Returns `[kept, held_out]`.
pub fn holdout_per_class(labels: &[usize], fraction: f64, seed: u64) -> Result<Partition> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Range {
            name: "holdout fraction",
            value: fraction,
            range: "[0, 1)",
        });
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::new();
    let mut held = Vec::new();
    for mut members in by_class {
        members.shuffle(&mut rng);
        let h = (fraction * members.len() as f64).round() as usize;
        held.extend_from_slice(&members[..h]);
        kept.extend_from_slice(&members[h..]);
    }
    kept.sort_unstable();
    held.sort_unstable();
    Ok(Partition {
        parts: vec![kept, held],
    })
}
