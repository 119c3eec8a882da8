//! Non-IID client simulation: PCA projection fitted on training data,
//! per-class k-means, random centroid-to-client matching and proportional
//! reassignment.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::EmbeddingDataset;
use crate::error::{Error, Result};
use crate::linalg::{kmeans, nearest_centroid, pca_fit, Matrix, Pca};
use crate::seeds::{child_rng, derive_seed};

/// Projection width used when none is configured.
pub const DEFAULT_COMPONENTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Nearest same-class centroid.
    Centroid,
    /// Centroid assignment with a proportion of samples redrawn uniformly.
    Shuffled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientAssignment {
    pub assignment: Vec<usize>,
    pub num_clients: usize,
    /// Per class, the `k × p` centroids in projected space; empty for classes
    /// absent from training data.
    pub centroids: Vec<Matrix>,
    /// Per class, `centroid_to_client[c][j]` owns centroid `j` of class `c`.
    pub centroid_to_client: Vec<Vec<usize>>,
    pub provenance: Provenance,
    pub shuffle_proportion: f64,
    pub seed: u64,
}

impl ClientAssignment {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Sample indices of each client, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clients];
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// Copy of `ds` carrying this assignment as its client ids.
    pub fn attach(&self, ds: &EmbeddingDataset) -> Result<EmbeddingDataset> {
        ds.clone().with_clients(self.assignment.clone())
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedClients {
    pub train: ClientAssignment,
    pub test: ClientAssignment,
    pub pca: Pca,
    /// Train features in projected space.
    pub train_projected: Matrix,
    pub test_projected: Matrix,
}

/// [`simulate_clients_with`] using a 2-component projection.
pub fn simulate_clients(
    train: &EmbeddingDataset,
    test: &EmbeddingDataset,
    k: usize,
    seed: u64,
) -> Result<SimulatedClients> {
    simulate_clients_with(train, test, k, DEFAULT_COMPONENTS, seed)
}

/// Assigns train and test samples to `k` clients. PCA with
/// `min(components, D)` components is fitted on train only; each class's
/// projected train samples are clustered into `k` groups and the class's
/// centroids are matched to clients by a seeded permutation; every sample
/// goes to the owner of its nearest same-class centroid.
pub fn simulate_clients_with(
    train: &EmbeddingDataset,
    test: &EmbeddingDataset,
    k: usize,
    components: usize,
    seed: u64,
) -> Result<SimulatedClients> {
    if k == 0 {
        return Err(Error::config("at least one client is required"));
    }
    if components == 0 {
        return Err(Error::config("projection needs at least one component"));
    }
    if test.dim() != train.dim() && !test.is_empty() {
        return Err(Error::dim(format!(
            "train has {} features, test has {}",
            train.dim(),
            test.dim()
        )));
    }
    let classes = train.num_classes().max(test.num_classes());
    let mut by_class = vec![Vec::new(); classes];
    for (i, &l) in train.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < k {
            return Err(Error::Infeasible(format!(
                "class {class} has {} training samples, fewer than {k} clients",
                members.len()
            )));
        }
    }

    let pca = pca_fit(train.features(), components.min(train.dim()))?;
    let train_projected = pca.transform(train.features())?;
    let test_projected = if test.is_empty() {
        Matrix::zeros(0, pca.num_components())
    } else {
        pca.transform(test.features())?
    };

    let mut centroids = Vec::with_capacity(classes);
    let mut matching = Vec::with_capacity(classes);
    let mut train_assign = vec![0; train.len()];
    for (class, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            centroids.push(Matrix::zeros(0, pca.num_components()));
            matching.push(Vec::new());
            continue;
        }
        let fit = kmeans(
            &train_projected.select_rows(members),
            k,
            derive_seed(seed, "kmeans", &[class as u64]),
        )?;
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut child_rng(seed, "matching", &[class as u64]));
        for (&i, &j) in members.iter().zip(&fit.labels) {
            train_assign[i] = perm[j];
        }
        centroids.push(fit.centroids);
        matching.push(perm);
    }

    let mut test_assign = Vec::with_capacity(test.len());
    for (i, (row, &label)) in test_projected.row_iter().zip(test.labels()).enumerate() {
        if centroids[label].rows() == 0 {
            return Err(Error::Infeasible(format!(
                "test sample {i} has class {label}, which has no training samples"
            )));
        }
        let (j, _) = nearest_centroid(row, &centroids[label]);
        test_assign.push(matching[label][j]);
    }

    let make = |assignment| ClientAssignment {
        assignment,
        num_clients: k,
        centroids: centroids.clone(),
        centroid_to_client: matching.clone(),
        provenance: Provenance::Centroid,
        shuffle_proportion: 0.0,
        seed,
    };
    Ok(SimulatedClients {
        train: make(train_assign),
        test: make(test_assign),
        pca,
        train_projected,
        test_projected,
    })
}

/// Reassigns `⌊proportion · N⌋` samples, chosen without replacement, to
/// independently drawn uniform clients (possibly their current one).
pub fn shuffle_assignment(
    a: &ClientAssignment,
    proportion: f64,
    seed: u64,
) -> Result<ClientAssignment> {
    if !(0.0..=1.0).contains(&proportion) {
        return Err(Error::Range {
            name: "shuffle proportion",
            value: proportion,
            range: "[0, 1]",
        });
    }
    let n = a.len();
    let count = (proportion * n as f64).floor() as usize;
    let mut out = a.clone();
    out.shuffle_proportion = proportion;
    if count == 0 {
        return Ok(out);
    }
    let mut rng = child_rng(seed, "shuffle", &[]);
    let mut picked = rand::seq::index::sample(&mut rng, n, count).into_vec();
    picked.sort_unstable();
    for i in picked {
        out.assignment[i] = rng.random_range(0..a.num_clients);
    }
    out.provenance = Provenance::Shuffled;
    Ok(out)
}

/// `counts[client][class]` for an assignment vector.
pub fn class_histogram(
    assignment: &[usize],
    labels: &[usize],
    num_clients: usize,
    num_classes: usize,
) -> Result<Vec<Vec<usize>>> {
    if assignment.len() != labels.len() {
        return Err(Error::dim(format!(
            "{} client ids for {} labels",
            assignment.len(),
            labels.len()
        )));
    }
    let mut counts = vec![vec![0; num_classes]; num_clients];
    for (i, (&c, &l)) in assignment.iter().zip(labels).enumerate() {
        if c >= num_clients {
            return Err(Error::config(format!("sample {i} has client {c} of {num_clients}")));
        }
        if l >= num_classes {
            return Err(Error::Label {
                index: i,
                label: l,
                num_classes,
            });
        }
        counts[c][l] += 1;
    }
    Ok(counts)
}

/// Row-normalized histogram: each client's class distribution. Empty clients
/// get an all-zero row.
pub fn class_distribution(histogram: &[Vec<usize>]) -> Vec<Vec<f64>> {
    histogram
        .iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect()
        })
        .collect()
}

/// Writes `sample_index,client_id` rows.
pub fn write_assignment_csv<W: Write>(assignment: &[usize], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["sample_index", "client_id"])?;
    for (i, c) in assignment.iter().enumerate() {
        w.write_record([i.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an assignment CSV. Rows may come in any order but must cover every
/// sample index from 0 exactly once.
pub fn read_assignment_csv<R: Read>(reader: R) -> Result<Vec<usize>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["sample_index", "client_id"] {
        return Err(Error::parse(0, "expected header `sample_index,client_id`"));
    }
    let mut pairs = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let offset = record.position().map_or(0, |p| p.byte() as usize);
        let field = |j: usize| -> Result<usize> {
            record
                .get(j)
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| Error::parse(offset, format!("bad field {j} in `{record:?}`")))
        };
        pairs.push((field(0)?, field(1)?, offset));
    }
    let mut out = vec![None; pairs.len()];
    for (i, c, offset) in pairs {
        match out.get_mut(i) {
            Some(slot @ None) => *slot = Some(c),
            Some(Some(_)) => return Err(Error::parse(offset, format!("duplicate sample {i}"))),
            None => return Err(Error::parse(offset, format!("sample index {i} out of range"))),
        }
    }
    Ok(out.into_iter().map(|c| c.expect("every slot filled")).collect())
}
