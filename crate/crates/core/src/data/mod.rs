//! Embedding datasets: storage formats, synthetic generators and splits.

mod emb1;
mod split;
mod synth;
mod table;

pub use emb1::{
    encode_emb1, parse_emb1, read_emb1, read_emb1_file, write_emb1, write_emb1_file, EMB1_MAGIC, EMB1_VERSION};
pub use split::{holdout_per_class, split, Partition};
pub use synth::{
    synth_blobs, synth_shifted_blobs, synth_xor, BlobSpec, ShiftedBlobSpec, SyntheticBlobs,
    XorSpec, XOR_CLIENT_DOWN, XOR_CLIENT_UP,
};
pub use table::{read_csv, read_csv_file, write_csv, write_csv_file};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `N` embedding vectors with class labels in `[0, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset {
    features: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
    class_names: Option<Vec<String>>,
    clients: Option<Vec<usize>>,
}

impl EmbeddingDataset {
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::dim(format!(
                "{} labels for {} samples",
                labels.len(),
                features.rows()
            )));
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes)
        {
            return Err(Error::Label {
                index,
                label,
                num_classes,
            });
        }
        if !features.is_finite() {
            return Err(Error::config("features contain non-finite values"));
        }
        Ok(EmbeddingDataset {
            features,
            labels,
            num_classes,
            class_names: None,
            clients: None,
        })
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_classes {
            return Err(Error::dim(format!(
                "{} class names for {} classes",
                names.len(),
                self.num_classes
            )));
        }
        self.class_names = Some(names);
        Ok(self)
    }

    /// Attaches a per-sample client id vector.
    pub fn with_clients(mut self, clients: Vec<usize>) -> Result<Self> {
        if clients.len() != self.len() {
            return Err(Error::dim(format!(
                "{} client ids for {} samples",
                clients.len(),
                self.len()
            )));
        }
        self.clients = Some(clients);
        Ok(self)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn clients(&self) -> Option<&[usize]> {
        self.clients.as_deref()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Sample counts per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Subset in the given index order; client ids follow along.
    pub fn subset(&self, indices: &[usize]) -> EmbeddingDataset {
        EmbeddingDataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            class_names: self.class_names.clone(),
            clients: self
                .clients
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
        }
    }

    pub fn into_parts(self) -> (Matrix, Vec<usize>, usize) {
        (self.features, self.labels, self.num_classes)
    }
}
