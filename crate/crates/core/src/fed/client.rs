use crate::data::{holdout_per_class, EmbeddingDataset};
use crate::error::{Error, Result};
use crate::nn::{ClassifierModel, HiddenLayer, MomentumState};
use crate::seeds::derive_seed;

/// One CGAU layer's conditioning rows for a single client.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningRows {
    pub layer: usize,
    pub filter: Vec<f64>,
    pub gate: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ClientState {
    pub(crate) client_id: usize,
    pub(crate) train: EmbeddingDataset,
    validation: EmbeddingDataset,
    pub(crate) conditioning: Vec<ConditioningRows>,
    pub(crate) momentum: Option<MomentumState>,
    pub(crate) times_sampled: usize,
}

impl ClientState {
    pub fn new(client_id: usize, train: EmbeddingDataset, validation: EmbeddingDataset) -> Self {
        ClientState {
            client_id,
            train,
            validation,
            conditioning: Vec::new(),
            momentum: None,
            times_sampled: 0,
        }
    }

    pub fn client_id(&self) -> usize {
        self.client_id
    }

    pub fn train(&self) -> &EmbeddingDataset {
        &self.train
    }

    pub fn validation(&self) -> &EmbeddingDataset {
        &self.validation
    }

    /// Local conditioning rows; empty until the client joins a run with a
    /// conditioned model.
    pub fn conditioning(&self) -> &[ConditioningRows] {
        &self.conditioning
    }

    pub fn times_sampled(&self) -> usize {
        self.times_sampled
    }

    /// Copies this client's rows out of a full model.
    pub(crate) fn load_rows(&mut self, model: &ClassifierModel) {
        self.conditioning = model
            .hidden()
            .iter()
            .enumerate()
            .filter_map(|(layer, l)| match l {
                HiddenLayer::Cgau(c) => Some(ConditioningRows {
                    layer,
                    filter: c.v_filter.row(self.client_id).to_vec(),
                    gate: c.v_gate.row(self.client_id).to_vec(),
                }),
                HiddenLayer::Relu(_) => None,
            })
            .collect();
    }

    /// Writes this client's rows into a model.
    pub(crate) fn store_rows(&self, model: &mut ClassifierModel) {
        for rows in &self.conditioning {
            if let HiddenLayer::Cgau(c) = &mut model.hidden_mut()[rows.layer] {
                c.v_filter.row_mut(self.client_id).copy_from_slice(&rows.filter);
                c.v_gate.row_mut(self.client_id).copy_from_slice(&rows.gate);
            }
        }
    }
}

/// Splits a client-labelled dataset into per-client train and validation
/// slices. Each client holds out `round(fraction · n_c)` samples of every
/// class `c`, using a seed derived from `(seed, client)`.
pub fn build_clients(
    ds: &EmbeddingDataset,
    num_clients: usize,
    validation_fraction: f64,
    seed: u64,
) -> Result<Vec<ClientState>> {
    let clients = ds
        .clients()
        .ok_or_else(|| Error::config("dataset has no client assignment"))?;
    let mut members = vec![Vec::new(); num_clients];
    for (i, &c) in clients.iter().enumerate() {
        if c >= num_clients {
            return Err(Error::config(format!(
                "sample {i} assigned to client {c} of {num_clients}"
            )));
        }
        members[c].push(i);
    }
    members
        .iter()
        .enumerate()
        .map(|(k, idx)| {
            if idx.is_empty() {
                return Err(Error::config(format!("client {k} has no samples")));
            }
            let local = ds.subset(idx);
            let parts = holdout_per_class(
                local.labels(),
                validation_fraction,
                derive_seed(seed, "validation", &[k as u64]),
            )?;
            let train = local.subset(&parts.parts[0]);
            if train.is_empty() {
                return Err(Error::config(format!(
                    "client {k} has no training samples"
                )));
            }
            Ok(ClientState::new(k, train, local.subset(&parts.parts[1])))
        })
        .collect()
}
