//! Federated averaging over simulated clients.
//!
//! Shared parameters (every weight and bias) are averaged by the server each
//! round. Conditioning rows of CGAU layers stay with their client: a client
//! receives the global shared parameters plus only its own rows, and the
//! server never aggregates or forwards them.

mod client;
mod metrics;
mod train;

pub use client::{build_clients, ClientState, ConditioningRows};
pub use metrics::{accuracy, auc, evaluate, predict_dataset, Metric};
pub use train::{
    average_shared, run_federated, run_federated_observed, write_rounds_csv, FederatedOutcome,
    RoundRecord,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Uniform,
    #[default]
    SampleWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumConfig {
    pub coefficient: f64,
    #[serde(default = "default_true")]
    pub reset_each_round: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FederatedConfig {
    pub num_clients: usize,
    pub clients_per_round: usize,
    pub local_steps: usize,
    pub batch_size: usize,
    pub rounds: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub averaging: Averaging,
    pub momentum: Option<MomentumConfig>,
    pub metric: Metric,
    pub validation_fraction: f64,
}

impl Default for FederatedConfig {
    fn default() -> Self {
        FederatedConfig {
            num_clients: 10,
            clients_per_round: 10,
            local_steps: 10,
            batch_size: 32,
            rounds: 1000,
            learning_rate: 0.01,
            seed: 0,
            averaging: Averaging::SampleWeighted,
            momentum: None,
            metric: Metric::Accuracy,
            validation_fraction: 0.05,
        }
    }
}

impl FederatedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_clients == 0 {
            return Err(Error::config("num_clients must be at least 1"));
        }
        if self.clients_per_round == 0 || self.clients_per_round > self.num_clients {
            return Err(Error::config(format!(
                "clients_per_round {} must be in 1..={}",
                self.clients_per_round, self.num_clients
            )));
        }
        if self.local_steps == 0 {
            return Err(Error::config("local_steps must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if self.rounds == 0 {
            return Err(Error::config("rounds must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Range {
                name: "learning_rate",
                value: self.learning_rate,
                range: "(0, inf)",
            });
        }
        if let Some(m) = &self.momentum {
            if !(0.0..1.0).contains(&m.coefficient) {
                return Err(Error::Range {
                    name: "momentum",
                    value: m.coefficient,
                    range: "[0, 1)",
                });
            }
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Range {
                name: "validation_fraction",
                value: self.validation_fraction,
                range: "[0, 1)",
            });
        }
        Ok(())
    }
}
