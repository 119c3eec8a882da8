use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    read_csv_file, read_emb1_file, split, synth_blobs, synth_shifted_blobs, BlobSpec,
    EmbeddingDataset, ShiftedBlobSpec,
};
use crate::error::{Error, Result};
use crate::fed::FederatedConfig;
use crate::nn::UnitKind;
use crate::seeds::derive_seed;

/// Where a sweep's train and test data come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Separate EMB1 files for training and test data.
    Emb1 { train: PathBuf, test: PathBuf },
    /// Separate labelled CSV tables.
    Csv { train: PathBuf, test: PathBuf },
    /// Lattice blobs, regenerated per repetition and split stratified into
    /// train and test.
    Blobs {
        #[serde(flatten)]
        spec: BlobSpec,
        test_fraction: f64,
    },
    /// Class-shifted blobs (see [`ShiftedBlobSpec`]).
    ShiftedBlobs {
        #[serde(flatten)]
        spec: ShiftedBlobSpec,
        test_fraction: f64,
    },
}

#[derive(Debug, Clone)]
pub struct TrainTest {
    pub train: EmbeddingDataset,
    pub test: EmbeddingDataset,
}

fn split_synthetic(ds: EmbeddingDataset, test_fraction: f64, seed: u64) -> Result<TrainTest> {
    let parts = split(&ds, &[1.0 - test_fraction, test_fraction], true, seed)?;
    let mut sets = parts.apply(&ds).into_iter();
    Ok(TrainTest {
        train: sets.next().expect("two parts"),
        test: sets.next().expect("two parts"),
    })
}

impl DatasetSource {
    /// Relative paths resolve against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let DatasetSource::Emb1 { train, test } | DatasetSource::Csv { train, test } = self {
            for p in [train, test] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }

    fn check_fraction(f: f64) -> Result<()> {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Range {
                name: "test_fraction",
                value: f,
                range: "(0, 1)",
            });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DatasetSource::Emb1 { train, test } | DatasetSource::Csv { train, test } => {
                for p in [train, test] {
                    if !p.is_file() {
                        return Err(Error::config(format!("dataset file {} not found", p.display())));
                    }
                }
                Ok(())
            }
            DatasetSource::Blobs { test_fraction, .. }
            | DatasetSource::ShiftedBlobs { test_fraction, .. } => {
                Self::check_fraction(*test_fraction)
            }
        }
    }

    /// True when [`DatasetSource::load`] depends on the repetition index.
    pub fn varies_by_repetition(&self) -> bool {
        matches!(
            self,
            DatasetSource::Blobs { .. } | DatasetSource::ShiftedBlobs { .. }
        )
    }

    /// Loads or generates the data for one repetition. Synthetic sources
    /// derive their generator and split seeds from the spec seed and the
    /// repetition.
    pub fn load(&self, repetition: usize) -> Result<TrainTest> {
        let rep = repetition as u64;
        match self {
            DatasetSource::Emb1 { train, test } => Ok(TrainTest {
                train: read_emb1_file(train)?,
                test: read_emb1_file(test)?,
            }),
            DatasetSource::Csv { train, test } => Ok(TrainTest {
                train: read_csv_file(train)?,
                test: read_csv_file(test)?,
            }),
            DatasetSource::Blobs {
                spec,
                test_fraction,
            } => {
                let mut spec = spec.clone();
                let base = spec.seed;
                spec.seed = derive_seed(base, "data", &[rep]);
                let ds = synth_blobs(&spec)?.dataset;
                split_synthetic(ds, *test_fraction, derive_seed(base, "split", &[rep]))
            }
            DatasetSource::ShiftedBlobs {
                spec,
                test_fraction,
            } => {
                let mut spec = spec.clone();
                let base = spec.seed;
                spec.seed = derive_seed(base, "data", &[rep]);
                let ds = synth_shifted_blobs(&spec)?.dataset;
                split_synthetic(ds, *test_fraction, derive_seed(base, "split", &[rep]))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: vec![64, 64],
            dropout: 0.5,
        }
    }
}

/// Space in which Γ is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeteroSpace {
    /// The projection used for client simulation.
    #[default]
    Pca,
    /// Raw embedding dimensions.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub federated: FederatedConfig,
    #[serde(default = "default_proportions")]
    pub proportions: Vec<f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_kinds")]
    pub model_kinds: Vec<UnitKind>,
    #[serde(default)]
    pub hetero_space: HeteroSpace,
    #[serde(default = "default_components")]
    pub pca_components: usize,
}

fn default_proportions() -> Vec<f64> {
    vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
}

fn default_repetitions() -> usize {
    12
}

fn default_kinds() -> Vec<UnitKind> {
    vec![UnitKind::Cgau, UnitKind::Relu]
}

fn default_components() -> usize {
    crate::simclients::DEFAULT_COMPONENTS
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a JSON config; relative dataset paths resolve against the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            cfg.dataset.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.federated.validate()?;
        if self.proportions.is_empty() {
            return Err(Error::config("at least one shuffle proportion is required"));
        }
        if let Some(&p) = self.proportions.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Range {
                name: "shuffle proportion",
                value: p,
                range: "[0, 1]",
            });
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        if self.model_kinds.is_empty() {
            return Err(Error::config("at least one model kind is required"));
        }
        let mut kinds = self.model_kinds.clone();
        kinds.dedup();
        if kinds.len() != self.model_kinds.len() || (kinds.len() == 2 && kinds[0] == kinds[1]) {
            return Err(Error::config("model kinds must be distinct"));
        }
        if self.model.hidden.contains(&0) {
            return Err(Error::config("hidden widths must be positive"));
        }
        if self.model_kinds.contains(&UnitKind::Cgau) && self.model.hidden.is_empty() {
            return Err(Error::config("a CGAU model needs at least one hidden layer"));
        }
        if !(0.0..1.0).contains(&self.model.dropout) {
            return Err(Error::Range {
                name: "dropout",
                value: self.model.dropout,
                range: "[0, 1)",
            });
        }
        if self.pca_components == 0 {
            return Err(Error::config("pca_components must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dataset": {"kind": "blobs", "num_classes": 2, "blobs_per_class": 2,
                    "samples_per_blob": 10, "dim": 3, "separation": 10.0,
                    "spread": 0.5, "seed": 1, "test_fraction": 0.2}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.repetitions, 12);
        assert_eq!(cfg.proportions.len(), 6);
        assert_eq!(cfg.model.hidden, vec![64, 64]);
        assert_eq!(cfg.federated.learning_rate, 0.01);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.proportions = vec![1.5];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.model_kinds = vec![UnitKind::Relu, UnitKind::Relu];
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"dataset": {"kind": "nope"}}"#).is_err());
        let typo = MINIMAL.replace("\"dataset\"", "\"repetitons\": 1, \"dataset\"");
        assert!(ExperimentConfig::from_json(&typo).is_err());
    }

    #[test]
    fn synthetic_split_is_deterministic() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        let a = cfg.dataset.load(0).unwrap();
        let b = cfg.dataset.load(0).unwrap();
        let c = cfg.dataset.load(1).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.train.len(), 32);
        assert_eq!(a.test.len(), 8);
        assert_ne!(a.train, c.train);
    }
}
