use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, HeteroSpace};
use crate::data::{read_csv_file, read_emb1_file, write_csv_file, write_emb1_file, EmbeddingDataset};
use crate::error::{Error, Result};
use crate::hetero::gamma_from_assignment;
use crate::seeds::derive_seed;
use crate::simclients::{
    class_histogram, shuffle_assignment, simulate_clients_with, ClientAssignment,
    SimulatedClients,
};

#[derive(Debug, Clone, Serialize)]
pub struct HeteroEntry {
    pub proportion: Option<f64>,
    pub repetition: usize,
    pub gamma: f64,
    pub per_client: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeteroReport {
    pub space: HeteroSpace,
    pub num_clients: usize,
    pub entries: Vec<HeteroEntry>,
}

fn simulate(cfg: &ExperimentConfig, rep: usize) -> Result<(EmbeddingDataset, SimulatedClients)> {
    let data = cfg.dataset.load(rep)?;
    let sim = simulate_clients_with(
        &data.train,
        &data.test,
        cfg.federated.num_clients,
        cfg.pca_components,
        derive_seed(cfg.seed, "simulate", &[rep as u64]),
    )?;
    Ok((data.train, sim))
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::config(format!("heterogeneity needs at least 2 clients, got {k}")));
    }
    Ok(())
}

/// Γ of the training data for every proportion and repetition, using the
/// same seeds as a sweep with this config.
pub fn hetero_report(cfg: &ExperimentConfig) -> Result<HeteroReport> {
    cfg.validate()?;
    let k = cfg.federated.num_clients;
    check_k(k)?;
    let mut entries = Vec::new();
    for rep in 0..cfg.repetitions {
        let (train, sim) = simulate(cfg, rep)?;
        let space = match cfg.hetero_space {
            HeteroSpace::Pca => &sim.train_projected,
            HeteroSpace::Full => train.features(),
        };
        for (pi, &p) in cfg.proportions.iter().enumerate() {
            let a = shuffle_assignment(
                &sim.train,
                p,
                derive_seed(cfg.seed, "shuffle-train", &[pi as u64, rep as u64]),
            )?;
            let r = gamma_from_assignment(space, &a.assignment, k)?;
            entries.push(HeteroEntry {
                proportion: Some(p),
                repetition: rep,
                gamma: r.gamma,
                per_client: r.per_client,
            });
        }
    }
    entries.sort_by(|a, b| a.proportion.partial_cmp(&b.proportion).expect("finite"));
    Ok(HeteroReport {
        space: cfg.hetero_space,
        num_clients: k,
        entries,
    })
}

/// Γ of a dataset under an explicit assignment. The PCA space is fitted on
/// the dataset itself.
pub fn hetero_for_assignment(
    ds: &EmbeddingDataset,
    assignment: &[usize],
    space: HeteroSpace,
    components: usize,
) -> Result<HeteroReport> {
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    check_k(k)?;
    let report = match space {
        HeteroSpace::Full => gamma_from_assignment(ds.features(), assignment, k)?,
        HeteroSpace::Pca => {
            let pca = crate::linalg::pca_fit(ds.features(), components.min(ds.dim()))?;
            gamma_from_assignment(&pca.transform(ds.features())?, assignment, k)?
        }
    };
    Ok(HeteroReport {
        space,
        num_clients: k,
        entries: vec![HeteroEntry {
            proportion: None,
            repetition: 0,
            gamma: report.gamma,
            per_client: report.per_client,
        }],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AssignmentSummary {
    pub proportion: f64,
    pub num_clients: usize,
    /// `[client][class]` sample counts.
    pub train_histogram: Vec<Vec<usize>>,
    pub test_histogram: Vec<Vec<usize>>,
}

pub struct SimulatedAssignment {
    pub train: ClientAssignment,
    pub test: ClientAssignment,
    pub summary: AssignmentSummary,
}

/// Client assignment of the first repetition's data at one proportion.
pub fn simulate_assignment(cfg: &ExperimentConfig, proportion: f64) -> Result<SimulatedAssignment> {
    cfg.validate()?;
    let pi = cfg
        .proportions
        .iter()
        .position(|&p| p == proportion)
        .unwrap_or(cfg.proportions.len());
    let data = cfg.dataset.load(0)?;
    let (_, sim) = simulate(cfg, 0)?;
    let idx = [pi as u64, 0];
    let train = shuffle_assignment(&sim.train, proportion, derive_seed(cfg.seed, "shuffle-train", &idx))?;
    let test = shuffle_assignment(&sim.test, proportion, derive_seed(cfg.seed, "shuffle-test", &idx))?;
    let k = cfg.federated.num_clients;
    let c = data.train.num_classes().max(data.test.num_classes());
    let summary = AssignmentSummary {
        proportion,
        num_clients: k,
        train_histogram: class_histogram(&train.assignment, data.train.labels(), k, c)?,
        test_histogram: class_histogram(&test.assignment, data.test.labels(), k, c)?,
    };
    Ok(SimulatedAssignment {
        train,
        test,
        summary,
    })
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

/// Reads a dataset, choosing the format from the extension (`.csv` or
/// `.emb1`).
pub fn read_dataset(path: &Path) -> Result<EmbeddingDataset> {
    match extension(path).as_deref() {
        Some("csv") => read_csv_file(path),
        Some("emb1") => read_emb1_file(path),
        _ => Err(Error::config(format!(
            "{}: expected a .csv or .emb1 extension",
            path.display()
        ))),
    }
}

pub fn write_dataset(ds: &EmbeddingDataset, path: &Path) -> Result<()> {
    match extension(path).as_deref() {
        Some("csv") => write_csv_file(ds, path),
        Some("emb1") => write_emb1_file(ds, path),
        _ => Err(Error::config(format!(
            "{}: expected a .csv or .emb1 extension",
            path.display()
        ))),
    }
}

/// Converts between CSV and EMB1.
pub fn convert(input: &Path, output: &Path) -> Result<()> {
    let ds = read_dataset(input)?;
    write_dataset(&ds, output)
}
