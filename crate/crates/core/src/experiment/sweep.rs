use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, HeteroSpace, TrainTest};
use crate::data::EmbeddingDataset;
use crate::error::{Error, Result};
use crate::fed::{build_clients, evaluate, run_federated, write_rounds_csv, RoundRecord};
use crate::hetero::gamma_from_assignment;
use crate::nn::{save_checkpoint, ClassifierModel, ModelSpec, Task, UnitKind};
use crate::seeds::{child_rng, derive_seed};
use crate::simclients::{shuffle_assignment, simulate_clients_with, SimulatedClients};

/// One trained model in a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub proportion_index: usize,
    pub proportion: f64,
    pub repetition: usize,
    pub model_kind: UnitKind,
    pub test_metric: f64,
    pub gamma: f64,
    pub best_round: usize,
    pub best_val_loss: f64,
    pub best_val_metric: f64,
    #[serde(skip)]
    pub records: Vec<RoundRecord>,
    #[serde(skip)]
    pub best_model: ClassifierModel,
}

impl RunResult {
    /// File stem shared by this run's round CSV, JSON and checkpoint.
    pub fn stem(&self) -> String {
        format!(
            "p{}_r{}_{}",
            self.proportion_index,
            self.repetition,
            self.model_kind.as_str()
        )
    }
}

/// Mean and sample standard deviation over repetitions.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub proportion: f64,
    pub model_kind: UnitKind,
    pub repetitions: usize,
    pub mean_test_metric: f64,
    pub std_test_metric: f64,
    pub mean_gamma: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Ordered by proportion, repetition, then configured model kind order.
    pub runs: Vec<RunResult>,
}

impl SweepOutcome {
    pub fn summaries(&self, cfg: &ExperimentConfig) -> Vec<CellSummary> {
        let mut out = Vec::new();
        for (pi, &p) in cfg.proportions.iter().enumerate() {
            for &kind in &cfg.model_kinds {
                let cell: Vec<&RunResult> = self
                    .runs
                    .iter()
                    .filter(|r| r.proportion_index == pi && r.model_kind == kind)
                    .collect();
                let n = cell.len() as f64;
                let mean = cell.iter().map(|r| r.test_metric).sum::<f64>() / n;
                let var = if cell.len() > 1 {
                    cell.iter().map(|r| (r.test_metric - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                out.push(CellSummary {
                    proportion: p,
                    model_kind: kind,
                    repetitions: cell.len(),
                    mean_test_metric: mean,
                    std_test_metric: var.sqrt(),
                    mean_gamma: cell.iter().map(|r| r.gamma).sum::<f64>() / n,
                });
            }
        }
        out
    }

    /// Mean test metric of one (proportion index, kind) cell.
    pub fn mean_metric(&self, proportion_index: usize, kind: UnitKind) -> Option<f64> {
        let vals: Vec<f64> = self
            .runs
            .iter()
            .filter(|r| r.proportion_index == proportion_index && r.model_kind == kind)
            .map(|r| r.test_metric)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

struct Prepared {
    train: EmbeddingDataset,
    test: EmbeddingDataset,
    gamma: f64,
}

fn prepare_repetition(cfg: &ExperimentConfig, rep: usize) -> Result<(TrainTest, SimulatedClients)> {
    let data = cfg.dataset.load(rep)?;
    let sim = simulate_clients_with(
        &data.train,
        &data.test,
        cfg.federated.num_clients,
        cfg.pca_components,
        derive_seed(cfg.seed, "simulate", &[rep as u64]),
    )?;
    Ok((data, sim))
}

fn prepare_cell(
    cfg: &ExperimentConfig,
    pi: usize,
    rep: usize,
    data: &TrainTest,
    sim: &SimulatedClients,
) -> Result<Prepared> {
    let p = cfg.proportions[pi];
    let idx = [pi as u64, rep as u64];
    let train_a = shuffle_assignment(&sim.train, p, derive_seed(cfg.seed, "shuffle-train", &idx))?;
    let test_a = shuffle_assignment(&sim.test, p, derive_seed(cfg.seed, "shuffle-test", &idx))?;
    let space = match cfg.hetero_space {
        HeteroSpace::Pca => &sim.train_projected,
        HeteroSpace::Full => data.train.features(),
    };
    let gamma = if cfg.federated.num_clients >= 2 {
        gamma_from_assignment(space, &train_a.assignment, cfg.federated.num_clients)?.gamma
    } else {
        0.0
    };
    Ok(Prepared {
        train: train_a.attach(&data.train)?,
        test: test_a.attach(&data.test)?,
        gamma,
    })
}

fn run_cell(
    cfg: &ExperimentConfig,
    pi: usize,
    rep: usize,
    kind_index: usize,
    prep: &Prepared,
) -> Result<RunResult> {
    let kind = cfg.model_kinds[kind_index];
    let idx = [pi as u64, rep as u64, kind_index as u64];
    let num_classes = prep.train.num_classes().max(prep.test.num_classes());
    let spec = ModelSpec {
        input_dim: prep.train.dim(),
        hidden: cfg.model.hidden.clone(),
        kind,
        task: Task::for_classes(num_classes),
        dropout: cfg.model.dropout,
        num_clients: cfg.federated.num_clients,
    };
    let template = ClassifierModel::init(&spec, &mut child_rng(cfg.seed, "init", &idx))?;
    let mut fed = cfg.federated.clone();
    fed.seed = derive_seed(cfg.seed, "train", &idx);
    let mut clients = build_clients(
        &prep.train,
        fed.num_clients,
        fed.validation_fraction,
        derive_seed(cfg.seed, "validation", &idx[..2]),
    )?;
    let outcome = run_federated(&template, &mut clients, &fed)?;
    let test_metric = evaluate(&outcome.best_model, &prep.test, fed.metric)?;
    Ok(RunResult {
        proportion_index: pi,
        proportion: cfg.proportions[pi],
        repetition: rep,
        model_kind: kind,
        test_metric,
        gamma: prep.gamma,
        best_round: outcome.best_round,
        best_val_loss: outcome.best_val_loss,
        best_val_metric: outcome.best_val_metric,
        records: outcome.records,
        best_model: outcome.best_model,
    })
}

/// Runs every (proportion, repetition, model kind) cell. Data and client
/// simulation are shared by all cells of a repetition, and the shuffled
/// assignment by both model kinds of a (proportion, repetition) pair, so
/// the kinds are compared on identical clients. Cells run on the current
/// rayon pool; results do not depend on the thread count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let reps: Vec<(TrainTest, SimulatedClients)> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| prepare_repetition(cfg, rep))
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = (0..cfg.proportions.len())
        .flat_map(|pi| (0..cfg.repetitions).map(move |rep| (pi, rep)))
        .collect();
    let prepared: Vec<Prepared> = pairs
        .par_iter()
        .map(|&(pi, rep)| prepare_cell(cfg, pi, rep, &reps[rep].0, &reps[rep].1))
        .collect::<Result<_>>()?;

    let kinds = cfg.model_kinds.len();
    let runs: Vec<RunResult> = (0..pairs.len() * kinds)
        .into_par_iter()
        .map(|i| {
            let (pi, rep) = pairs[i / kinds];
            run_cell(cfg, pi, rep, i % kinds, &prepared[i / kinds])
        })
        .collect::<Result<_>>()?;
    Ok(SweepOutcome { runs })
}

/// Creates `dir` and checks that files can be written there.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::file(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::file(&probe, e))?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::file(path, e))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::file(path, e))
}

/// Long-format results table, one row per run.
pub fn write_results_csv<W: std::io::Write>(runs: &[RunResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "proportion",
        "repetition",
        "model_kind",
        "test_metric",
        "gamma",
        "best_round",
    ])?;
    for r in runs {
        w.write_record([
            r.proportion.to_string(),
            r.repetition.to_string(),
            r.model_kind.as_str().to_string(),
            r.test_metric.to_string(),
            r.gamma.to_string(),
            r.best_round.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    config: &'a ExperimentConfig,
    cells: Vec<CellSummary>,
    runs: &'a [RunResult],
}

/// Writes `results.csv`, `summary.json` and, per run,
/// `rounds/<stem>.csv`, `runs/<stem>.json` and `models/<stem>.ckpt`.
/// No file contains timestamps, so reruns are byte-identical.
pub fn write_sweep(outcome: &SweepOutcome, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    for sub in ["rounds", "runs", "models"] {
        let d = dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::file(&d, e))?;
    }
    outcome.runs.par_iter().try_for_each(|run| -> Result<()> {
        let stem = run.stem();
        write_rounds_csv(&run.records, create(&dir.join("rounds").join(format!("{stem}.csv")))?)?;
        write_json(&dir.join("runs").join(format!("{stem}.json")), run)?;
        save_checkpoint(&run.best_model, dir.join("models").join(format!("{stem}.ckpt")))
    })?;
    write_results_csv(&outcome.runs, create(&dir.join("results.csv"))?)?;
    write_json(
        &dir.join("summary.json"),
        &SweepSummary {
            config: cfg,
            cells: outcome.summaries(cfg),
            runs: &outcome.runs,
        },
    )
}
