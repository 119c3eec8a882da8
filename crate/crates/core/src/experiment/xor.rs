use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{synth_xor, EmbeddingDataset, XorSpec};
use crate::error::{Error, Result};
use crate::fed::{accuracy, build_clients, run_federated, FederatedConfig, Metric};
use crate::linalg::Matrix;
use crate::nn::{
    argmax_predictions, ClassifierModel, ClientOneHot, HiddenLayer, ModelSpec, Task, UnitKind,
};
use crate::seeds::{child_rng, derive_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XorConfig {
    pub data: XorSpec,
    pub rounds: usize,
    pub local_steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Hidden units of the unconditioned ReLU baseline.
    pub relu_units: usize,
    /// Conditioned units of the CGAU model.
    pub cgau_units: usize,
    /// Grid points per axis over `[−extent, extent]²`.
    pub grid_points: usize,
    pub grid_extent: f64,
    pub seed: u64,
}

impl Default for XorConfig {
    fn default() -> Self {
        XorConfig {
            data: XorSpec::default(),
            rounds: 2000,
            local_steps: 10,
            batch_size: 32,
            learning_rate: 0.1,
            relu_units: 2,
            cgau_units: 1,
            grid_points: 41,
            grid_extent: 2.0,
            seed: 0,
        }
    }
}

/// Which conditioning rows are kept when evaluating the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Full,
    /// Filter rows zeroed.
    NoModulation,
    /// Gate rows zeroed.
    NoExpression,
}

impl Ablation {
    pub const ALL: [Ablation; 3] = [Ablation::Full, Ablation::NoModulation, Ablation::NoExpression];

    pub fn as_str(&self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoModulation => "no_modulation",
            Ablation::NoExpression => "no_expression",
        }
    }

    pub fn apply(&self, model: &ClassifierModel) -> ClassifierModel {
        let mut out = model.clone();
        for layer in out.hidden_mut() {
            if let HiddenLayer::Cgau(c) = layer {
                match self {
                    Ablation::Full => {}
                    Ablation::NoModulation => c.v_filter.fill(0.0),
                    Ablation::NoExpression => c.v_gate.fill(0.0),
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct XorModelReport {
    pub model_kind: UnitKind,
    /// Training accuracy of the final model per client (up, down), over all
    /// of the client's samples.
    pub client_accuracy: Vec<f64>,
    pub best_round: usize,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationDelta {
    pub ablation: Ablation,
    /// Largest `|logit_ablated − logit_full|` over the grid and both clients.
    pub max_abs_logit_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct XorReport {
    pub config: XorConfig,
    pub models: Vec<XorModelReport>,
    pub ablations: Vec<AblationDelta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub model_kind: UnitKind,
    pub client: usize,
    pub ablation: Ablation,
    pub x1: f64,
    pub x2: f64,
    pub logit: f64,
}

pub struct XorOutcome {
    pub report: XorReport,
    pub grid: Vec<GridRow>,
    pub cgau: ClassifierModel,
    pub relu: ClassifierModel,
}

fn grid_points(cfg: &XorConfig) -> Result<Matrix> {
    let n = cfg.grid_points;
    if n < 2 {
        return Err(Error::config("grid_points must be at least 2"));
    }
    let step = 2.0 * cfg.grid_extent / (n - 1) as f64;
    let coord = |i: usize| -cfg.grid_extent + i as f64 * step;
    Ok(Matrix::from_fn(n * n, 2, |r, c| {
        if c == 0 {
            coord(r % n)
        } else {
            coord(r / n)
        }
    }))
}

fn train_model(
    cfg: &XorConfig,
    ds: &EmbeddingDataset,
    kind: UnitKind,
    units: usize,
) -> Result<(ClassifierModel, XorModelReport)> {
    let idx = [kind as u64];
    let spec = ModelSpec {
        input_dim: 2,
        hidden: vec![units],
        kind,
        task: Task::Binary,
        dropout: 0.0,
        num_clients: 2,
    };
    let template = ClassifierModel::init(&spec, &mut child_rng(cfg.seed, "xor-init", &idx))?;
    let fed = FederatedConfig {
        num_clients: 2,
        clients_per_round: 2,
        local_steps: cfg.local_steps,
        batch_size: cfg.batch_size,
        rounds: cfg.rounds,
        learning_rate: cfg.learning_rate,
        seed: derive_seed(cfg.seed, "xor-train", &idx),
        metric: Metric::Accuracy,
        ..FederatedConfig::default()
    };
    let mut clients = build_clients(ds, 2, fed.validation_fraction, derive_seed(cfg.seed, "xor-val", &[]))?;
    let outcome = run_federated(&template, &mut clients, &fed)?;
    let model = outcome.final_model;
    let labels = ds.labels();
    let owners = ds.clients().expect("xor data carries clients");
    let mut client_accuracy = Vec::new();
    for k in 0..2 {
        let idx: Vec<usize> = (0..ds.len()).filter(|&i| owners[i] == k).collect();
        let x = ds.features().select_rows(&idx);
        let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        let logits = model.predict(&x, ClientOneHot::new(k, 2)?)?;
        client_accuracy.push(accuracy(&argmax_predictions(&logits, Task::Binary), &y)?);
    }
    let report = XorModelReport {
        model_kind: kind,
        client_accuracy,
        best_round: outcome.best_round,
        final_train_loss: outcome
            .records
            .last()
            .map_or(f64::NAN, |r| r.mean_client_train_loss),
    };
    Ok((model, report))
}

/// Trains a conditioned CGAU model and an unconditioned ReLU MLP on the
/// two-client XOR data and evaluates both over a logit grid, including the
/// CGAU model with filter or gate conditioning switched off.
pub fn run_xor(cfg: &XorConfig) -> Result<XorOutcome> {
    if cfg.relu_units == 0 || cfg.cgau_units == 0 {
        return Err(Error::config("hidden widths must be positive"));
    }
    let ds = synth_xor(&cfg.data)?;
    let (cgau, cgau_report) = train_model(cfg, &ds, UnitKind::Cgau, cfg.cgau_units)?;
    let (relu, relu_report) = train_model(cfg, &ds, UnitKind::Relu, cfg.relu_units)?;

    let pts = grid_points(cfg)?;
    let mut grid = Vec::new();
    let mut full_logits: Vec<Matrix> = Vec::new();
    let mut ablations = Vec::new();
    for ablation in Ablation::ALL {
        let model = ablation.apply(&cgau);
        let mut max_diff = 0.0f64;
        for client in 0..2 {
            let logits = model.predict(&pts, ClientOneHot::new(client, 2)?)?;
            if ablation == Ablation::Full {
                full_logits.push(logits.clone());
            } else {
                max_diff = max_diff.max(logits.sub(&full_logits[client])?.max_abs());
            }
            push_rows(&mut grid, UnitKind::Cgau, client, ablation, &pts, &logits);
        }
        if ablation != Ablation::Full {
            ablations.push(AblationDelta {
                ablation,
                max_abs_logit_difference: max_diff,
            });
        }
    }
    for client in 0..2 {
        let logits = relu.predict(&pts, ClientOneHot::new(client, 2)?)?;
        push_rows(&mut grid, UnitKind::Relu, client, Ablation::Full, &pts, &logits);
    }
    Ok(XorOutcome {
        report: XorReport {
            config: cfg.clone(),
            models: vec![cgau_report, relu_report],
            ablations,
        },
        grid,
        cgau,
        relu,
    })
}

fn push_rows(
    grid: &mut Vec<GridRow>,
    kind: UnitKind,
    client: usize,
    ablation: Ablation,
    pts: &Matrix,
    logits: &Matrix,
) {
    for (i, p) in pts.row_iter().enumerate() {
        grid.push(GridRow {
            model_kind: kind,
            client,
            ablation,
            x1: p[0],
            x2: p[1],
            logit: logits[(i, 0)],
        });
    }
}

pub fn write_grid_csv<W: Write>(rows: &[GridRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model_kind", "client", "ablation", "x1", "x2", "logit"])?;
    for r in rows {
        w.write_record([
            r.model_kind.as_str().to_string(),
            r.client.to_string(),
            r.ablation.as_str().to_string(),
            r.x1.to_string(),
            r.x2.to_string(),
            r.logit.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
