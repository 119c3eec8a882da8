//! Finite-difference verification of [`ClassifierModel::loss_and_gradients`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::layers::ClientOneHot;
use super::model::{BlockRole, ClassifierModel, Gradients, HiddenLayer, ModelSpec, Task, UnitKind};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Denominator floor for the relative error.
pub const DENOMINATOR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub configs: usize,
    pub epsilon: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            configs: 100,
            epsilon: 1e-5,
            tolerance: 1e-5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    pub layer: usize,
    pub name: String,
    pub entries: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub index: usize,
    pub description: String,
    pub blocks: Vec<BlockReport>,
}

impl CaseReport {
    pub fn max_rel_error(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_rel_error).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub cases: Vec<CaseReport>,
}

impl GradCheckReport {
    /// Largest relative error over all cases; 0 when nothing was checked.
    pub fn max_rel_error(&self) -> f64 {
        self.cases.iter().map(CaseReport::max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tolerance
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseReport> {
        self.cases
            .iter()
            .filter(|c| !(c.max_rel_error() < self.tolerance))
    }
}

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(DENOMINATOR_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Central differences `(L(p + ε) − L(p − ε)) / 2ε` for every parameter,
/// evaluated without dropout.
pub fn numerical_gradients(
    model: &ClassifierModel,
    x: &Matrix,
    labels: &[usize],
    h: ClientOneHot,
    epsilon: f64,
) -> Result<Gradients> {
    if !(epsilon > 0.0) {
        return Err(Error::Range {
            name: "epsilon",
            value: epsilon,
            range: "(0, inf)",
        });
    }
    let mut probe = model.clone();
    let mut grads = model.zeros_like();
    let nblocks = model.blocks().len();
    for b in 0..nblocks {
        let len = model.blocks()[b].1.as_slice().len();
        for i in 0..len {
            let orig = model.blocks()[b].1.as_slice()[i];
            probe.blocks_mut()[b].1.as_mut_slice()[i] = orig + epsilon;
            let plus = probe.loss(x, labels, h)?;
            probe.blocks_mut()[b].1.as_mut_slice()[i] = orig - epsilon;
            let minus = probe.loss(x, labels, h)?;
            probe.blocks_mut()[b].1.as_mut_slice()[i] = orig;
            grads.blocks_mut()[b].1.as_mut_slice()[i] = (plus - minus) / (2.0 * epsilon);
        }
    }
    Ok(grads)
}

/// Per-block maximum relative error between two gradient sets of the same
/// layout.
pub fn compare(analytic: &Gradients, numeric: &Gradients) -> Result<Vec<BlockReport>> {
    if !analytic.same_shape(numeric) {
        return Err(Error::dim("gradient layouts differ"));
    }
    Ok(analytic
        .blocks()
        .iter()
        .zip(numeric.blocks())
        .map(|((info, a), (_, n))| BlockReport {
            layer: info.layer,
            name: info.name.to_string(),
            entries: a.as_slice().len(),
            max_rel_error: a
                .as_slice()
                .iter()
                .zip(n.as_slice())
                .map(|(&a, &n)| relative_error(a, n))
                .fold(0.0, f64::max),
        })
        .collect())
}

/// Analytic against numerical gradients for one model and batch.
pub fn check_model(
    model: &ClassifierModel,
    x: &Matrix,
    labels: &[usize],
    h: ClientOneHot,
    epsilon: f64,
) -> Result<Vec<BlockReport>> {
    let (_, analytic) = model.loss_and_gradients(x, labels, h, None)?;
    let numeric = numerical_gradients(model, x, labels, h, epsilon)?;
    compare(&analytic, &numeric)
}

/// A randomly drawn small model with a matching batch.
#[derive(Debug, Clone)]
pub struct GradCheckCase {
    pub model: ClassifierModel,
    pub x: Matrix,
    pub labels: Vec<usize>,
    pub client: ClientOneHot,
}

impl GradCheckCase {
    pub fn describe(&self) -> String {
        let widths: Vec<String> = self
            .model
            .hidden()
            .iter()
            .map(|l| l.output_dim().to_string())
            .collect();
        format!(
            "{} D={} hidden=[{}] K={} B={} {:?}",
            self.model.kind().map_or("linear", |k| k.as_str()),
            self.model.input_dim(),
            widths.join(","),
            self.client.k(),
            self.x.rows(),
            self.model.task()
        )
    }
}

/// Smallest distance of any ReLU pre-activation from the kink at zero.
/// Infinite when the model has no ReLU layers.
pub fn relu_margin(model: &ClassifierModel, x: &Matrix, h: ClientOneHot) -> Result<f64> {
    let mut margin = f64::INFINITY;
    let mut act = x.clone();
    for layer in model.hidden() {
        act = match layer {
            HiddenLayer::Cgau(l) => l.forward(&act, h)?.0,
            HiddenLayer::Relu(l) => {
                let mut z = l.affine(&act)?;
                for v in z.as_mut_slice() {
                    margin = margin.min(v.abs());
                    *v = v.max(0.0);
                }
                z
            }
        };
    }
    Ok(margin)
}

/// Draws a case with D ≤ 5, N ≤ 4, K ≤ 3 and B ≤ 8. Weights keep their
/// Glorot initialization; biases and conditioning rows are uniform in
/// [−0.5, 0.5]; inputs are uniform in [−1, 1]. Draws that put a ReLU
/// pre-activation within [`KINK_MARGIN`] of zero are redrawn, since central
/// differences straddling the kink do not estimate a derivative.
pub fn random_case<R: Rng + ?Sized>(rng: &mut R) -> Result<GradCheckCase> {
    loop {
        let case = draw_case(rng)?;
        if relu_margin(&case.model, &case.x, case.client)? >= KINK_MARGIN {
            return Ok(case);
        }
    }
}

/// Minimum distance of ReLU pre-activations from zero in drawn cases.
pub const KINK_MARGIN: f64 = 1e-3;

fn draw_case<R: Rng + ?Sized>(rng: &mut R) -> Result<GradCheckCase> {
    let input_dim = rng.random_range(1..=5);
    let depth = rng.random_range(1..=2);
    let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=4)).collect();
    let kind = if rng.random_bool(0.5) {
        UnitKind::Cgau
    } else {
        UnitKind::Relu
    };
    let task = if rng.random_bool(0.5) {
        Task::Binary
    } else {
        Task::Multiclass(rng.random_range(2..=4))
    };
    let num_clients = rng.random_range(1..=3);
    let spec = ModelSpec {
        input_dim,
        hidden,
        kind,
        task,
        dropout: 0.0,
        num_clients,
    };
    let mut model = ClassifierModel::init(&spec, rng)?;
    for (info, block) in model.blocks_mut() {
        if info.role == BlockRole::Conditioning || info.name.starts_with('b') {
            for v in block.as_mut_slice() {
                *v = rng.random_range(-0.5..=0.5);
            }
        }
    }
    let batch = rng.random_range(1..=8);
    let x = Matrix::from_fn(batch, input_dim, |_, _| rng.random_range(-1.0..=1.0));
    let labels = (0..batch)
        .map(|_| rng.random_range(0..task.num_classes()))
        .collect();
    let client = ClientOneHot::new(rng.random_range(0..num_clients), num_clients)?;
    Ok(GradCheckCase {
        model,
        x,
        labels,
        client,
    })
}

/// Runs `configs` random cases drawn from `seed`.
pub fn run_suite(opts: &GradCheckOptions) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut cases = Vec::with_capacity(opts.configs);
    for index in 0..opts.configs {
        let case = random_case(&mut rng)?;
        let blocks = check_model(&case.model, &case.x, &case.labels, case.client, opts.epsilon)?;
        cases.push(CaseReport {
            index,
            description: case.describe(),
            blocks,
        });
    }
    Ok(GradCheckReport {
        tolerance: opts.tolerance,
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
        assert!((relative_error(1e-10, 0.0) - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn small_suite_passes() {
        let report = run_suite(&GradCheckOptions {
            configs: 10,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let case = random_case(&mut rng).unwrap();
        let (_, mut analytic) = case
            .model
            .loss_and_gradients(&case.x, &case.labels, case.client, None)
            .unwrap();
        let numeric =
            numerical_gradients(&case.model, &case.x, &case.labels, case.client, 1e-5).unwrap();
        analytic.output_mut().bias.as_mut_slice()[0] += 1e-3;
        let blocks = compare(&analytic, &numeric).unwrap();
        let head_bias = blocks.last().unwrap();
        assert_eq!(head_bias.name, "bias");
        assert!(head_bias.max_rel_error > 1e-5);
    }

    #[test]
    fn empty_suite_is_vacuous_pass() {
        let report = run_suite(&GradCheckOptions {
            configs: 0,
            ..Default::default()
        })
        .unwrap();
        assert!(report.passed());
        assert_eq!(report.max_rel_error(), 0.0);
    }
}
