use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::layers::{sigmoid, CgauCache, CgauLayer, ClientOneHot, DenseLayer};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// One logit, sigmoid + binary cross-entropy.
    Binary,
    /// One logit per class, softmax + cross-entropy.
    Multiclass(usize),
}

impl Task {
    pub fn num_classes(&self) -> usize {
        match *self {
            Task::Binary => 2,
            Task::Multiclass(c) => c,
        }
    }

    pub fn output_dim(&self) -> usize {
        match *self {
            Task::Binary => 1,
            Task::Multiclass(c) => c,
        }
    }

    /// Binary when `num_classes == 2`, multiclass otherwise.
    pub fn for_classes(num_classes: usize) -> Task {
        if num_classes == 2 {
            Task::Binary
        } else {
            Task::Multiclass(num_classes)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Cgau,
    Relu,
}

impl UnitKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnitKind::Cgau => "cgau",
            UnitKind::Relu => "relu",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HiddenLayer {
    Cgau(CgauLayer),
    Relu(DenseLayer),
}

impl HiddenLayer {
    pub fn kind(&self) -> UnitKind {
        match self {
            HiddenLayer::Cgau(_) => UnitKind::Cgau,
            HiddenLayer::Relu(_) => UnitKind::Relu,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            HiddenLayer::Cgau(l) => l.input_dim(),
            HiddenLayer::Relu(l) => l.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            HiddenLayer::Cgau(l) => l.units(),
            HiddenLayer::Relu(l) => l.output_dim(),
        }
    }
}

/// Whether a parameter block is averaged by the server or kept by its client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRole {
    Shared,
    Conditioning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockInfo {
    /// Hidden layer index; the output layer comes last.
    pub layer: usize,
    pub name: &'static str,
    pub role: BlockRole,
}

/// Architecture description used to initialize a [`ClassifierModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub kind: UnitKind,
    pub task: Task,
    pub dropout: f64,
    /// Conditioning width `K` of CGAU layers; ignored for ReLU models.
    pub num_clients: usize,
}

/// Feed-forward classifier: identical hidden layers (all CGAU or all ReLU)
/// followed by an unconditioned affine head.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    hidden: Vec<HiddenLayer>,
    output: DenseLayer,
    task: Task,
    dropout: f64,
}

/// Gradients share the model's layout.
pub type Gradients = ClassifierModel;

#[derive(Debug, Clone)]
enum LayerCache {
    Cgau(CgauCache),
    Relu { input: Matrix, output: Matrix },
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    masks: Vec<Option<Matrix>>,
    head_input: Matrix,
}

impl ClassifierModel {
    pub fn new(
        hidden: Vec<HiddenLayer>,
        output: DenseLayer,
        task: Task,
        dropout: f64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Range {
                name: "dropout",
                value: dropout,
                range: "[0, 1)",
            });
        }
        if let Some(first) = hidden.first() {
            if hidden.iter().any(|l| l.kind() != first.kind()) {
                return Err(Error::config("hidden layers must all be CGAU or all ReLU"));
            }
        }
        for (i, pair) in hidden.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::dim(format!(
                    "hidden layer {i} outputs {} but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        let mut clients = None;
        for layer in &hidden {
            match layer {
                HiddenLayer::Cgau(l) => {
                    l.validate()?;
                    if *clients.get_or_insert(l.num_clients()) != l.num_clients() {
                        return Err(Error::dim("CGAU layers disagree on client count"));
                    }
                }
                HiddenLayer::Relu(l) => {
                    if l.bias.shape() != (1, l.output_dim()) {
                        return Err(Error::dim("ReLU bias shape mismatch"));
                    }
                }
            }
        }
        let head_in = hidden.last().map_or(output.input_dim(), |l| l.output_dim());
        if head_in != output.input_dim() || output.bias.shape() != (1, output.output_dim()) {
            return Err(Error::dim("output layer does not chain with hidden layers"));
        }
        if output.output_dim() != task.output_dim() {
            return Err(Error::dim(format!(
                "{task:?} needs {} outputs, head has {}",
                task.output_dim(),
                output.output_dim()
            )));
        }
        Ok(ClassifierModel {
            hidden,
            output,
            task,
            dropout,
        })
    }

    /// Random initialization: Glorot-uniform weights, zero biases and zero
    /// conditioning.
    pub fn init<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<Self> {
        if spec.input_dim == 0 || spec.hidden.contains(&0) {
            return Err(Error::config("layer widths must be positive"));
        }
        if spec.kind == UnitKind::Cgau && spec.num_clients == 0 && !spec.hidden.is_empty() {
            return Err(Error::config("CGAU layers need at least one client"));
        }
        let mut hidden = Vec::with_capacity(spec.hidden.len());
        let mut fan_in = spec.input_dim;
        for &width in &spec.hidden {
            hidden.push(match spec.kind {
                UnitKind::Cgau => {
                    HiddenLayer::Cgau(CgauLayer::init(fan_in, width, spec.num_clients, rng))
                }
                UnitKind::Relu => HiddenLayer::Relu(DenseLayer::init(fan_in, width, rng)),
            });
            fan_in = width;
        }
        let output = DenseLayer::init(fan_in, spec.task.output_dim(), rng);
        ClassifierModel::new(hidden, output, spec.task, spec.dropout)
    }

    pub fn hidden(&self) -> &[HiddenLayer] {
        &self.hidden
    }

    pub fn hidden_mut(&mut self) -> &mut [HiddenLayer] {
        &mut self.hidden
    }

    pub fn output(&self) -> &DenseLayer {
        &self.output
    }

    pub fn output_mut(&mut self) -> &mut DenseLayer {
        &mut self.output
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn set_dropout(&mut self, rate: f64) -> Result<()> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Range {
                name: "dropout",
                value: rate,
                range: "[0, 1)",
            });
        }
        self.dropout = rate;
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.hidden
            .first()
            .map_or(self.output.input_dim(), |l| l.input_dim())
    }

    /// Unit kind of the hidden layers; `None` for a bare linear model.
    pub fn kind(&self) -> Option<UnitKind> {
        self.hidden.first().map(HiddenLayer::kind)
    }

    /// Conditioning width `K`, if any layer is a CGAU.
    pub fn num_clients(&self) -> Option<usize> {
        self.hidden.iter().find_map(|l| match l {
            HiddenLayer::Cgau(c) => Some(c.num_clients()),
            HiddenLayer::Relu(_) => None,
        })
    }

    pub fn is_conditioned(&self) -> bool {
        self.num_clients().is_some()
    }

    /// A model of identical shape with every parameter zero.
    pub fn zeros_like(&self) -> ClassifierModel {
        let mut z = self.clone();
        for (_, m) in z.blocks_mut() {
            m.fill(0.0);
        }
        z
    }

    /// All parameter blocks in a fixed order: per hidden layer
    /// (`w_filter, w_gate, b_filter, b_gate, v_filter, v_gate` or
    /// `weight, bias`), then the head's `weight, bias`.
    pub fn blocks(&self) -> Vec<(BlockInfo, &Matrix)> {
        use BlockRole::*;
        let mut out = Vec::new();
        for (i, layer) in self.hidden.iter().enumerate() {
            let info = |name, role| BlockInfo {
                layer: i,
                name,
                role,
            };
            match layer {
                HiddenLayer::Cgau(l) => {
                    out.push((info("w_filter", Shared), &l.w_filter));
                    out.push((info("w_gate", Shared), &l.w_gate));
                    out.push((info("b_filter", Shared), &l.b_filter));
                    out.push((info("b_gate", Shared), &l.b_gate));
                    out.push((info("v_filter", Conditioning), &l.v_filter));
                    out.push((info("v_gate", Conditioning), &l.v_gate));
                }
                HiddenLayer::Relu(l) => {
                    out.push((info("weight", Shared), &l.weight));
                    out.push((info("bias", Shared), &l.bias));
                }
            }
        }
        let head = self.hidden.len();
        let info = |name| BlockInfo {
            layer: head,
            name,
            role: Shared,
        };
        out.push((info("weight"), &self.output.weight));
        out.push((info("bias"), &self.output.bias));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<(BlockInfo, &mut Matrix)> {
        use BlockRole::*;
        let mut out = Vec::new();
        let head = self.hidden.len();
        for (i, layer) in self.hidden.iter_mut().enumerate() {
            let info = |name, role| BlockInfo {
                layer: i,
                name,
                role,
            };
            match layer {
                HiddenLayer::Cgau(l) => {
                    out.push((info("w_filter", Shared), &mut l.w_filter));
                    out.push((info("w_gate", Shared), &mut l.w_gate));
                    out.push((info("b_filter", Shared), &mut l.b_filter));
                    out.push((info("b_gate", Shared), &mut l.b_gate));
                    out.push((info("v_filter", Conditioning), &mut l.v_filter));
                    out.push((info("v_gate", Conditioning), &mut l.v_gate));
                }
                HiddenLayer::Relu(l) => {
                    out.push((info("weight", Shared), &mut l.weight));
                    out.push((info("bias", Shared), &mut l.bias));
                }
            }
        }
        let info = |name| BlockInfo {
            layer: head,
            name,
            role: Shared,
        };
        out.push((info("weight"), &mut self.output.weight));
        out.push((info("bias"), &mut self.output.bias));
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.blocks().iter().map(|(_, m)| m.as_slice().len()).sum()
    }

    /// True when both models have the same architecture and block shapes.
    pub fn same_shape(&self, other: &ClassifierModel) -> bool {
        let a = self.blocks();
        let b = other.blocks();
        self.task == other.task
            && a.len() == b.len()
            && a.iter()
                .zip(&b)
                .all(|((ia, ma), (ib, mb))| ia == ib && ma.shape() == mb.shape())
    }

    /// Logits for a batch. Pass `Some(rng)` to train with inverted dropout
    /// after every hidden layer; `None` evaluates deterministically.
    pub fn forward(
        &self,
        x: &Matrix,
        h: ClientOneHot,
        dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<(Matrix, ForwardCache)> {
        if x.cols() != self.input_dim() {
            return Err(Error::dim(format!(
                "model expects {} features, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        let mut rng = dropout_rng.filter(|_| self.dropout > 0.0);
        let keep = 1.0 - self.dropout;
        let mut layers = Vec::with_capacity(self.hidden.len());
        let mut masks = Vec::with_capacity(self.hidden.len());
        let mut act = x.clone();
        for layer in &self.hidden {
            act = match layer {
                HiddenLayer::Cgau(l) => {
                    let (z, cache) = l.forward(&act, h)?;
                    layers.push(LayerCache::Cgau(cache));
                    z
                }
                HiddenLayer::Relu(l) => {
                    let mut z = l.affine(&act)?;
                    z.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
                    layers.push(LayerCache::Relu {
                        input: act,
                        output: z.clone(),
                    });
                    z
                }
            };
            let mask = rng.as_deref_mut().map(|r| {
                Matrix::from_fn(act.rows(), act.cols(), |_, _| {
                    if r.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
            });
            if let Some(m) = &mask {
                for (a, s) in act.as_mut_slice().iter_mut().zip(m.as_slice()) {
                    *a *= s;
                }
            }
            masks.push(mask);
        }
        let logits = self.output.affine(&act)?;
        Ok((
            logits,
            ForwardCache {
                layers,
                masks,
                head_input: act,
            },
        ))
    }

    /// Deterministic logits (no dropout).
    pub fn predict(&self, x: &Matrix, h: ClientOneHot) -> Result<Matrix> {
        Ok(self.forward(x, h, None)?.0)
    }

    /// Mean cross-entropy of the batch and its gradient with respect to every
    /// parameter block.
    pub fn loss_and_gradients(
        &self,
        x: &Matrix,
        labels: &[usize],
        h: ClientOneHot,
        dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<(f64, Gradients)> {
        let (logits, cache) = self.forward(x, h, dropout_rng)?;
        let (loss, d_logits) = cross_entropy(&logits, labels, self.task)?;
        let grads = self.backward(&cache, &d_logits)?;
        Ok((loss, grads))
    }

    /// Mean cross-entropy without gradients.
    pub fn loss(&self, x: &Matrix, labels: &[usize], h: ClientOneHot) -> Result<f64> {
        let logits = self.predict(x, h)?;
        Ok(cross_entropy(&logits, labels, self.task)?.0)
    }

    pub fn backward(&self, cache: &ForwardCache, d_logits: &Matrix) -> Result<Gradients> {
        let (head, mut d_act) = self.output.affine_backward(&cache.head_input, d_logits)?;
        let mut hidden = Vec::with_capacity(self.hidden.len());
        for (i, layer) in self.hidden.iter().enumerate().rev() {
            if let Some(mask) = &cache.masks[i] {
                for (d, s) in d_act.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                    *d *= s;
                }
            }
            let (g, dx) = match (layer, &cache.layers[i]) {
                (HiddenLayer::Cgau(l), LayerCache::Cgau(c)) => {
                    let (g, dx) = l.backward(c, &d_act)?;
                    (HiddenLayer::Cgau(g), dx)
                }
                (HiddenLayer::Relu(l), LayerCache::Relu { input, output }) => {
                    for (d, &z) in d_act.as_mut_slice().iter_mut().zip(output.as_slice()) {
                        if z <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    let (g, dx) = l.affine_backward(input, &d_act)?;
                    (HiddenLayer::Relu(g), dx)
                }
                _ => return Err(Error::dim("forward cache does not match model")),
            };
            hidden.push(g);
            d_act = dx;
        }
        hidden.reverse();
        Ok(ClassifierModel {
            hidden,
            output: head,
            task: self.task,
            dropout: self.dropout,
        })
    }
}

/// Mean cross-entropy and its gradient with respect to the logits.
pub fn cross_entropy(logits: &Matrix, labels: &[usize], task: Task) -> Result<(f64, Matrix)> {
    let b = logits.rows();
    if labels.len() != b {
        return Err(Error::dim(format!("{} labels for {b} rows", labels.len())));
    }
    if b == 0 {
        return Err(Error::InsufficientData("empty batch".into()));
    }
    if logits.cols() != task.output_dim() {
        return Err(Error::dim("logit width does not match task"));
    }
    let num_classes = task.num_classes();
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
        return Err(Error::Label {
            index,
            label,
            num_classes,
        });
    }
    let inv_b = 1.0 / b as f64;
    let mut grad = Matrix::zeros(b, logits.cols());
    let mut total = 0.0;
    match task {
        Task::Binary => {
            for (i, &y) in labels.iter().enumerate() {
                let s = logits[(i, 0)];
                let y = y as f64;
                // softplus(s) − y·s, stable for large |s|
                total += s.max(0.0) - s * y + (-s.abs()).exp().ln_1p();
                grad[(i, 0)] = (sigmoid(s) - y) * inv_b;
            }
        }
        Task::Multiclass(_) => {
            for (i, &y) in labels.iter().enumerate() {
                let row = logits.row(i);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
                let lse = max + sum.ln();
                total += lse - row[y];
                let g = grad.row_mut(i);
                for (j, (gj, v)) in g.iter_mut().zip(row).enumerate() {
                    let p = (v - lse).exp();
                    *gj = (p - if j == y { 1.0 } else { 0.0 }) * inv_b;
                }
            }
        }
    }
    Ok((total * inv_b, grad))
}

/// Class probabilities from logits: `[1 − p, p]` for binary heads, softmax
/// otherwise.
pub fn probabilities(logits: &Matrix, task: Task) -> Matrix {
    match task {
        Task::Binary => Matrix::from_fn(logits.rows(), 2, |i, j| {
            let p = sigmoid(logits[(i, 0)]);
            if j == 1 {
                p
            } else {
                1.0 - p
            }
        }),
        Task::Multiclass(_) => {
            let mut out = logits.clone();
            for i in 0..out.rows() {
                let row = out.row_mut(i);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                row.iter_mut().for_each(|v| *v /= sum);
            }
            out
        }
    }
}

/// Predicted class per row; ties resolve to the lowest index.
pub fn argmax_predictions(logits: &Matrix, task: Task) -> Vec<usize> {
    match task {
        Task::Binary => (0..logits.rows())
            .map(|i| usize::from(logits[(i, 0)] > 0.0))
            .collect(),
        Task::Multiclass(_) => logits
            .row_iter()
            .map(|row| {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn spec(kind: UnitKind, task: Task, dropout: f64) -> ModelSpec {
        ModelSpec {
            input_dim: 3,
            hidden: vec![5, 4],
            kind,
            task,
            dropout,
            num_clients: 3,
        }
    }

    fn batch() -> Matrix {
        Matrix::from_fn(6, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.4 - 0.8)
    }

    #[test]
    fn zero_logit_losses() {
        let (l, _) = cross_entropy(&Matrix::zeros(1, 1), &[1], Task::Binary).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        let (l, _) = cross_entropy(&Matrix::zeros(2, 10), &[3, 9], Task::Multiclass(10)).unwrap();
        assert!((l - 10f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn label_out_of_range() {
        let err = cross_entropy(&Matrix::zeros(2, 1), &[0, 2], Task::Binary).unwrap_err();
        assert!(matches!(err, Error::Label { index: 1, label: 2, .. }));
        let err = cross_entropy(&Matrix::zeros(1, 3), &[3], Task::Multiclass(3)).unwrap_err();
        assert!(matches!(err, Error::Label { .. }));
    }

    #[test]
    fn dropout_zero_matches_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = ClassifierModel::init(&spec(UnitKind::Cgau, Task::Binary, 0.0), &mut rng).unwrap();
        let h = ClientOneHot::new(1, 3).unwrap();
        let (train, _) = m.forward(&batch(), h, Some(&mut rng)).unwrap();
        assert_eq!(train, m.predict(&batch(), h).unwrap());
    }

    #[test]
    fn zero_head_gives_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m =
            ClassifierModel::init(&spec(UnitKind::Relu, Task::Multiclass(4), 0.5), &mut rng)
                .unwrap();
        m.output_mut().weight.fill(0.0);
        let logits = m.predict(&batch(), ClientOneHot::new(0, 1).unwrap()).unwrap();
        assert!(logits.as_slice().iter().all(|&v| v == 0.0));
        let p = probabilities(&logits, m.task());
        assert!(p.as_slice().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn relu_clips_negative_input() {
        let hidden = vec![HiddenLayer::Relu(DenseLayer {
            weight: Matrix::identity(2),
            bias: Matrix::zeros(1, 2),
        })];
        let head = DenseLayer {
            weight: Matrix::from_rows(&[[1.0], [1.0]]).unwrap(),
            bias: Matrix::zeros(1, 1),
        };
        let m = ClassifierModel::new(hidden, head, Task::Binary, 0.0).unwrap();
        let x = Matrix::from_rows(&[[-1.0, -3.0]]).unwrap();
        let logits = m.predict(&x, ClientOneHot::new(0, 1).unwrap()).unwrap();
        assert_eq!(logits[(0, 0)], 0.0);
    }

    #[test]
    fn unconditioned_cgau_ignores_client() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = ClassifierModel::init(&spec(UnitKind::Cgau, Task::Multiclass(3), 0.0), &mut rng)
            .unwrap();
        let a = m.predict(&batch(), ClientOneHot::new(0, 3).unwrap()).unwrap();
        let b = m.predict(&batch(), ClientOneHot::new(2, 3).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_inconsistent_models() {
        let hidden = vec![
            HiddenLayer::Relu(DenseLayer::zeros(2, 3)),
            HiddenLayer::Relu(DenseLayer::zeros(4, 3)),
        ];
        assert!(ClassifierModel::new(hidden, DenseLayer::zeros(3, 1), Task::Binary, 0.0).is_err());
        let mixed = vec![
            HiddenLayer::Relu(DenseLayer::zeros(2, 3)),
            HiddenLayer::Cgau(CgauLayer::zeros(3, 3, 2)),
        ];
        assert!(ClassifierModel::new(mixed, DenseLayer::zeros(3, 1), Task::Binary, 0.0).is_err());
        let head_mismatch = vec![HiddenLayer::Relu(DenseLayer::zeros(2, 3))];
        assert!(ClassifierModel::new(
            head_mismatch,
            DenseLayer::zeros(3, 2),
            Task::Binary,
            0.0
        )
        .is_err());
        assert!(ClassifierModel::new(vec![], DenseLayer::zeros(2, 1), Task::Binary, 1.0).is_err());
    }

    #[test]
    fn init_zeroes_biases_and_conditioning() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = ClassifierModel::init(&spec(UnitKind::Cgau, Task::Binary, 0.5), &mut rng).unwrap();
        for (info, block) in m.blocks() {
            let zero = block.as_slice().iter().all(|&v| v == 0.0);
            let expect_zero = info.role == BlockRole::Conditioning || info.name.starts_with('b');
            assert_eq!(zero, expect_zero, "{info:?}");
        }
        let limit = (6.0f64 / 8.0).sqrt();
        assert!(m.blocks()[0].1.max_abs() <= limit);
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        let logits = Matrix::from_rows(&[[1.0, 1.0, 0.0], [0.0, 2.0, 2.0]]).unwrap();
        assert_eq!(argmax_predictions(&logits, Task::Multiclass(3)), vec![0, 1]);
        let bin = Matrix::from_rows(&[[0.0], [0.1]]).unwrap();
        assert_eq!(argmax_predictions(&bin, Task::Binary), vec![0, 1]);
    }
}
