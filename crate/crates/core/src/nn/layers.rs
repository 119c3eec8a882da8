use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// One-hot client code `h ∈ R^K`, stored as the index of its single one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClientOneHot {
    client_id: usize,
    k: usize,
}

impl ClientOneHot {
    pub fn new(client_id: usize, k: usize) -> Result<Self> {
        if client_id >= k {
            return Err(Error::dim(format!(
                "client id {client_id} out of range for {k} clients"
            )));
        }
        Ok(ClientOneHot { client_id, k })
    }

    pub fn client_id(&self) -> usize {
        self.client_id
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.k];
        h[self.client_id] = 1.0;
        h
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Uniform Glorot initialization, `±√(6 / (fan_in + fan_out))`.
pub(crate) fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-limit..=limit))
}

fn add_row_bias(m: &mut Matrix, bias: &[f64]) {
    for r in 0..m.rows() {
        for (v, b) in m.row_mut(r).iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn column_sums(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(1, m.cols());
    for row in m.row_iter() {
        for (o, v) in out.as_mut_slice().iter_mut().zip(row) {
            *o += v;
        }
    }
    out
}

/// Affine map `x·W + b`. Used both as a ReLU hidden layer and as the
/// classifier head.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `in × out`
    pub weight: Matrix,
    /// `1 × out`
    pub bias: Matrix,
}

impl DenseLayer {
    pub fn zeros(input: usize, output: usize) -> Self {
        DenseLayer {
            weight: Matrix::zeros(input, output),
            bias: Matrix::zeros(1, output),
        }
    }

    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        DenseLayer {
            weight: glorot(input, output, rng),
            bias: Matrix::zeros(1, output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn affine(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::dim(format!(
                "dense layer expects {} inputs, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        let mut out = x.matmul(&self.weight)?;
        add_row_bias(&mut out, self.bias.as_slice());
        Ok(out)
    }

    /// Gradients of an affine map given the upstream gradient `d_out`.
    /// Returns `(layer gradients, d_input)`.
    pub(crate) fn affine_backward(&self, x: &Matrix, d_out: &Matrix) -> Result<(DenseLayer, Matrix)> {
        let grads = DenseLayer {
            weight: x.t_matmul(d_out)?,
            bias: column_sums(d_out),
        };
        let dx = d_out.matmul_t(&self.weight)?;
        Ok((grads, dx))
    }
}

/// Conditional gated activation unit layer:
///
/// `z = tanh(x·W_f + b_f + h·V_f) ⊙ σ(x·W_g + b_g + h·V_g)`
///
/// `w_*` and `b_*` are shared between clients; row `k` of `v_filter` and
/// `v_gate` is the local conditioning of client `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CgauLayer {
    /// `D × N`
    pub w_filter: Matrix,
    /// `D × N`
    pub w_gate: Matrix,
    /// `1 × N`
    pub b_filter: Matrix,
    /// `1 × N`
    pub b_gate: Matrix,
    /// `K × N`, per-client filter shift (modulation).
    pub v_filter: Matrix,
    /// `K × N`, per-client gate shift (expression).
    pub v_gate: Matrix,
}

/// Activations kept from the forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct CgauCache {
    pub input: Matrix,
    /// `tanh` of the filter pre-activation.
    pub filter: Matrix,
    /// `σ` of the gate pre-activation.
    pub gate: Matrix,
    pub client: ClientOneHot,
}

impl CgauLayer {
    pub fn zeros(input: usize, units: usize, clients: usize) -> Self {
        CgauLayer {
            w_filter: Matrix::zeros(input, units),
            w_gate: Matrix::zeros(input, units),
            b_filter: Matrix::zeros(1, units),
            b_gate: Matrix::zeros(1, units),
            v_filter: Matrix::zeros(clients, units),
            v_gate: Matrix::zeros(clients, units),
        }
    }

    /// Glorot-initialized weights; biases and conditioning start at zero.
    pub fn init<R: Rng + ?Sized>(input: usize, units: usize, clients: usize, rng: &mut R) -> Self {
        CgauLayer {
            w_filter: glorot(input, units, rng),
            w_gate: glorot(input, units, rng),
            ..CgauLayer::zeros(input, units, clients)
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_filter.rows()
    }

    pub fn units(&self) -> usize {
        self.w_filter.cols()
    }

    pub fn num_clients(&self) -> usize {
        self.v_filter.rows()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let (d, n, k) = (self.input_dim(), self.units(), self.num_clients());
        let ok = self.w_gate.shape() == (d, n)
            && self.b_filter.shape() == (1, n)
            && self.b_gate.shape() == (1, n)
            && self.v_gate.shape() == (k, n)
            && self.v_filter.cols() == n;
        if !ok {
            return Err(Error::dim(format!(
                "inconsistent CGAU blocks for D={d}, N={n}, K={k}"
            )));
        }
        Ok(())
    }

    /// Filter and gate pre-activations for a batch.
    pub fn pre_activations(&self, x: &Matrix, h: ClientOneHot) -> Result<(Matrix, Matrix)> {
        if x.cols() != self.input_dim() {
            return Err(Error::dim(format!(
                "CGAU layer expects {} inputs, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        if h.k() != self.num_clients() {
            return Err(Error::dim(format!(
                "CGAU layer conditioned on {} clients, got one-hot of length {}",
                self.num_clients(),
                h.k()
            )));
        }
        let k = h.client_id();
        let mut a_f = x.matmul(&self.w_filter)?;
        add_row_bias(&mut a_f, self.b_filter.as_slice());
        add_row_bias(&mut a_f, self.v_filter.row(k));
        let mut a_g = x.matmul(&self.w_gate)?;
        add_row_bias(&mut a_g, self.b_gate.as_slice());
        add_row_bias(&mut a_g, self.v_gate.row(k));
        Ok((a_f, a_g))
    }

    pub fn forward(&self, x: &Matrix, h: ClientOneHot) -> Result<(Matrix, CgauCache)> {
        let (mut filter, mut gate) = self.pre_activations(x, h)?;
        filter.as_mut_slice().iter_mut().for_each(|v| *v = v.tanh());
        gate.as_mut_slice().iter_mut().for_each(|v| *v = sigmoid(*v));
        let mut z = filter.clone();
        for (o, g) in z.as_mut_slice().iter_mut().zip(gate.as_slice()) {
            *o *= g;
        }
        Ok((
            z,
            CgauCache {
                input: x.clone(),
                filter,
                gate,
                client: h,
            },
        ))
    }

    /// Returns `(layer gradients, d_input)`. Conditioning gradients are
    /// nonzero only in the row of the cached client.
    pub fn backward(&self, cache: &CgauCache, d_out: &Matrix) -> Result<(CgauLayer, Matrix)> {
        if d_out.shape() != cache.filter.shape() {
            return Err(Error::dim("CGAU upstream gradient shape mismatch"));
        }
        let mut d_filter = d_out.clone();
        let mut d_gate = d_out.clone();
        for (((df, dg), &t), &s) in d_filter
            .as_mut_slice()
            .iter_mut()
            .zip(d_gate.as_mut_slice())
            .zip(cache.filter.as_slice())
            .zip(cache.gate.as_slice())
        {
            let upstream = *df;
            *df = upstream * s * (1.0 - t * t);
            *dg = upstream * t * s * (1.0 - s);
        }

        let k = cache.client.client_id();
        let b_filter = column_sums(&d_filter);
        let b_gate = column_sums(&d_gate);
        let mut v_filter = Matrix::zeros(self.num_clients(), self.units());
        v_filter.row_mut(k).copy_from_slice(b_filter.as_slice());
        let mut v_gate = Matrix::zeros(self.num_clients(), self.units());
        v_gate.row_mut(k).copy_from_slice(b_gate.as_slice());

        let grads = CgauLayer {
            w_filter: cache.input.t_matmul(&d_filter)?,
            w_gate: cache.input.t_matmul(&d_gate)?,
            b_filter,
            b_gate,
            v_filter,
            v_gate,
        };
        let mut dx = d_filter.matmul_t(&self.w_filter)?;
        dx.axpy(1.0, &d_gate.matmul_t(&self.w_gate)?)?;
        Ok((grads, dx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_layer_outputs_zero() {
        let layer = CgauLayer::zeros(3, 4, 2);
        let x = Matrix::from_fn(5, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        let (z, cache) = layer.forward(&x, ClientOneHot::new(1, 2).unwrap()).unwrap();
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
        assert!(cache.gate.as_slice().iter().all(|&g| g == 0.5));
    }

    #[test]
    fn scalar_unit() {
        // tanh(1) · σ(10), evaluated independently
        let expected = 0.761_594_155_955_764_9 * (1.0 / (1.0 + (-10f64).exp()));
        let mut layer = CgauLayer::zeros(1, 1, 1);
        layer.w_filter[(0, 0)] = 1.0;
        layer.w_gate[(0, 0)] = 10.0;
        let x = Matrix::from_rows(&[[1.0]]).unwrap();
        let (z, _) = layer.forward(&x, ClientOneHot::new(0, 1).unwrap()).unwrap();
        assert!((z[(0, 0)] - expected).abs() < 1e-15);
        assert!((z[(0, 0)] - 0.761560).abs() < 1e-6);
    }

    #[test]
    fn conditioning_cancels_filter() {
        let mut layer = CgauLayer::zeros(2, 1, 3);
        layer.w_filter = Matrix::from_rows(&[[0.5], [-2.0]]).unwrap();
        layer.w_gate = Matrix::from_rows(&[[3.0], [1.0]]).unwrap();
        let x = Matrix::from_rows(&[[4.0, 0.25]]).unwrap();
        // Wfᵀx = 2 − 0.5 = 1.5
        layer.v_filter[(2, 0)] = -1.5;
        layer.v_gate[(2, 0)] = 7.0;
        let (z, _) = layer.forward(&x, ClientOneHot::new(2, 3).unwrap()).unwrap();
        assert_eq!(z[(0, 0)], 0.0);
        let (z_other, _) = layer.forward(&x, ClientOneHot::new(0, 3).unwrap()).unwrap();
        assert!(z_other[(0, 0)] > 0.0);
    }

    #[test]
    fn dimension_errors() {
        let layer = CgauLayer::zeros(2, 3, 2);
        let h = ClientOneHot::new(0, 2).unwrap();
        assert!(layer.forward(&Matrix::zeros(1, 3), h).is_err());
        assert!(layer
            .forward(&Matrix::zeros(1, 2), ClientOneHot::new(0, 3).unwrap())
            .is_err());
        assert!(ClientOneHot::new(2, 2).is_err());
    }

    #[test]
    fn conditioning_gradient_confined_to_client_row() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let layer = CgauLayer::init(3, 4, 5, &mut rng);
        let x = Matrix::from_fn(6, 3, |i, j| (i as f64 - j as f64) * 0.3);
        let h = ClientOneHot::new(3, 5).unwrap();
        let (z, cache) = layer.forward(&x, h).unwrap();
        let d_out = Matrix::from_fn(z.rows(), z.cols(), |i, j| 0.1 * (i + j) as f64 - 0.2);
        let (g, _) = layer.backward(&cache, &d_out).unwrap();
        for k in 0..5 {
            let filter_zero = g.v_filter.row(k).iter().all(|&v| v == 0.0);
            let gate_zero = g.v_gate.row(k).iter().all(|&v| v == 0.0);
            assert_eq!(filter_zero, k != 3);
            assert_eq!(gate_zero, k != 3);
        }
    }
}
