//! Dense feed-forward regression networks with exact reverse-mode gradients.
//!
//! The network is a fixed affine/activation chain: hidden layers apply
//! `act(Wx + b)`, the final layer applies `Wx + b` followed by the output
//! squash. All arithmetic is `f64`; gradient tests run against central
//! finite differences, which need the precision headroom.
//!
//! Layout conventions:
//! - weights are row-major `(out_dim, in_dim)`,
//! - a batch of inputs is `(batch, in_dim)`,
//! - the final layer always has width 1 (one prediction per row).

mod adam;
pub mod train;

pub use adam::{adam_step, AdamParams, AdamState};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::Prng;

/// Hidden-layer activation.
///
/// ELU is the default everywhere: it is smooth at the origin, which keeps
/// central finite differences honest in the gradient checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Elu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Elu => {
                if z > 0.0 {
                    z
                } else {
                    z.exp() - 1.0
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Elu => {
                if y > 0.0 {
                    1.0
                } else {
                    y + 1.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Output squash on the final affine layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    /// Raw affine output, for continuous targets.
    Identity,
    /// Logistic squash, for Bernoulli-mean targets. Squashed predictions
    /// are clamped to the nearest representable values strictly inside
    /// (0,1), so saturation never produces an exact 0 or 1.
    Logistic,
}

#[inline]
pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Logistic confined to the open unit interval even under saturation.
#[inline]
fn squash_open_interval(z: f64) -> f64 {
    logistic(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// One affine layer: `weights` is `(out_dim, in_dim)` row-major.
///
/// Also reused as the per-layer gradient buffer, since gradients have the
/// same shapes as the parameters they correspond to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl LayerParams {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        LayerParams {
            weights: Matrix::zeros(out_dim, in_dim),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    fn same_shape(&self, other: &LayerParams) -> bool {
        self.out_dim() == other.out_dim() && self.in_dim() == other.in_dim()
    }

    fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.iter().all(|v| v.is_finite())
    }
}

/// Gradient of the batch MSE loss with respect to every parameter.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNetwork) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerParams::zeros(l.out_dim(), l.in_dim()))
                .collect(),
        }
    }

    /// Accumulates `other` into `self` elementwise.
    pub fn add_assign(&mut self, other: &Gradients) {
        assert_eq!(self.layers.len(), other.layers.len());
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a
                .weights
                .as_mut_slice()
                .iter_mut()
                .zip(b.weights.as_slice())
            {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
    }
}

/// A minibatch of inputs with scalar regression targets.
#[derive(Debug, Clone)]
pub struct Batch {
    pub inputs: Matrix,
    pub targets: Vec<f64>,
}

impl Batch {
    pub fn new(inputs: Matrix, targets: Vec<f64>) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::EmptyInput("batch"));
        }
        if inputs.rows() != targets.len() {
            return Err(Error::dim(inputs.rows(), targets.len(), "batch targets"));
        }
        if !inputs.is_finite() || !targets.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("batch"));
        }
        Ok(Batch { inputs, targets })
    }
}

/// Construction parameters for a [`DenseNetwork`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    /// Hidden layer widths; empty means a single affine layer (a linear model).
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub output: OutputKind,
    /// Start the final layer at exactly zero, so a freshly built network
    /// predicts 0 (or 0.5 under the logistic squash) everywhere.
    pub zero_init_output: bool,
}

impl NetworkConfig {
    /// The default regression architecture: two hidden layers of width 64.
    pub fn regression(input_dim: usize, output: OutputKind) -> Self {
        NetworkConfig {
            input_dim,
            hidden: vec![64, 64],
            activation: Activation::Elu,
            output,
            zero_init_output: false,
        }
    }

    /// A plain affine model trained with the same optimizer path.
    pub fn linear(input_dim: usize, output: OutputKind) -> Self {
        NetworkConfig {
            input_dim,
            hidden: vec![],
            activation: Activation::Elu,
            output,
            zero_init_output: false,
        }
    }
}

/// Layered affine+activation regression network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNetwork {
    layers: Vec<LayerParams>,
    activation: Activation,
    output: OutputKind,
}

impl DenseNetwork {
    /// Builds a network with scaled-uniform fan-in initialization:
    /// weights ~ U(-sqrt(3/fan_in), +sqrt(3/fan_in)), biases zero.
    pub fn new(cfg: &NetworkConfig, rng: &mut Prng) -> Result<Self> {
        if cfg.input_dim == 0 {
            return Err(Error::config("input_dim must be > 0"));
        }
        if cfg.hidden.iter().any(|&w| w == 0) {
            return Err(Error::config("hidden widths must be > 0"));
        }
        let mut widths = vec![cfg.input_dim];
        widths.extend_from_slice(&cfg.hidden);
        widths.push(1);

        let n_layers = widths.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (in_dim, out_dim) = (widths[l], widths[l + 1]);
            let mut layer = LayerParams::zeros(out_dim, in_dim);
            let last = l == n_layers - 1;
            if !(last && cfg.zero_init_output) {
                let limit = (3.0 / in_dim as f64).sqrt();
                for w in layer.weights.as_mut_slice() {
                    *w = rng.random_range(-limit..limit);
                }
            }
            layers.push(layer);
        }
        Ok(DenseNetwork {
            layers,
            activation: cfg.activation,
            output: cfg.output,
        })
    }

    /// Assembles a network from explicit layers; shapes must chain.
    pub fn from_layers(
        layers: Vec<LayerParams>,
        activation: Activation,
        output: OutputKind,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("a network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::dim(
                    pair[0].out_dim(),
                    pair[1].in_dim(),
                    "consecutive layer widths",
                ));
            }
        }
        Ok(DenseNetwork {
            layers,
            activation,
            output,
        })
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    #[inline]
    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    #[inline]
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    #[inline]
    pub fn activation(&self) -> Activation {
        self.activation
    }

    #[inline]
    pub fn output_kind(&self) -> OutputKind {
        self.output
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    /// Width of the feature vector produced by the first `k` layers.
    pub fn feature_dim(&self, k: usize) -> usize {
        self.layers[k - 1].out_dim()
    }

    pub fn structure_matches(&self, other: &DenseNetwork) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.same_shape(b))
            && self.activation == other.activation
            && self.output == other.output
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.layers.iter().all(|l| l.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("network parameters"))
        }
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.out_dim() * l.in_dim() + l.bias.len())
            .sum()
    }

    fn affine(&self, l: usize, input: &Matrix) -> Matrix {
        let layer = &self.layers[l];
        let mut out = Matrix::zeros(input.rows(), layer.out_dim());
        for r in 0..input.rows() {
            let x = input.row(r);
            let o = out.row_mut(r);
            for (j, oj) in o.iter_mut().enumerate() {
                let wrow = layer.weights.row(j);
                let mut acc = layer.bias[j];
                for (wi, xi) in wrow.iter().zip(x) {
                    acc += wi * xi;
                }
                *oj = acc;
            }
        }
        out
    }

    fn activate_in_place(&self, m: &mut Matrix) {
        for v in m.as_mut_slice() {
            *v = self.activation.apply(*v);
        }
    }

    /// Post-activation outputs of every layer plus the squashed prediction.
    ///
    /// `post[l]` is the input seen by layer `l+1`; the last entry holds the
    /// final predictions (after the output squash) in a batch-by-1 matrix.
    fn forward_trace(&self, inputs: &Matrix) -> Result<Vec<Matrix>> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::dim(self.input_dim(), inputs.cols(), "forward input"));
        }
        let n = self.layers.len();
        let mut post = Vec::with_capacity(n);
        let mut cur = self.affine(0, inputs);
        for l in 1..=n {
            if l < n {
                self.activate_in_place(&mut cur);
                post.push(cur);
                cur = self.affine(l, post.last().unwrap());
            } else {
                if self.output == OutputKind::Logistic {
                    for v in cur.as_mut_slice() {
                        *v = squash_open_interval(*v);
                    }
                }
                post.push(cur);
                break;
            }
        }
        Ok(post)
    }

    /// One prediction per input row.
    pub fn forward(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        debug_assert_eq!(self.output_dim(), 1);
        let trace = self.forward_trace(inputs)?;
        let preds = trace.last().unwrap();
        let out: Vec<f64> = preds.as_slice().to_vec();
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("forward output"));
        }
        Ok(out)
    }

    /// Runs the first `k` layers as a feature extractor.
    ///
    /// The activation is applied after every one of the `k` layers, matching
    /// what those layers compute inside the full network.
    pub fn hidden_features(&self, inputs: &Matrix, k: usize) -> Result<Matrix> {
        if k == 0 || k >= self.layers.len() {
            return Err(Error::config(format!(
                "feature prefix k={k} must satisfy 1 <= k < {}",
                self.layers.len()
            )));
        }
        if inputs.cols() != self.input_dim() {
            return Err(Error::dim(self.input_dim(), inputs.cols(), "feature input"));
        }
        let mut cur = self.affine(0, inputs);
        self.activate_in_place(&mut cur);
        for l in 1..k {
            cur = self.affine(l, &cur);
            self.activate_in_place(&mut cur);
        }
        Ok(cur)
    }

    /// Exact gradient of `loss_mse(forward(inputs), targets)` w.r.t. every
    /// weight and bias.
    pub fn backward(&self, batch: &Batch) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(batch, &mut grads)?;
        Ok(grads)
    }

    /// As [`backward`](Self::backward) but reusing a gradient buffer.
    pub fn backward_into(&self, batch: &Batch, grads: &mut Gradients) -> Result<()> {
        let n = self.layers.len();
        assert_eq!(grads.layers.len(), n, "gradient buffer shape");
        let trace = self.forward_trace(&batch.inputs)?;
        let preds = trace.last().unwrap();
        let batch_size = batch.inputs.rows() as f64;

        // delta holds dL/dz for the current layer, batch x out_dim.
        let mut delta = Matrix::zeros(batch.inputs.rows(), 1);
        for r in 0..batch.inputs.rows() {
            let p = preds.get(r, 0);
            let mut d = 2.0 * (p - batch.targets[r]) / batch_size;
            if self.output == OutputKind::Logistic {
                d *= p * (1.0 - p);
            }
            delta.set(r, 0, d);
        }

        for l in (0..n).rev() {
            let layer_input: &Matrix = if l == 0 { &batch.inputs } else { &trace[l - 1] };
            let g = &mut grads.layers[l];
            g.weights.as_mut_slice().fill(0.0);
            g.bias.fill(0.0);
            for r in 0..delta.rows() {
                let drow = delta.row(r);
                let xrow = layer_input.row(r);
                for (j, &dj) in drow.iter().enumerate() {
                    if dj == 0.0 {
                        continue;
                    }
                    g.bias[j] += dj;
                    let wrow = g.weights.row_mut(j);
                    for (wi, xi) in wrow.iter_mut().zip(xrow) {
                        *wi += dj * xi;
                    }
                }
            }
            if l > 0 {
                // delta_prev = (delta . W_l) * act'(post_{l-1})
                let w = &self.layers[l].weights;
                let prev_post = &trace[l - 1];
                let mut prev = Matrix::zeros(delta.rows(), w.cols());
                for r in 0..delta.rows() {
                    let drow = delta.row(r);
                    let prow = prev.row_mut(r);
                    for (j, &dj) in drow.iter().enumerate() {
                        if dj == 0.0 {
                            continue;
                        }
                        let wrow = w.row(j);
                        for (pi, wi) in prow.iter_mut().zip(wrow) {
                            *pi += dj * wi;
                        }
                    }
                    for (pi, &post) in prev.row_mut(r).iter_mut().zip(prev_post.row(r)) {
                        *pi *= self.activation.derivative_from_output(post);
                    }
                }
                delta = prev;
            }
        }

        if !grads.layers.iter().all(|l| l.is_finite()) {
            return Err(Error::NonFinite("gradients"));
        }
        Ok(())
    }
}

/// Mean squared error between predictions and targets.
pub fn loss_mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("loss_mse"));
    }
    if predictions.len() != targets.len() {
        return Err(Error::dim(predictions.len(), targets.len(), "loss_mse"));
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Per-layer convex combination of two structurally identical networks.
///
/// Layer `p` of the result is `eps[p] * b_p + (1 - eps[p]) * a_p`, applied to
/// both weights and bias. `eps[p] == 0.0` and `eps[p] == 1.0` reproduce the
/// corresponding endpoint bit-for-bit.
pub fn interpolate_params(
    a: &DenseNetwork,
    b: &DenseNetwork,
    eps_per_layer: &[f64],
) -> Result<DenseNetwork> {
    if !a.structure_matches(b) {
        return Err(Error::config("interpolate_params: structure mismatch"));
    }
    if eps_per_layer.len() != a.layers.len() {
        return Err(Error::dim(
            a.layers.len(),
            eps_per_layer.len(),
            "eps vector",
        ));
    }
    if eps_per_layer.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(Error::config("interpolate_params: eps outside [0,1]"));
    }
    let mut out = a.clone();
    for (p, &eps) in eps_per_layer.iter().enumerate() {
        if eps == 0.0 {
            continue;
        }
        if eps == 1.0 {
            out.layers[p] = b.layers[p].clone();
            continue;
        }
        let (la, lb) = (&a.layers[p], &b.layers[p]);
        let lo = &mut out.layers[p];
        for ((o, &x), &y) in lo
            .weights
            .as_mut_slice()
            .iter_mut()
            .zip(la.weights.as_slice())
            .zip(lb.weights.as_slice())
        {
            *o = eps * y + (1.0 - eps) * x;
        }
        for ((o, &x), &y) in lo.bias.iter_mut().zip(&la.bias).zip(&lb.bias) {
            *o = eps * y + (1.0 - eps) * x;
        }
    }
    Ok(out)
}

/// Bitwise parameter equality, for determinism and isolation checks.
pub fn params_bitwise_eq(a: &DenseNetwork, b: &DenseNetwork) -> bool {
    if !a.structure_matches(b) {
        return false;
    }
    a.layers.iter().zip(&b.layers).all(|(la, lb)| {
        la.weights
            .as_slice()
            .iter()
            .zip(lb.weights.as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits())
            && la
                .bias
                .iter()
                .zip(&lb.bias)
                .all(|(x, y)| x.to_bits() == y.to_bits())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn single_layer(weight: f64, bias: f64, output: OutputKind) -> DenseNetwork {
        let mut layer = LayerParams::zeros(1, 1);
        layer.weights.set(0, 0, weight);
        layer.bias[0] = bias;
        DenseNetwork::from_layers(vec![layer], Activation::Elu, output).unwrap()
    }

    #[test]
    fn zero_network_predicts_zero() {
        let net = single_layer(0.0, 0.0, OutputKind::Identity);
        let x = Matrix::from_rows(&[vec![3.7], vec![-2.0]]).unwrap();
        assert_eq!(net.forward(&x).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn logistic_of_zero_is_half() {
        let net = single_layer(1.0, 0.0, OutputKind::Logistic);
        let x = Matrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(net.forward(&x).unwrap(), vec![0.5]);
    }

    /// Independent straight-line re-evaluation of the affine/activation
    /// chain, with its own loop structure.
    fn reference_forward(net: &DenseNetwork, row: &[f64]) -> f64 {
        let mut cur: Vec<f64> = row.to_vec();
        let n = net.num_layers();
        for (l, layer) in net.layers().iter().enumerate() {
            let mut next = vec![0.0; layer.out_dim()];
            for j in 0..layer.out_dim() {
                let mut acc = 0.0;
                for i in 0..layer.in_dim() {
                    acc += layer.weights.get(j, i) * cur[i];
                }
                acc += layer.bias[j];
                next[j] = if l + 1 < n {
                    net.activation().apply(acc)
                } else {
                    match net.output_kind() {
                        OutputKind::Identity => acc,
                        OutputKind::Logistic => logistic(acc),
                    }
                };
            }
            cur = next;
        }
        cur[0]
    }

    #[test]
    fn forward_matches_independent_reevaluation() {
        let mut rng = rng_from_seed(42);
        let cfg = NetworkConfig {
            input_dim: 5,
            hidden: vec![8, 6],
            activation: Activation::Elu,
            output: OutputKind::Identity,
            zero_init_output: false,
        };
        let net = DenseNetwork::new(&cfg, &mut rng).unwrap();
        let row: Vec<f64> = (0..5).map(|i| 0.3 * i as f64 - 0.7).collect();
        let got = net.forward(&Matrix::row_vector(&row)).unwrap()[0];
        let want = reference_forward(&net, &row);
        assert!(
            (got - want).abs() <= 1e-12 * want.abs().max(1.0),
            "{got} vs {want}"
        );
    }

    #[test]
    fn loss_mse_examples() {
        assert_eq!(loss_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(loss_mse(&[0.0], &[2.0]).unwrap(), 4.0);
        assert_eq!(loss_mse(&[1.0, 3.0], &[0.0, 0.0]).unwrap(), 5.0);
        assert!(loss_mse(&[], &[]).is_err());
    }

    #[test]
    fn backward_zero_network_zero_targets() {
        let net = single_layer(0.0, 0.0, OutputKind::Identity);
        let batch = Batch::new(Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap(), vec![
            0.0, 0.0,
        ])
        .unwrap();
        let g = net.backward(&batch).unwrap();
        assert_eq!(g.layers[0].weights.get(0, 0), 0.0);
        assert_eq!(g.layers[0].bias[0], 0.0);
    }

    #[test]
    fn backward_scalar_linear_model() {
        // y = w * x on {(x=1, t=0)}, w=1: L = w^2, dL/dw = 2.
        let mut layer = LayerParams::zeros(1, 1);
        layer.weights.set(0, 0, 1.0);
        layer.bias[0] = 0.0;
        // Keep the bias gradient visible too: dL/db = 2 here as well.
        let net =
            DenseNetwork::from_layers(vec![layer], Activation::Elu, OutputKind::Identity).unwrap();
        let batch = Batch::new(Matrix::from_rows(&[vec![1.0]]).unwrap(), vec![0.0]).unwrap();
        let g = net.backward(&batch).unwrap();
        assert_eq!(g.layers[0].weights.get(0, 0), 2.0);
    }

    /// Central finite differences over every parameter of a small network.
    pub(crate) fn finite_difference_check(
        net: &DenseNetwork,
        batch: &Batch,
        h: f64,
    ) -> (f64, f64) {
        let analytic = net.backward(batch).unwrap();
        let mut max_rel = 0.0_f64;
        let mut max_abs = 0.0_f64;
        let loss_at = |n: &DenseNetwork| -> f64 {
            loss_mse(&n.forward(&batch.inputs).unwrap(), &batch.targets).unwrap()
        };
        for l in 0..net.num_layers() {
            let (out_d, in_d) = (net.layers()[l].out_dim(), net.layers()[l].in_dim());
            for j in 0..out_d {
                for i in 0..=in_d {
                    let mut plus = net.clone();
                    let mut minus = net.clone();
                    if i < in_d {
                        let w = net.layers()[l].weights.get(j, i);
                        plus.layers_mut()[l].weights.set(j, i, w + h);
                        minus.layers_mut()[l].weights.set(j, i, w - h);
                    } else {
                        let b = net.layers()[l].bias[j];
                        plus.layers_mut()[l].bias[j] = b + h;
                        minus.layers_mut()[l].bias[j] = b - h;
                    }
                    let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
                    let exact = if i < in_d {
                        analytic.layers[l].weights.get(j, i)
                    } else {
                        analytic.layers[l].bias[j]
                    };
                    let abs = (numeric - exact).abs();
                    max_abs = max_abs.max(abs);
                    let scale = numeric.abs().max(exact.abs());
                    if scale > 1e-7 {
                        max_rel = max_rel.max(abs / scale);
                    }
                }
            }
        }
        (max_rel, max_abs)
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = rng_from_seed(7);
        for (hidden, output) in [
            (vec![8], OutputKind::Identity),
            (vec![6, 5], OutputKind::Logistic),
            (vec![4, 4, 4], OutputKind::Identity),
        ] {
            let cfg = NetworkConfig {
                input_dim: 3,
                hidden,
                activation: Activation::Elu,
                output,
                zero_init_output: false,
            };
            let net = DenseNetwork::new(&cfg, &mut rng).unwrap();
            let rows: Vec<Vec<f64>> = (0..20)
                .map(|_| (0..3).map(|_| rng.random_range(-1.5..1.5)).collect())
                .collect();
            let targets: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
            let batch = Batch::new(Matrix::from_rows(&rows).unwrap(), targets).unwrap();
            let (max_rel, max_abs) = finite_difference_check(&net, &batch, 1e-5);
            assert!(
                max_rel <= 1e-4 || max_abs <= 1e-8,
                "rel {max_rel}, abs {max_abs}"
            );
        }
    }

    #[test]
    fn interpolate_endpoints_and_midpoint() {
        let mut rng = rng_from_seed(9);
        let cfg = NetworkConfig {
            input_dim: 2,
            hidden: vec![3],
            activation: Activation::Elu,
            output: OutputKind::Identity,
            zero_init_output: false,
        };
        let a = DenseNetwork::new(&cfg, &mut rng).unwrap();
        let b = DenseNetwork::new(&cfg, &mut rng).unwrap();
        let n = a.num_layers();

        let at_a = interpolate_params(&a, &b, &vec![0.0; n]).unwrap();
        assert!(params_bitwise_eq(&at_a, &a));
        let at_b = interpolate_params(&a, &b, &vec![1.0; n]).unwrap();
        assert!(params_bitwise_eq(&at_b, &b));

        // Midpoint of a zero net and an all-twos net is all ones.
        let mut zero = a.clone();
        let mut twos = a.clone();
        for l in 0..n {
            zero.layers_mut()[l].weights.as_mut_slice().fill(0.0);
            zero.layers_mut()[l].bias.fill(0.0);
            twos.layers_mut()[l].weights.as_mut_slice().fill(2.0);
            twos.layers_mut()[l].bias.fill(2.0);
        }
        let mid = interpolate_params(&zero, &twos, &vec![0.5; n]).unwrap();
        for l in mid.layers() {
            assert!(l.weights.as_slice().iter().all(|&v| v == 1.0));
            assert!(l.bias.iter().all(|&v| v == 1.0));
        }

        assert!(interpolate_params(&a, &b, &vec![1.5; n]).is_err());
        assert!(interpolate_params(&a, &b, &vec![0.5; n + 1]).is_err());
    }

    #[test]
    fn logistic_output_stays_in_unit_interval() {
        let mut rng = rng_from_seed(5);
        let cfg = NetworkConfig {
            input_dim: 4,
            hidden: vec![16],
            activation: Activation::Tanh,
            output: OutputKind::Logistic,
            zero_init_output: false,
        };
        let net = DenseNetwork::new(&cfg, &mut rng).unwrap();
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| rng.random_range(-40.0..40.0)).collect())
            .collect();
        let preds = net.forward(&Matrix::from_rows(&rows).unwrap()).unwrap();
        assert!(preds.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn forward_rejects_width_mismatch() {
        let net = single_layer(1.0, 0.0, OutputKind::Identity);
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(net.forward(&x).is_err());
    }
}
