//! Feed-forward network containers, initialization, forward and backward passes.
//!
//! A [`Network`] is a sequential stack of dense layers, optionally preceded by a
//! grouped input stage: a set of parallel blocks, each reading its own subset of
//! input columns and producing a slice of the concatenated stage output. A dense
//! network simply has no blocks. The grouped stage is what carries the sparse
//! connectivity of the composite models; everything downstream of it is dense.
//!
//! Weights are row-major with shape `(output_dim, input_dim)`. All arithmetic is
//! `f64`.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::activation::Activation;

/// Dimensions and activation of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

impl LayerShape {
    pub fn new(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        LayerShape {
            input_dim,
            output_dim,
            activation,
        }
    }
}

/// One dense layer: `y = activation(W x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub shape: LayerShape,
    /// Row-major, `output_dim x input_dim`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub trainable: bool,
}

impl Layer {
    /// Initializes weights uniformly in `[-a, a]` with `a = sqrt(6/(fan_in+fan_out))`
    /// and biases at zero.
    pub fn init<R: rand::Rng>(shape: LayerShape, rng: &mut R) -> Layer {
        let limit = (6.0 / (shape.input_dim + shape.output_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        let weights = (0..shape.input_dim * shape.output_dim)
            .map(|_| dist.sample(rng))
            .collect();
        Layer {
            shape,
            weights,
            biases: vec![0.0; shape.output_dim],
            trainable: true,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn validate(&self) -> Result<()> {
        if self.shape.input_dim == 0 || self.shape.output_dim == 0 {
            return Err(Error::config("layer dimensions must be at least 1"));
        }
        if self.weights.len() != self.shape.input_dim * self.shape.output_dim {
            return Err(Error::config(format!(
                "weight matrix has {} entries, shape {}x{} needs {}",
                self.weights.len(),
                self.shape.output_dim,
                self.shape.input_dim,
                self.shape.input_dim * self.shape.output_dim
            )));
        }
        if self.biases.len() != self.shape.output_dim {
            return Err(Error::config(format!(
                "bias vector has {} entries, expected {}",
                self.biases.len(),
                self.shape.output_dim
            )));
        }
        Ok(())
    }

    /// Computes `activation(W x + b)` into `out` (resized to `output_dim`).
    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(input.len(), self.shape.input_dim);
        out.clear();
        let n_in = self.shape.input_dim;
        for row in 0..self.shape.output_dim {
            let w = &self.weights[row * n_in..(row + 1) * n_in];
            let mut z = self.biases[row];
            for (wi, xi) in w.iter().zip(input) {
                z += wi * xi;
            }
            out.push(self.shape.activation.apply(z));
        }
    }
}

/// One block of a grouped input stage: a dense layer applied to the gathered
/// subset of input columns named by `feature_indices` (in stored order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputBlock {
    pub feature_indices: Vec<usize>,
    pub layer: Layer,
}

impl InputBlock {
    fn validate(&self, input_dim: usize) -> Result<()> {
        self.layer.validate()?;
        if self.feature_indices.is_empty() {
            return Err(Error::config("input block has no feature indices"));
        }
        if self.feature_indices.len() != self.layer.shape.input_dim {
            return Err(Error::config(format!(
                "input block maps {} features but its layer expects {}",
                self.feature_indices.len(),
                self.layer.shape.input_dim
            )));
        }
        if let Some(&bad) = self.feature_indices.iter().find(|&&i| i >= input_dim) {
            return Err(Error::config(format!(
                "feature index {bad} out of range for input dimension {input_dim}"
            )));
        }
        Ok(())
    }
}

/// A feed-forward network: optional grouped input stage followed by a dense stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    /// Length of the raw input vector.
    pub input_dim: usize,
    /// Parallel input blocks; empty for a fully dense network.
    pub blocks: Vec<InputBlock>,
    /// Sequential dense layers. With blocks present, the first layer consumes
    /// the concatenated block outputs.
    pub layers: Vec<Layer>,
    /// Set once the network has been fitted; composites require trained bases.
    pub trained: bool,
}

/// All intermediate activations of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Activations {
    /// The input vector the pass consumed (post-dropout during training).
    pub input: Vec<f64>,
    /// Concatenated block outputs; empty for dense networks.
    pub stage: Vec<f64>,
    /// Output of each dense layer, in order.
    pub layer_outputs: Vec<Vec<f64>>,
}

impl Activations {
    /// Final network output.
    pub fn output(&self) -> &[f64] {
        self.layer_outputs
            .last()
            .expect("network has at least one layer")
    }
}

/// Gradient of the loss with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub d_weights: Vec<f64>,
    pub d_biases: Vec<f64>,
}

impl LayerGrad {
    fn zeros(layer: &Layer) -> LayerGrad {
        LayerGrad {
            d_weights: vec![0.0; layer.weights.len()],
            d_biases: vec![0.0; layer.biases.len()],
        }
    }
}

/// Gradients for every trainable parameter of a network.
///
/// Entries are `None` for frozen layers: frozen parameters receive no gradient
/// at all, mirroring the network structure position by position.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub blocks: Vec<Option<LayerGrad>>,
    pub layers: Vec<Option<LayerGrad>>,
}

impl Gradients {
    /// Zero gradients shaped like `net`, with `None` at frozen positions.
    pub fn zeros(net: &Network) -> Gradients {
        Gradients {
            blocks: net
                .blocks
                .iter()
                .map(|b| b.layer.trainable.then(|| LayerGrad::zeros(&b.layer)))
                .collect(),
            layers: net
                .layers
                .iter()
                .map(|l| l.trainable.then(|| LayerGrad::zeros(l)))
                .collect(),
        }
    }

    /// True when no layer has a gradient entry (fully frozen network).
    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(Option::is_none) && self.layers.iter().all(Option::is_none)
    }

    /// Scales every gradient component, e.g. by `1/batch_size`.
    pub fn scale(&mut self, factor: f64) {
        for grad in self.blocks.iter_mut().chain(&mut self.layers).flatten() {
            for g in grad.d_weights.iter_mut().chain(&mut grad.d_biases) {
                *g *= factor;
            }
        }
    }

    /// Maximum absolute gradient component; 0 when empty.
    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .chain(&self.layers)
            .flatten()
            .flat_map(|g| g.d_weights.iter().chain(&g.d_biases))
            .fold(0.0_f64, |m, g| m.max(g.abs()))
    }
}

/// Builds a dense network from chained layer shapes with seeded initialization.
///
/// Weights are drawn uniformly in `[-a, a]`, `a = sqrt(6/(fan_in+fan_out))`;
/// biases start at zero; every layer is trainable. The same seed reproduces the
/// same parameters bit for bit.
pub fn init_params(shapes: &[LayerShape], seed: u64) -> Result<Network> {
    if shapes.is_empty() {
        return Err(Error::config("network needs at least one layer"));
    }
    for pair in shapes.windows(2) {
        if pair[0].output_dim != pair[1].input_dim {
            return Err(Error::config(format!(
                "layer dimensions do not chain: {} outputs feed a layer expecting {} inputs",
                pair[0].output_dim, pair[1].input_dim
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers: Vec<Layer> = shapes.iter().map(|&s| Layer::init(s, &mut rng)).collect();
    let net = Network {
        input_dim: shapes[0].input_dim,
        blocks: Vec::new(),
        layers,
        trained: false,
    };
    net.validate()?;
    Ok(net)
}

impl Network {
    /// Checks dimension chaining, block index ranges, and stage width.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        for block in &self.blocks {
            block.validate(self.input_dim)?;
        }
        let first_in = if self.blocks.is_empty() {
            self.input_dim
        } else {
            self.stage_width()
        };
        if self.layers[0].shape.input_dim != first_in {
            return Err(Error::config(format!(
                "first dense layer expects {} inputs but receives {}",
                self.layers[0].shape.input_dim, first_in
            )));
        }
        for layer in &self.layers {
            layer.validate()?;
        }
        for pair in self.layers.windows(2) {
            if pair[0].shape.output_dim != pair[1].shape.input_dim {
                return Err(Error::config(format!(
                    "layer dimensions do not chain: {} outputs feed a layer expecting {} inputs",
                    pair[0].shape.output_dim, pair[1].shape.input_dim
                )));
            }
        }
        Ok(())
    }

    /// Width of the concatenated block outputs (0 for dense networks).
    pub fn stage_width(&self) -> usize {
        self.blocks.iter().map(|b| b.layer.shape.output_dim).sum()
    }

    /// Network output dimension.
    pub fn output_dim(&self) -> usize {
        self.layers
            .last()
            .map(|l| l.shape.output_dim)
            .unwrap_or(0)
    }

    /// Total parameter count (weights and biases), trainable or not.
    ///
    /// Absent connections in the grouped stage are not parameters.
    pub fn param_count(&self) -> usize {
        self.blocks.iter().map(|b| b.layer.param_count()).sum::<usize>()
            + self.layers.iter().map(Layer::param_count).sum::<usize>()
    }

    /// Parameter count restricted to trainable layers.
    pub fn trainable_param_count(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| &b.layer)
            .chain(&self.layers)
            .filter(|l| l.trainable)
            .map(|l| l.param_count())
            .sum()
    }

    /// Marks every layer trainable. Parameter values are untouched.
    pub fn set_all_trainable(&mut self) {
        for block in &mut self.blocks {
            block.layer.trainable = true;
        }
        for layer in &mut self.layers {
            layer.trainable = true;
        }
    }

    /// Runs the forward pass, returning every intermediate activation.
    pub fn forward(&self, input: &[f64]) -> Result<Activations> {
        if input.len() != self.input_dim {
            return Err(Error::input(format!(
                "input has {} components, network expects {}",
                input.len(),
                self.input_dim
            )));
        }

        let mut stage = Vec::with_capacity(self.stage_width());
        if !self.blocks.is_empty() {
            let mut gathered = Vec::new();
            let mut block_out = Vec::new();
            for block in &self.blocks {
                gathered.clear();
                gathered.extend(block.feature_indices.iter().map(|&i| input[i]));
                block.layer.forward_into(&gathered, &mut block_out);
                stage.extend_from_slice(&block_out);
            }
        }

        let mut layer_outputs = Vec::with_capacity(self.layers.len());
        {
            let mut current: &[f64] = if self.blocks.is_empty() { input } else { &stage };
            for layer in &self.layers {
                let mut out = Vec::new();
                layer.forward_into(current, &mut out);
                layer_outputs.push(out);
                current = layer_outputs.last().unwrap();
            }
        }

        Ok(Activations {
            input: input.to_vec(),
            stage,
            layer_outputs,
        })
    }

    /// Convenience scalar scorer for one-output networks.
    pub fn score(&self, input: &[f64]) -> Result<f64> {
        if self.output_dim() != 1 {
            return Err(Error::internal(format!(
                "score() needs a 1-output network, got {} outputs",
                self.output_dim()
            )));
        }
        Ok(self.forward(input)?.output()[0])
    }

    /// Backpropagates the mean-squared-error loss, returning fresh gradients.
    ///
    /// Frozen layers receive no gradient entries. `activations` must come from
    /// a `forward` call on this same network.
    pub fn backward(&self, activations: &Activations, target: &[f64]) -> Result<Gradients> {
        let mut grads = Gradients::zeros(self);
        self.backward_accumulate(activations, target, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Network::backward`] but accumulates (`+=`) into existing gradients,
    /// for summing over a mini-batch without reallocating.
    pub fn backward_accumulate(
        &self,
        activations: &Activations,
        target: &[f64],
        grads: &mut Gradients,
    ) -> Result<()> {
        let output = activations
            .layer_outputs
            .last()
            .ok_or_else(|| Error::internal("activations carry no layer outputs"))?;
        if target.len() != output.len() {
            return Err(Error::internal(format!(
                "target has {} components, output has {}",
                target.len(),
                output.len()
            )));
        }
        if activations.layer_outputs.len() != self.layers.len()
            || activations.input.len() != self.input_dim
            || activations.stage.len() != self.stage_width()
            || grads.layers.len() != self.layers.len()
            || grads.blocks.len() != self.blocks.len()
        {
            return Err(Error::internal(
                "activations or gradients do not match the network structure",
            ));
        }

        // d(loss)/d(output) for loss = mean_i (y_i - t_i)^2.
        let n = output.len() as f64;
        let mut d_out: Vec<f64> = output
            .iter()
            .zip(target)
            .map(|(y, t)| 2.0 * (y - t) / n)
            .collect();

        // Whether anything below the dense stack still needs a gradient.
        let blocks_need_grad = self.blocks.iter().any(|b| b.layer.trainable);

        let mut d_in: Vec<f64> = Vec::new();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let out = &activations.layer_outputs[idx];
            let input: &[f64] = if idx == 0 {
                if self.blocks.is_empty() {
                    &activations.input
                } else {
                    &activations.stage
                }
            } else {
                &activations.layer_outputs[idx - 1]
            };
            debug_assert_eq!(input.len(), layer.shape.input_dim);

            // Gradient below this layer is needed if any earlier dense layer is
            // trainable or the grouped stage is.
            let need_d_in =
                blocks_need_grad || self.layers[..idx].iter().any(|l| l.trainable);

            if need_d_in {
                d_in.clear();
                d_in.resize(layer.shape.input_dim, 0.0);
            }

            let n_in = layer.shape.input_dim;
            let grad_entry = grads.layers[idx].as_mut();
            if layer.trainable != grad_entry.is_some() {
                return Err(Error::internal(
                    "gradient entries are misaligned with trainable flags",
                ));
            }
            match grad_entry {
                Some(grad) => {
                    for row in 0..layer.shape.output_dim {
                        let dz = d_out[row] * layer.shape.activation.grad_from_output(out[row]);
                        grad.d_biases[row] += dz;
                        let w_row = &layer.weights[row * n_in..(row + 1) * n_in];
                        let g_row = &mut grad.d_weights[row * n_in..(row + 1) * n_in];
                        if need_d_in {
                            for i in 0..n_in {
                                g_row[i] += dz * input[i];
                                d_in[i] += w_row[i] * dz;
                            }
                        } else {
                            for i in 0..n_in {
                                g_row[i] += dz * input[i];
                            }
                        }
                    }
                }
                None => {
                    if need_d_in {
                        for row in 0..layer.shape.output_dim {
                            let dz = d_out[row] * layer.shape.activation.grad_from_output(out[row]);
                            let w_row = &layer.weights[row * n_in..(row + 1) * n_in];
                            for i in 0..n_in {
                                d_in[i] += w_row[i] * dz;
                            }
                        }
                    }
                }
            }

            if !need_d_in {
                // Nothing below is trainable; the pass is complete.
                return Ok(());
            }
            std::mem::swap(&mut d_out, &mut d_in);
        }

        // Grouped stage: d_out now holds the gradient w.r.t. the concatenated
        // stage output.
        let mut offset = 0;
        for (block, grad_entry) in self.blocks.iter().zip(&mut grads.blocks) {
            let width = block.layer.shape.output_dim;
            let rows = offset..offset + width;
            if block.layer.trainable != grad_entry.is_some() {
                return Err(Error::internal(
                    "gradient entries are misaligned with trainable flags",
                ));
            }
            if let Some(grad) = grad_entry.as_mut() {
                let n_in = block.layer.shape.input_dim;
                for (local, row) in rows.enumerate() {
                    let y = activations.stage[row];
                    let dz = d_out[row] * block.layer.shape.activation.grad_from_output(y);
                    grad.d_biases[local] += dz;
                    let g_row = &mut grad.d_weights[local * n_in..(local + 1) * n_in];
                    for (i, &feat) in block.feature_indices.iter().enumerate() {
                        g_row[i] += dz * activations.input[feat];
                    }
                }
            }
            offset += width;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shapes(dims: &[(usize, usize, Activation)]) -> Vec<LayerShape> {
        dims.iter()
            .map(|&(i, o, a)| LayerShape::new(i, o, a))
            .collect()
    }

    #[test]
    fn init_params_shapes_and_zero_biases() {
        let net = init_params(
            &shapes(&[
                (4, 3, Activation::Tanh),
                (3, 1, Activation::Sigmoid),
            ]),
            7,
        )
        .unwrap();
        assert_eq!(net.layers[0].weights.len(), 12);
        assert_eq!(net.layers[0].biases, vec![0.0, 0.0, 0.0]);
        assert_eq!(net.layers[1].weights.len(), 3);
        assert_eq!(net.layers[1].biases, vec![0.0]);
        assert!(net.layers.iter().all(|l| l.trainable));
    }

    #[test]
    fn init_params_is_deterministic() {
        let s = shapes(&[(4, 3, Activation::Tanh), (3, 1, Activation::Sigmoid)]);
        let a = init_params(&s, 7).unwrap();
        let b = init_params(&s, 7).unwrap();
        assert_eq!(a, b);
        let c = init_params(&s, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_params_rejects_chain_mismatch() {
        let err = init_params(
            &shapes(&[(4, 3, Activation::Tanh), (5, 1, Activation::Sigmoid)]),
            7,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn init_weights_respect_fan_limit() {
        let net = init_params(&shapes(&[(10, 6, Activation::Tanh)]), 3).unwrap();
        let limit = (6.0 / 16.0_f64).sqrt();
        assert!(net.layers[0].weights.iter().all(|w| w.abs() <= limit));
        // Not all zero, and spread over the range.
        assert!(net.layers[0].weights.iter().any(|w| w.abs() > limit / 4.0));
    }

    #[test]
    fn forward_zero_net_sigmoid_gives_half() {
        let mut net = init_params(&shapes(&[(3, 2, Activation::Sigmoid)]), 0).unwrap();
        net.layers[0].weights.fill(0.0);
        let acts = net.forward(&[0.3, -1.0, 2.0]).unwrap();
        assert_eq!(acts.output(), &[0.5, 0.5]);
    }

    #[test]
    fn forward_identity_linear_layer() {
        let mut net = init_params(&shapes(&[(3, 3, Activation::Linear)]), 0).unwrap();
        net.layers[0].weights.fill(0.0);
        for i in 0..3 {
            net.layers[0].weights[i * 3 + i] = 1.0;
        }
        let x = [0.25, -4.0, 1.5];
        let acts = net.forward(&x).unwrap();
        assert_eq!(acts.output(), &x);
    }

    #[test]
    fn forward_rejects_length_mismatch() {
        let net = init_params(&shapes(&[(3, 1, Activation::Sigmoid)]), 0).unwrap();
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(Error::Input(_))));
    }

    /// Independent scalar-loop evaluation of a two-layer net, written without
    /// reusing any of the implementation's helpers.
    fn hand_rolled_two_layer(net: &Network, x: &[f64]) -> Vec<f64> {
        let l0 = &net.layers[0];
        let mut h = vec![0.0; l0.shape.output_dim];
        for r in 0..l0.shape.output_dim {
            let mut z = l0.biases[r];
            for c in 0..l0.shape.input_dim {
                z += l0.weights[r * l0.shape.input_dim + c] * x[c];
            }
            h[r] = z.tanh();
        }
        let l1 = &net.layers[1];
        let mut y = vec![0.0; l1.shape.output_dim];
        for r in 0..l1.shape.output_dim {
            let mut z = l1.biases[r];
            for c in 0..l1.shape.input_dim {
                z += l1.weights[r * l1.shape.input_dim + c] * h[c];
            }
            y[r] = 1.0 / (1.0 + (-z).exp());
        }
        y
    }

    #[test]
    fn forward_matches_hand_rolled_matrix_evaluation() {
        let net = init_params(
            &shapes(&[(5, 4, Activation::Tanh), (4, 2, Activation::Sigmoid)]),
            42,
        )
        .unwrap();
        let x = [0.7, -0.3, 0.1, 0.9, -0.8];
        let got = net.forward(&x).unwrap();
        let want = hand_rolled_two_layer(&net, &x);
        for (g, w) in got.output().iter().zip(&want) {
            assert!((g - w).abs() < 1e-15, "got {g}, hand-rolled {w}");
        }
    }

    #[test]
    fn backward_fully_frozen_yields_empty_gradients() {
        let mut net = init_params(
            &shapes(&[(3, 2, Activation::Tanh), (2, 1, Activation::Sigmoid)]),
            1,
        )
        .unwrap();
        for layer in &mut net.layers {
            layer.trainable = false;
        }
        let acts = net.forward(&[0.1, 0.2, 0.3]).unwrap();
        let grads = net.backward(&acts, &[0.5]).unwrap();
        assert!(grads.is_empty());
    }

    #[test]
    fn backward_zero_at_loss_minimum() {
        let net = init_params(
            &shapes(&[(2, 3, Activation::Tanh), (3, 1, Activation::Sigmoid)]),
            5,
        )
        .unwrap();
        let acts = net.forward(&[0.4, -0.6]).unwrap();
        let target = acts.output().to_vec();
        let grads = net.backward(&acts, &target).unwrap();
        assert_eq!(grads.max_abs(), 0.0);
    }

    #[test]
    fn grouped_network_gathers_only_its_columns() {
        // Two blocks over a 4-dim input: block 0 reads {0,2}, block 1 reads {1,3}.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b0 = InputBlock {
            feature_indices: vec![0, 2],
            layer: Layer::init(LayerShape::new(2, 2, Activation::Tanh), &mut rng),
        };
        let b1 = InputBlock {
            feature_indices: vec![1, 3],
            layer: Layer::init(LayerShape::new(2, 2, Activation::Tanh), &mut rng),
        };
        let head = Layer::init(LayerShape::new(4, 1, Activation::Sigmoid), &mut rng);
        let net = Network {
            input_dim: 4,
            blocks: vec![b0, b1],
            layers: vec![head],
            trained: false,
        };
        net.validate().unwrap();

        let base = net.forward(&[0.3, 0.5, -0.2, 0.9]).unwrap();
        // Changing a column outside block 0 leaves block 0's stage slice alone.
        let other = net.forward(&[0.3, -5.0, -0.2, 14.0]).unwrap();
        assert_eq!(base.stage[..2], other.stage[..2]);
        assert_ne!(base.stage[2..], other.stage[2..]);
    }
}
