//! Adaptive-gradient (AdaGrad) parameter updates.
//!
//! Each trainable parameter keeps an accumulator of squared gradients; the
//! update is `p -= lr * g / (sqrt(acc) + eps)`, so frequently-moving parameters
//! take progressively smaller steps. Frozen layers have no accumulators and are
//! never touched.

use crate::error::{Error, Result};
use crate::nn::network::{Gradients, Network};

struct Accumulator {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

/// Per-parameter squared-gradient accumulators plus the step hyperparameters.
pub struct OptimizerState {
    pub learning_rate: f64,
    pub epsilon: f64,
    blocks: Vec<Option<Accumulator>>,
    layers: Vec<Option<Accumulator>>,
}

impl OptimizerState {
    /// Fresh zeroed accumulators for every trainable layer of `net`.
    ///
    /// A zero learning rate is allowed as the degenerate no-op schedule.
    pub fn new(net: &Network, learning_rate: f64, epsilon: f64) -> Result<OptimizerState> {
        if learning_rate < 0.0 {
            return Err(Error::config("learning rate must be non-negative"));
        }
        if epsilon < 0.0 {
            return Err(Error::config("epsilon must be non-negative"));
        }
        let acc = |weights: usize, biases: usize| Accumulator {
            weights: vec![0.0; weights],
            biases: vec![0.0; biases],
        };
        Ok(OptimizerState {
            learning_rate,
            epsilon,
            blocks: net
                .blocks
                .iter()
                .map(|b| {
                    b.layer
                        .trainable
                        .then(|| acc(b.layer.weights.len(), b.layer.biases.len()))
                })
                .collect(),
            layers: net
                .layers
                .iter()
                .map(|l| l.trainable.then(|| acc(l.weights.len(), l.biases.len())))
                .collect(),
        })
    }

    /// Every accumulator entry is non-negative by construction; exposed for tests.
    #[cfg(test)]
    fn accumulators_non_negative(&self) -> bool {
        self.blocks
            .iter()
            .chain(&self.layers)
            .flatten()
            .all(|a| a.weights.iter().chain(&a.biases).all(|v| *v >= 0.0))
    }
}

fn update_params(
    weights: &mut [f64],
    biases: &mut [f64],
    grad_w: &[f64],
    grad_b: &[f64],
    acc: &mut Accumulator,
    lr: f64,
    eps: f64,
) -> Result<()> {
    if grad_w.len() != weights.len() || grad_b.len() != biases.len() {
        return Err(Error::internal("gradient does not match parameter shape"));
    }
    for ((p, g), a) in weights
        .iter_mut()
        .zip(grad_w)
        .chain(biases.iter_mut().zip(grad_b))
        .zip(acc.weights.iter_mut().chain(&mut acc.biases))
    {
        *a += g * g;
        if *g != 0.0 {
            *p -= lr * g / (a.sqrt() + eps);
        }
    }
    Ok(())
}

/// Applies one AdaGrad step in place. Frozen parameters are untouched;
/// gradients must align with the network's trainable layers.
pub fn adagrad_step(net: &mut Network, grads: &Gradients, state: &mut OptimizerState) -> Result<()> {
    if grads.blocks.len() != net.blocks.len()
        || grads.layers.len() != net.layers.len()
        || state.blocks.len() != net.blocks.len()
        || state.layers.len() != net.layers.len()
    {
        return Err(Error::internal(
            "gradients or optimizer state do not match the network structure",
        ));
    }

    let layer_iter = net
        .blocks
        .iter_mut()
        .map(|b| &mut b.layer)
        .zip(grads.blocks.iter().zip(&mut state.blocks))
        .chain(
            net.layers
                .iter_mut()
                .zip(grads.layers.iter().zip(&mut state.layers)),
        );

    for (layer, (grad, acc)) in layer_iter {
        match (layer.trainable, grad, acc) {
            (true, Some(grad), Some(acc)) => update_params(
                &mut layer.weights,
                &mut layer.biases,
                &grad.d_weights,
                &grad.d_biases,
                acc,
                state.learning_rate,
                state.epsilon,
            )?,
            (false, None, None) => {}
            _ => {
                return Err(Error::internal(
                    "gradient entries are misaligned with trainable flags",
                ))
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::activation::Activation;
    use crate::nn::network::{init_params, LayerShape};

    fn scalar_net(w: f64) -> Network {
        let mut net = init_params(&[LayerShape::new(1, 1, Activation::Linear)], 0).unwrap();
        net.layers[0].weights[0] = w;
        net.layers[0].biases[0] = 0.0;
        net
    }

    fn scalar_grad(net: &Network, g_w: f64) -> Gradients {
        let mut grads = Gradients::zeros(net);
        grads.layers[0].as_mut().unwrap().d_weights[0] = g_w;
        grads
    }

    #[test]
    fn zero_gradient_changes_nothing() {
        let mut net = scalar_net(0.75);
        let grads = scalar_grad(&net, 0.0);
        let mut state = OptimizerState::new(&net, 0.1, 1e-8).unwrap();
        adagrad_step(&mut net, &grads, &mut state).unwrap();
        assert_eq!(net.layers[0].weights[0], 0.75);
        assert!(state.accumulators_non_negative());
    }

    #[test]
    fn hand_arithmetic_single_step() {
        // w=0, g=2, lr=0.1, eps=0: accumulator becomes 4, w -> -0.1*2/2 = -0.1.
        let mut net = scalar_net(0.0);
        let grads = scalar_grad(&net, 2.0);
        let mut state = OptimizerState::new(&net, 0.1, 0.0).unwrap();
        adagrad_step(&mut net, &grads, &mut state).unwrap();
        assert!((net.layers[0].weights[0] - (-0.1)).abs() < 1e-15);
    }

    #[test]
    fn repeated_gradients_shrink_the_step() {
        let mut net = scalar_net(0.0);
        let grads = scalar_grad(&net, 2.0);
        let mut state = OptimizerState::new(&net, 0.1, 1e-8).unwrap();
        adagrad_step(&mut net, &grads, &mut state).unwrap();
        let first = net.layers[0].weights[0].abs();
        let before = net.layers[0].weights[0];
        adagrad_step(&mut net, &grads, &mut state).unwrap();
        let second = (net.layers[0].weights[0] - before).abs();
        assert!(second < first, "second step {second} not below first {first}");
        assert!(state.accumulators_non_negative());
    }

    #[test]
    fn frozen_layers_are_untouched() {
        let mut net = init_params(
            &[
                LayerShape::new(2, 2, Activation::Tanh),
                LayerShape::new(2, 1, Activation::Sigmoid),
            ],
            3,
        )
        .unwrap();
        net.layers[0].trainable = false;
        let frozen = net.layers[0].clone();

        let mut grads = Gradients::zeros(&net);
        grads.layers[1].as_mut().unwrap().d_weights.fill(1.0);
        let mut state = OptimizerState::new(&net, 0.5, 1e-8).unwrap();
        for _ in 0..10 {
            adagrad_step(&mut net, &grads, &mut state).unwrap();
        }
        assert_eq!(net.layers[0], frozen);
        assert_ne!(net.layers[1].weights, init_params(
            &[
                LayerShape::new(2, 2, Activation::Tanh),
                LayerShape::new(2, 1, Activation::Sigmoid),
            ],
            3,
        )
        .unwrap()
        .layers[1]
            .weights);
    }

    #[test]
    fn misaligned_gradients_are_an_internal_error() {
        let mut net = scalar_net(0.0);
        let other = init_params(
            &[
                LayerShape::new(1, 1, Activation::Linear),
                LayerShape::new(1, 1, Activation::Linear),
            ],
            0,
        )
        .unwrap();
        let grads = Gradients::zeros(&other);
        let mut state = OptimizerState::new(&net, 0.1, 1e-8).unwrap();
        assert!(matches!(
            adagrad_step(&mut net, &grads, &mut state),
            Err(Error::Internal(_))
        ));
    }
}
