//! Central finite-difference verification of backpropagated gradients.

use crate::error::Result;
use crate::nn::loss::mse;
use crate::nn::network::Network;

/// Outcome of a gradient check.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    /// Largest relative error over all checked parameters; 0 when none.
    pub max_rel_error: f64,
    /// Number of trainable parameters compared.
    pub params_checked: usize,
}

impl GradCheckReport {
    /// True when the network had nothing trainable to compare (vacuous pass).
    pub fn is_vacuous(&self) -> bool {
        self.params_checked == 0
    }
}

fn loss_at(net: &Network, input: &[f64], target: &[f64]) -> Result<f64> {
    let acts = net.forward(input)?;
    mse(acts.output(), target)
}

/// Compares every backpropagated gradient component against the central
/// difference `(L(p+h) - L(p-h)) / 2h`, reporting the worst relative error
/// with denominator `max(|numeric|, 1e-8)`.
///
/// Cost is two loss evaluations per trainable parameter; intended for small
/// nets and test harnesses, not training.
pub fn grad_check(
    net: &Network,
    input: &[f64],
    target: &[f64],
    fd_step: f64,
) -> Result<GradCheckReport> {
    let acts = net.forward(input)?;
    let analytic = net.backward(&acts, target)?;

    let mut probe = net.clone();
    let mut max_rel_error = 0.0_f64;
    let mut params_checked = 0;

    // Walk blocks then dense layers, weights then biases, mirroring the
    // gradient layout.
    let block_count = net.blocks.len();
    for layer_pos in 0..block_count + net.layers.len() {
        let grad = if layer_pos < block_count {
            &analytic.blocks[layer_pos]
        } else {
            &analytic.layers[layer_pos - block_count]
        };
        let Some(grad) = grad else { continue };

        let param_count = grad.d_weights.len() + grad.d_biases.len();
        for p in 0..param_count {
            let read = |net: &Network| -> f64 {
                let layer = if layer_pos < block_count {
                    &net.blocks[layer_pos].layer
                } else {
                    &net.layers[layer_pos - block_count]
                };
                if p < layer.weights.len() {
                    layer.weights[p]
                } else {
                    layer.biases[p - layer.weights.len()]
                }
            };
            let write = |net: &mut Network, v: f64| {
                let layer = if layer_pos < block_count {
                    &mut net.blocks[layer_pos].layer
                } else {
                    &mut net.layers[layer_pos - block_count]
                };
                if p < layer.weights.len() {
                    layer.weights[p] = v;
                } else {
                    let w = layer.weights.len();
                    layer.biases[p - w] = v;
                }
            };

            let original = read(&probe);
            write(&mut probe, original + fd_step);
            let loss_plus = loss_at(&probe, input, target)?;
            write(&mut probe, original - fd_step);
            let loss_minus = loss_at(&probe, input, target)?;
            write(&mut probe, original);

            let numeric = (loss_plus - loss_minus) / (2.0 * fd_step);
            let a = if p < grad.d_weights.len() {
                grad.d_weights[p]
            } else {
                grad.d_biases[p - grad.d_weights.len()]
            };
            let rel = (a - numeric).abs() / numeric.abs().max(1e-8);
            max_rel_error = max_rel_error.max(rel);
            params_checked += 1;
        }
    }

    Ok(GradCheckReport {
        max_rel_error,
        params_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::activation::Activation;
    use crate::nn::network::{init_params, LayerShape};

    #[test]
    fn linear_single_layer_is_near_exact() {
        // The loss is quadratic in every parameter, so the central difference
        // is exact up to rounding.
        let net = init_params(&[LayerShape::new(3, 2, Activation::Linear)], 17).unwrap();
        let report = grad_check(&net, &[0.4, -0.2, 0.8], &[0.1, 0.5], 1e-5).unwrap();
        assert!(!report.is_vacuous());
        assert!(
            report.max_rel_error < 1e-7,
            "relative error {} too large",
            report.max_rel_error
        );
    }

    #[test]
    fn two_layer_tanh_sigmoid_net() {
        let net = init_params(
            &[
                LayerShape::new(4, 5, Activation::Tanh),
                LayerShape::new(5, 1, Activation::Sigmoid),
            ],
            23,
        )
        .unwrap();
        let report = grad_check(&net, &[0.2, -0.9, 0.5, 0.1], &[0.7], 1e-5).unwrap();
        assert_eq!(report.params_checked, 4 * 5 + 5 + 5 + 1);
        assert!(
            report.max_rel_error < 1e-4,
            "relative error {} too large",
            report.max_rel_error
        );
    }

    #[test]
    fn fully_frozen_net_is_a_vacuous_pass() {
        let mut net = init_params(&[LayerShape::new(2, 1, Activation::Sigmoid)], 0).unwrap();
        net.layers[0].trainable = false;
        let report = grad_check(&net, &[0.1, 0.2], &[0.5], 1e-5).unwrap();
        assert!(report.is_vacuous());
        assert_eq!(report.max_rel_error, 0.0);
    }
}
