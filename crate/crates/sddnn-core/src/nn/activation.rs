//! Element-wise activation functions.

use serde::{Deserialize, Serialize};

/// Activation applied element-wise after a layer's affine transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Linear,
}

/// Largest f64 strictly below 1.0.
const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;

impl Activation {
    /// Applies the activation to a pre-activation value.
    ///
    /// Sigmoid is evaluated in the sign-split stable form and clamped into the
    /// open interval (0,1): scorer outputs feed a logarithm downstream, so the
    /// saturated endpoints must stay unreachable even for extreme inputs.
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => {
                let y = if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                };
                y.clamp(f64::MIN_POSITIVE, ONE_BELOW)
            }
            Activation::Linear => z,
        }
    }

    /// Derivative of the activation expressed through its output value.
    ///
    /// tanh' = 1 - y^2, sigmoid' = y(1 - y), linear' = 1. Using the output
    /// avoids re-evaluating the forward transform during backpropagation.
    #[inline]
    pub fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Linear => 1.0,
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        };
        f.write_str(name)
    }
}
