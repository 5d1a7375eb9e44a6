//! Minimal feed-forward network engine: parameter containers, forward and
//! backward passes, MSE loss, AdaGrad mini-batch updates, input dropout, and a
//! finite-difference gradient checker.

pub mod activation;
pub mod dropout;
pub mod gradcheck;
pub mod loss;
pub mod network;
pub mod optim;

pub use activation::Activation;
pub use dropout::{apply_input_dropout, DropoutSpec};
pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::mse;
pub use network::{init_params, Activations, Gradients, InputBlock, Layer, LayerGrad, LayerShape, Network};
pub use optim::{adagrad_step, OptimizerState};
