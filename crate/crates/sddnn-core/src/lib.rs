//! Block-sparse, stage-trained feed-forward networks for session-level
//! behavior classification from windowed acoustic functionals.
//!
//! The pipeline turns per-speaker low-level-descriptor (LLD) streams into
//! normalized sliding-window functional frames, trains small per-feature-group
//! networks, freezes and fuses them into a sparse composite, and aggregates
//! frame scores into session-level decisions and behavior trajectories.
//!
//! Module map:
//! - [`nn`]: the network engine (forward/backward, MSE, AdaGrad, dropout,
//!   gradient checking)
//! - [`arch`]: feature partitioning and the four model regimes built on top of
//!   per-group subnets (sparse composite, unfrozen variant, zero-filled dense
//!   expansion)
//! - [`features`]: LLD streams, session normalization, window functionals
//! - [`session`]: frame-score aggregation, threshold fitting, accuracy,
//!   trajectory export
//! - [`corpus`]: session records, extreme selection, leave-one-couple-out
//!   folds, synthetic corpus generation
//! - [`trainer`]: regime training loops and the cross-validation harness
//! - [`io`]: file formats (model JSON, LLD/frame CSV, manifests, layouts)

pub mod arch;
pub mod corpus;
pub mod error;
pub mod features;
pub mod io;
pub mod nn;
pub mod session;
pub mod trainer;

pub use error::{Error, Result};
