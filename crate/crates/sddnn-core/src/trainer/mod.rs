//! Training loops for the five model regimes and the cross-validation harness.

pub mod cv;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arch::{build_subnet, compose_sd, densify, unfreeze, SubnetAssignment};
use crate::corpus::{label_frames, SessionRecord};
use crate::error::{Error, Result};
use crate::features::FrameFeature;
use crate::nn::{
    adagrad_step, apply_input_dropout, mse, DropoutSpec, Gradients, LayerShape, Network,
    OptimizerState,
};

pub use cv::{render_tables, run_cv, CvReport};

/// The five training regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Fully connected network with input dropout.
    Dense,
    /// Independent per-feature-group networks, evaluated standalone.
    Subnet,
    /// Sparse composite: frozen subnet bases plus trained fusion layers.
    Sd,
    /// The composite with every layer unfrozen and jointly fine-tuned.
    Sj,
    /// Fully connected network initialized from the composite, zeros elsewhere.
    SdInit,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::Dense,
        Regime::Subnet,
        Regime::Sd,
        Regime::Sj,
        Regime::SdInit,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Dense => "dense",
            Regime::Subnet => "subnet",
            Regime::Sd => "sd",
            Regime::Sj => "sj",
            Regime::SdInit => "sd_init",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Regime> {
        match s {
            "dense" => Ok(Regime::Dense),
            "subnet" => Ok(Regime::Subnet),
            "sd" => Ok(Regime::Sd),
            "sj" => Ok(Regime::Sj),
            "sd_init" => Ok(Regime::SdInit),
            other => Err(Error::config(format!(
                "unknown regime '{other}' (expected dense, subnet, sd, sj, or sd_init)"
            ))),
        }
    }
}

/// Hyperparameters shared by every regime's training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub regime: Regime,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epsilon: f64,
    /// Input dropout rate; applied in the dense regime only.
    pub dropout_rate: f64,
    /// Hidden widths of the dense regime.
    pub dense_hidden: Vec<usize>,
    /// Hidden width of each per-group subnet.
    pub subnet_hidden: usize,
    /// Fusion-stack hidden widths of the composite.
    pub fusion_hidden: Vec<usize>,
    pub seed: u64,
    /// Fraction of training couples held out for early stopping; 0 disables.
    pub dev_fraction: f64,
    /// Non-improving epochs tolerated before early stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            regime: Regime::Dense,
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.05,
            epsilon: 1e-8,
            dropout_rate: 0.5,
            dense_hidden: vec![15],
            subnet_hidden: 15,
            fusion_hidden: vec![30, 10],
            seed: 1,
            dev_fraction: 0.0,
            patience: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epoch count must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if self.learning_rate < 0.0 {
            return Err(Error::config("learning rate must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config("dropout rate must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return Err(Error::config("dev fraction must lie in [0, 1)"));
        }
        if self.dense_hidden.is_empty() || self.dense_hidden.iter().any(|&w| w == 0) {
            return Err(Error::config("dense hidden widths must be at least 1"));
        }
        if self.subnet_hidden == 0 {
            return Err(Error::config("subnet hidden width must be at least 1"));
        }
        Ok(())
    }
}

/// Mixes tag values into a base seed (splitmix64), so every training stage,
/// fold, and group draws from its own deterministic stream.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let mut state = splitmix64(base);
    for &tag in tags {
        state = splitmix64(state ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    state
}

/// One training example with its data-lineage tags.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRow {
    pub session_id: String,
    pub couple_id: String,
    pub target: f64,
    pub features: Vec<f64>,
}

/// A set of labeled training frames.
#[derive(Debug, Clone, Default)]
pub struct TrainSet {
    pub rows: Vec<TrainRow>,
}

impl TrainSet {
    /// Pairs frames with their sessions' binary labels and lineage tags.
    /// Frames of sessions absent from `labeled` are ignored.
    pub fn from_frames(frames: &[FrameFeature], labeled: &[SessionRecord]) -> Result<TrainSet> {
        let ids: std::collections::HashSet<&str> =
            labeled.iter().map(|s| s.session_id.as_str()).collect();
        let couple_of: std::collections::HashMap<&str, &str> = labeled
            .iter()
            .map(|s| (s.session_id.as_str(), s.couple_id.as_str()))
            .collect();
        let kept: Vec<&FrameFeature> = frames
            .iter()
            .filter(|f| ids.contains(f.session_id.as_str()))
            .collect();
        let kept_owned: Vec<FrameFeature> = kept.iter().map(|f| (*f).clone()).collect();
        let pairs = label_frames(&kept_owned, labeled)?;
        let rows = pairs
            .into_iter()
            .map(|(idx, target)| {
                let frame = &kept_owned[idx];
                TrainRow {
                    session_id: frame.session_id.clone(),
                    couple_id: couple_of[frame.session_id.as_str()].to_string(),
                    target,
                    features: frame.values.clone(),
                }
            })
            .collect();
        Ok(TrainSet { rows })
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn feature_dim(&self) -> Result<usize> {
        let dim = self
            .rows
            .first()
            .map(|r| r.features.len())
            .ok_or_else(|| Error::config("training set is empty"))?;
        if let Some(bad) = self.rows.iter().find(|r| r.features.len() != dim) {
            return Err(Error::input(format!(
                "frame of session {} has {} features, expected {dim}",
                bad.session_id,
                bad.features.len()
            )));
        }
        Ok(dim)
    }

    /// True when both binary targets occur.
    pub fn has_both_classes(&self) -> bool {
        self.rows.iter().any(|r| r.target == 0.0) && self.rows.iter().any(|r| r.target == 1.0)
    }
}

/// What one training run did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    /// Mean training loss per epoch, as optimized (dropout included).
    pub loss_curve: Vec<f64>,
    /// Epochs actually executed (differs from the budget under early stopping).
    pub epochs_run: usize,
}

/// Runs the mini-batch AdaGrad loop on `net` in place.
///
/// Per epoch the sample order is reshuffled from the seeded stream, gradients
/// are averaged over each batch, and one AdaGrad step is applied per batch.
/// With `dev_fraction > 0` a couple-level split is held out and training stops
/// after `patience` epochs without dev improvement, restoring the best
/// parameters seen.
pub fn fit(
    net: &mut Network,
    set: &TrainSet,
    cfg: &TrainConfig,
    dropout: Option<DropoutSpec>,
    seed: u64,
) -> Result<FitSummary> {
    cfg.validate()?;
    if set.is_empty() {
        return Err(Error::config("cannot train on an empty set"));
    }
    let dim = set.feature_dim()?;
    if dim != net.input_dim {
        return Err(Error::input(format!(
            "training frames have {dim} features but the network expects {}",
            net.input_dim
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Optional couple-level development split for early stopping.
    let (train_idx, dev_idx): (Vec<usize>, Vec<usize>) = if cfg.dev_fraction > 0.0 {
        let mut couples: Vec<&str> = set.rows.iter().map(|r| r.couple_id.as_str()).collect();
        couples.sort_unstable();
        couples.dedup();
        if couples.len() < 2 {
            return Err(Error::config(
                "development split needs at least two couples",
            ));
        }
        let n_dev = ((couples.len() as f64 * cfg.dev_fraction).floor() as usize)
            .max(1)
            .min(couples.len() - 1);
        let mut shuffled = couples.clone();
        shuffled.shuffle(&mut rng);
        let dev_couples: std::collections::HashSet<&str> =
            shuffled[..n_dev].iter().copied().collect();
        let mut train = Vec::new();
        let mut dev = Vec::new();
        for (i, row) in set.rows.iter().enumerate() {
            if dev_couples.contains(row.couple_id.as_str()) {
                dev.push(i);
            } else {
                train.push(i);
            }
        }
        (train, dev)
    } else {
        ((0..set.rows.len()).collect(), Vec::new())
    };
    if train_idx.is_empty() {
        return Err(Error::config("development split consumed every frame"));
    }

    let mut state = OptimizerState::new(net, cfg.learning_rate, cfg.epsilon)?;
    let mut order = train_idx.clone();
    let mut loss_curve = Vec::with_capacity(cfg.epochs);

    let mut best: Option<(f64, Network)> = None;
    let mut stale_epochs = 0usize;
    let mut epochs_run = 0usize;

    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = Gradients::zeros(net);
            for &i in batch {
                let row = &set.rows[i];
                let acts = match dropout {
                    Some(spec) => {
                        let masked = apply_input_dropout(&row.features, spec, &mut rng);
                        net.forward(&masked)?
                    }
                    None => net.forward(&row.features)?,
                };
                epoch_loss += mse(acts.output(), &[row.target])?;
                net.backward_accumulate(&acts, &[row.target], &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            adagrad_step(net, &grads, &mut state)?;
        }
        epoch_loss /= order.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::internal(format!(
                "training loss became non-finite at epoch {epochs_run}"
            )));
        }
        loss_curve.push(epoch_loss);
        epochs_run += 1;

        if !dev_idx.is_empty() {
            let mut dev_loss = 0.0;
            for &i in &dev_idx {
                let row = &set.rows[i];
                let acts = net.forward(&row.features)?;
                dev_loss += mse(acts.output(), &[row.target])?;
            }
            dev_loss /= dev_idx.len() as f64;
            let improved = best
                .as_ref()
                .map(|(b, _)| dev_loss < *b)
                .unwrap_or(true);
            if improved {
                best = Some((dev_loss, net.clone()));
                stale_epochs = 0;
            } else {
                stale_epochs += 1;
                if stale_epochs >= cfg.patience {
                    break;
                }
            }
        }
    }

    if let Some((_, best_net)) = best {
        *net = best_net;
    }
    net.trained = true;
    Ok(FitSummary {
        loss_curve,
        epochs_run,
    })
}

/// Trains the fully connected regime with input dropout.
pub fn train_dense(set: &TrainSet, cfg: &TrainConfig) -> Result<(Network, FitSummary)> {
    let dim = set.feature_dim()?;
    let mut shapes = Vec::with_capacity(cfg.dense_hidden.len() + 1);
    let mut prev = dim;
    for &width in &cfg.dense_hidden {
        shapes.push(LayerShape::new(prev, width, crate::nn::Activation::Tanh));
        prev = width;
    }
    shapes.push(LayerShape::new(prev, 1, crate::nn::Activation::Sigmoid));

    let mut net = crate::nn::init_params(&shapes, derive_seed(cfg.seed, &[10]))?;
    let dropout = if cfg.dropout_rate > 0.0 {
        Some(DropoutSpec::new(cfg.dropout_rate)?)
    } else {
        None
    };
    let summary = fit(&mut net, set, cfg, dropout, derive_seed(cfg.seed, &[11]))?;
    Ok((net, summary))
}

/// One trained per-group subnet.
#[derive(Debug, Clone)]
pub struct SubnetModel {
    pub group: String,
    pub network: Network,
    pub fit: FitSummary,
}

/// Trains one subnet per feature group; each sees only its own columns.
pub fn train_subnets(
    set: &TrainSet,
    assignment: &SubnetAssignment,
    cfg: &TrainConfig,
) -> Result<Vec<SubnetModel>> {
    let dim = set.feature_dim()?;
    if dim != assignment.feature_dim() {
        return Err(Error::config(format!(
            "assignment covers {} features but frames have {dim}",
            assignment.feature_dim()
        )));
    }
    let mut models = Vec::with_capacity(assignment.groups().len());
    for (j, group) in assignment.groups().iter().enumerate() {
        // Zero-variance columns train fine but deserve a note.
        for &col in &group.feature_indices {
            let first = set.rows[0].features[col];
            if set.rows.iter().all(|r| r.features[col] == first) {
                log::warn!(
                    "group '{}': feature column {col} has zero variance in the training set",
                    group.name
                );
                break;
            }
        }
        let mut net = build_subnet(
            group,
            dim,
            cfg.subnet_hidden,
            derive_seed(cfg.seed, &[20, j as u64]),
        )?;
        let summary = fit(&mut net, set, cfg, None, derive_seed(cfg.seed, &[21, j as u64]))?;
        models.push(SubnetModel {
            group: group.name.clone(),
            network: net,
            fit: summary,
        });
    }
    Ok(models)
}

/// Composes trained subnets and trains the fusion stack with the bases frozen.
pub fn train_sd(
    subnets: &[Network],
    set: &TrainSet,
    cfg: &TrainConfig,
) -> Result<(Network, FitSummary)> {
    let mut net = compose_sd(subnets, &cfg.fusion_hidden, derive_seed(cfg.seed, &[30]))?;
    let summary = fit(&mut net, set, cfg, None, derive_seed(cfg.seed, &[31]))?;
    Ok((net, summary))
}

/// Unfreezes a trained composite and continues training every layer.
pub fn train_sj(
    sd_model: &Network,
    set: &TrainSet,
    cfg: &TrainConfig,
) -> Result<(Network, FitSummary)> {
    if !sd_model.trained {
        return Err(Error::config("joint fine-tuning needs a trained composite"));
    }
    let mut net = unfreeze(sd_model);
    let summary = fit(&mut net, set, cfg, None, derive_seed(cfg.seed, &[40]))?;
    Ok((net, summary))
}

/// Densifies a trained composite and trains the fully connected result.
///
/// This is the fully connected regime under a different initialization, so it
/// keeps the dense regime's input dropout.
pub fn train_dense_sdinit(
    sd_model: &Network,
    set: &TrainSet,
    cfg: &TrainConfig,
) -> Result<(Network, FitSummary)> {
    if !sd_model.trained {
        return Err(Error::config("dense expansion needs a trained composite"));
    }
    let mut net = densify(sd_model)?;
    let dropout = if cfg.dropout_rate > 0.0 {
        Some(DropoutSpec::new(cfg.dropout_rate)?)
    } else {
        None
    };
    let summary = fit(&mut net, set, cfg, dropout, derive_seed(cfg.seed, &[50]))?;
    Ok((net, summary))
}
