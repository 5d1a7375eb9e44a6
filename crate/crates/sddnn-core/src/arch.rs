//! Model regimes built from per-feature-group subnets.
//!
//! The feature space is partitioned into disjoint groups, one small subnet is
//! trained per group, and the trained subnets are composed into a sparse
//! composite: output heads discarded, input-to-hidden layers frozen, and a
//! fresh fusion stack trained on the concatenated hidden activations. Two
//! transformations derive the remaining regimes: [`unfreeze`] makes every
//! composite layer trainable for joint fine-tuning, and [`densify`] expands the
//! composite into a fully connected network whose previously absent first-layer
//! connections start at exactly zero.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureLayout, LldFamily};
use crate::nn::{Activation, InputBlock, Layer, LayerShape, Network};

/// One named group of frame-vector column indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGroup {
    pub name: String,
    /// Ascending column indices into the frame vector.
    pub feature_indices: Vec<usize>,
}

/// A disjoint cover of the frame-vector columns by named groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubnetAssignment {
    feature_dim: usize,
    groups: Vec<FeatureGroup>,
}

impl SubnetAssignment {
    /// Validates that the groups are non-empty, sorted, pairwise disjoint, and
    /// together cover `0..feature_dim`.
    pub fn new(groups: Vec<FeatureGroup>, feature_dim: usize) -> Result<SubnetAssignment> {
        if groups.is_empty() {
            return Err(Error::config("assignment needs at least one group"));
        }
        let mut seen = vec![false; feature_dim];
        for group in &groups {
            if group.feature_indices.is_empty() {
                return Err(Error::config(format!("group '{}' is empty", group.name)));
            }
            if !group.feature_indices.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::config(format!(
                    "group '{}' indices are not strictly ascending",
                    group.name
                )));
            }
            for &idx in &group.feature_indices {
                if idx >= feature_dim {
                    return Err(Error::config(format!(
                        "group '{}' index {idx} exceeds feature dimension {feature_dim}",
                        group.name
                    )));
                }
                if seen[idx] {
                    return Err(Error::config(format!(
                        "feature index {idx} appears in more than one group"
                    )));
                }
                seen[idx] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|covered| !covered) {
            return Err(Error::config(format!(
                "feature index {missing} is not covered by any group"
            )));
        }
        Ok(SubnetAssignment {
            feature_dim,
            groups,
        })
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.groups
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }
}

/// How to partition the feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    /// Group frame columns by acoustic family (jitter and shimmer merged).
    Knowledge,
    /// Shuffle columns by seed and slice into near-equal groups.
    Random,
}

const KNOWLEDGE_GROUPS: [(&str, &[LldFamily]); 5] = [
    ("pitch", &[LldFamily::Pitch]),
    ("mfccs", &[LldFamily::Mfcc]),
    ("mfbs", &[LldFamily::Mfb]),
    ("intensity", &[LldFamily::Intensity]),
    ("jitter_shimmer", &[LldFamily::Jitter, LldFamily::Shimmer]),
];

/// Partitions the frame-vector columns into subnet groups.
///
/// Knowledge mode yields exactly the five acoustic groups (pitch, MFCCs, MFBs,
/// intensity, jitter & shimmer) and requires every column's family to be
/// labeled. Random mode shuffles columns by seed and slices them into
/// `num_groups` parts whose sizes differ by at most one.
pub fn partition_features(
    mode: PartitionMode,
    layout: &FeatureLayout,
    num_groups: usize,
    seed: u64,
) -> Result<SubnetAssignment> {
    let dim = layout.frame_dim();
    match mode {
        PartitionMode::Knowledge => {
            let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); KNOWLEDGE_GROUPS.len()];
            for col in 0..dim {
                let family = layout.frame_family(col).ok_or_else(|| {
                    Error::config(format!(
                        "knowledge split needs a family label for every column; '{}' has none",
                        layout.frame_column_name(col)
                    ))
                })?;
                let bucket = KNOWLEDGE_GROUPS
                    .iter()
                    .position(|(_, fams)| fams.contains(&family))
                    .expect("every family belongs to a knowledge group");
                buckets[bucket].push(col);
            }
            let groups = KNOWLEDGE_GROUPS
                .iter()
                .zip(buckets)
                .map(|((name, _), feature_indices)| FeatureGroup {
                    name: (*name).to_string(),
                    feature_indices,
                })
                .collect();
            SubnetAssignment::new(groups, dim)
        }
        PartitionMode::Random => {
            if num_groups == 0 || num_groups > dim {
                return Err(Error::config(format!(
                    "cannot split {dim} columns into {num_groups} non-empty groups"
                )));
            }
            let mut indices: Vec<usize> = (0..dim).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            use rand::seq::SliceRandom;
            indices.shuffle(&mut rng);

            let base = dim / num_groups;
            let extra = dim % num_groups;
            let mut groups = Vec::with_capacity(num_groups);
            let mut cursor = 0;
            for g in 0..num_groups {
                let size = base + usize::from(g < extra);
                let mut feature_indices = indices[cursor..cursor + size].to_vec();
                feature_indices.sort_unstable();
                groups.push(FeatureGroup {
                    name: format!("subset_{g}"),
                    feature_indices,
                });
                cursor += size;
            }
            SubnetAssignment::new(groups, dim)
        }
    }
}

/// Builds an untrained subnet for one feature group: the gathered group columns
/// feed one tanh hidden layer and a single sigmoid output head.
pub fn build_subnet(
    group: &FeatureGroup,
    input_dim: usize,
    hidden_width: usize,
    seed: u64,
) -> Result<Network> {
    if group.feature_indices.is_empty() {
        return Err(Error::config(format!("group '{}' is empty", group.name)));
    }
    if hidden_width == 0 {
        return Err(Error::config("subnet hidden width must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden = Layer::init(
        LayerShape::new(group.feature_indices.len(), hidden_width, Activation::Tanh),
        &mut rng,
    );
    let head = Layer::init(LayerShape::new(hidden_width, 1, Activation::Sigmoid), &mut rng);
    let net = Network {
        input_dim,
        blocks: vec![InputBlock {
            feature_indices: group.feature_indices.clone(),
            layer: hidden,
        }],
        layers: vec![head],
        trained: false,
    };
    net.validate()?;
    Ok(net)
}

/// Composes trained subnets into the sparse composite.
///
/// Each subnet's output head is discarded and its input-to-hidden block is
/// copied in frozen; a freshly initialized fusion stack (concatenated hidden
/// widths through `fusion_hidden` to one sigmoid unit, tanh in between) is the
/// only trainable part. With an empty `fusion_hidden` the concatenated hiddens
/// feed the new output unit directly.
pub fn compose_sd(subnets: &[Network], fusion_hidden: &[usize], seed: u64) -> Result<Network> {
    if subnets.is_empty() {
        return Err(Error::config("composition needs at least one subnet"));
    }
    let input_dim = subnets[0].input_dim;
    let mut blocks = Vec::with_capacity(subnets.len());
    let mut claimed = std::collections::HashSet::new();
    for (i, subnet) in subnets.iter().enumerate() {
        if !subnet.trained {
            return Err(Error::config(format!(
                "subnet {i} has not been trained; composition requires trained bases"
            )));
        }
        if subnet.blocks.len() != 1 {
            return Err(Error::config(format!(
                "subnet {i} must have exactly one input block, found {}",
                subnet.blocks.len()
            )));
        }
        if subnet.input_dim != input_dim {
            return Err(Error::config(format!(
                "subnet {i} expects input dimension {}, others expect {input_dim}",
                subnet.input_dim
            )));
        }
        let mut block = subnet.blocks[0].clone();
        for &idx in &block.feature_indices {
            if !claimed.insert(idx) {
                return Err(Error::config(format!(
                    "feature index {idx} is claimed by more than one subnet"
                )));
            }
        }
        block.layer.trainable = false;
        blocks.push(block);
    }

    let stage_width: usize = blocks.iter().map(|b| b.layer.shape.output_dim).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(fusion_hidden.len() + 1);
    let mut prev = stage_width;
    for &width in fusion_hidden {
        if width == 0 {
            return Err(Error::config("fusion widths must be at least 1"));
        }
        layers.push(Layer::init(
            LayerShape::new(prev, width, Activation::Tanh),
            &mut rng,
        ));
        prev = width;
    }
    layers.push(Layer::init(
        LayerShape::new(prev, 1, Activation::Sigmoid),
        &mut rng,
    ));

    let net = Network {
        input_dim,
        blocks,
        layers,
        trained: false,
    };
    net.validate()?;
    Ok(net)
}

/// Marks every layer of a composite trainable without touching any value.
pub fn unfreeze(composite: &Network) -> Network {
    let mut net = composite.clone();
    net.set_all_trainable();
    net
}

/// Expands a composite into a fully connected network of identical behavior.
///
/// The first dense layer copies each block's weights into its (hidden unit,
/// group column) positions and fills every cross-group connection with exactly
/// zero; fusion layers are copied verbatim. All layers come back trainable.
pub fn densify(composite: &Network) -> Result<Network> {
    if composite.blocks.is_empty() {
        return Err(Error::config("densify expects a grouped composite"));
    }
    let activation = composite.blocks[0].layer.shape.activation;
    if composite
        .blocks
        .iter()
        .any(|b| b.layer.shape.activation != activation)
    {
        return Err(Error::config(
            "densify expects all blocks to share one activation",
        ));
    }

    let input_dim = composite.input_dim;
    let stage_width = composite.stage_width();
    let mut weights = vec![0.0; stage_width * input_dim];
    let mut biases = vec![0.0; stage_width];
    let mut row_offset = 0;
    for block in &composite.blocks {
        let n_in = block.layer.shape.input_dim;
        for h in 0..block.layer.shape.output_dim {
            let row = row_offset + h;
            biases[row] = block.layer.biases[h];
            for (i, &col) in block.feature_indices.iter().enumerate() {
                weights[row * input_dim + col] = block.layer.weights[h * n_in + i];
            }
        }
        row_offset += block.layer.shape.output_dim;
    }

    let mut layers = Vec::with_capacity(composite.layers.len() + 1);
    layers.push(Layer {
        shape: LayerShape::new(input_dim, stage_width, activation),
        weights,
        biases,
        trainable: true,
    });
    for layer in &composite.layers {
        let mut copy = layer.clone();
        copy.trainable = true;
        layers.push(copy);
    }

    let net = Network {
        input_dim,
        blocks: Vec::new(),
        layers,
        trained: false,
    };
    net.validate()?;
    Ok(net)
}
