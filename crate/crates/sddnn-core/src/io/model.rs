//! Model serialization: one JSON document per trained model (or subnet bundle).
//!
//! Weights serialize as row-major arrays through serde_json's shortest
//! round-trip float encoding, so load/save is value-exact for 64-bit floats.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Network;
use crate::trainer::Regime;

pub const MODEL_VERSION: u32 = 1;

/// One network with a role name ("model" for single-network files, the group
/// name for subnet bundles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedNetwork {
    pub name: String,
    pub network: Network,
}

/// A serialized model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub regime: Regime,
    /// The behavior code the model scores.
    pub code: String,
    pub networks: Vec<NamedNetwork>,
}

impl ModelFile {
    pub fn single(regime: Regime, code: impl Into<String>, network: Network) -> ModelFile {
        ModelFile {
            version: MODEL_VERSION,
            regime,
            code: code.into(),
            networks: vec![NamedNetwork {
                name: "model".to_string(),
                network,
            }],
        }
    }

    pub fn bundle(
        regime: Regime,
        code: impl Into<String>,
        networks: Vec<NamedNetwork>,
    ) -> ModelFile {
        ModelFile {
            version: MODEL_VERSION,
            regime,
            code: code.into(),
            networks,
        }
    }

    /// The single network of a one-network file.
    pub fn only_network(&self) -> Result<&Network> {
        match self.networks.as_slice() {
            [one] => Ok(&one.network),
            many => Err(Error::input(format!(
                "expected a single-network model file, found {} networks",
                many.len()
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::input(format!(
                "unsupported model version {}",
                self.version
            )));
        }
        if self.networks.is_empty() {
            return Err(Error::input("model file contains no networks"));
        }
        for named in &self.networks {
            named.network.validate()?;
        }
        Ok(())
    }
}

pub fn save_model(model: &ModelFile, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, model)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let file = File::open(path)?;
    let model: ModelFile = serde_json::from_reader(BufReader::new(file))?;
    model.validate()?;
    Ok(model)
}
