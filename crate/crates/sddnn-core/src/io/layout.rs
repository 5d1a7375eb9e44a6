//! Sidecar layout files: LLD hop plus a column-name-to-family map.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureLayout, LldColumn, LldFamily};

/// The on-disk layout format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    /// Seconds between consecutive LLD vectors.
    pub hop: f64,
    /// Column order as it appears in the LLD CSV.
    pub columns: Vec<String>,
    /// Column name to acoustic family; columns absent here are unlabeled.
    pub families: BTreeMap<String, LldFamily>,
}

impl LayoutFile {
    pub fn from_layout(layout: &FeatureLayout, hop: f64) -> LayoutFile {
        let mut families = BTreeMap::new();
        let mut columns = Vec::with_capacity(layout.num_llds());
        for col in layout.columns() {
            columns.push(col.name.clone());
            if let Some(family) = col.family {
                families.insert(col.name.clone(), family);
            }
        }
        LayoutFile {
            hop,
            columns,
            families,
        }
    }

    /// Builds the in-memory layout, ordered by the given CSV column names.
    /// `csv_columns` must match the layout's column set.
    pub fn to_layout(&self, csv_columns: &[String]) -> Result<FeatureLayout> {
        if csv_columns.len() != self.columns.len() {
            return Err(Error::config(format!(
                "LLD CSV has {} feature columns but the layout lists {}",
                csv_columns.len(),
                self.columns.len()
            )));
        }
        for name in csv_columns {
            if !self.columns.contains(name) {
                return Err(Error::config(format!(
                    "LLD CSV column '{name}' is missing from the layout file"
                )));
            }
        }
        FeatureLayout::new(
            csv_columns
                .iter()
                .map(|name| LldColumn {
                    name: name.clone(),
                    family: self.families.get(name).copied(),
                })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.hop <= 0.0 {
            return Err(Error::config("layout hop must be positive"));
        }
        if self.columns.is_empty() {
            return Err(Error::config("layout lists no columns"));
        }
        for name in self.families.keys() {
            if !self.columns.contains(name) {
                return Err(Error::config(format!(
                    "layout family entry '{name}' names an unknown column"
                )));
            }
        }
        Ok(())
    }
}

pub fn save_layout(layout: &LayoutFile, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, layout)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

pub fn load_layout(path: &Path) -> Result<LayoutFile> {
    let file = File::open(path)?;
    let layout: LayoutFile = serde_json::from_reader(BufReader::new(file))?;
    layout.validate()?;
    Ok(layout)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_default_layout() {
        let layout = FeatureLayout::default_acoustic();
        let file = LayoutFile::from_layout(&layout, 0.01);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("layout.json");
        save_layout(&file, &path).unwrap();
        let loaded = load_layout(&path).unwrap();
        assert_eq!(file, loaded);

        let names: Vec<String> = layout.columns().iter().map(|c| c.name.clone()).collect();
        let rebuilt = loaded.to_layout(&names).unwrap();
        assert_eq!(rebuilt, layout);
    }

    #[test]
    fn unknown_csv_column_is_rejected() {
        let layout = FeatureLayout::default_acoustic();
        let file = LayoutFile::from_layout(&layout, 0.01);
        let mut names: Vec<String> = layout.columns().iter().map(|c| c.name.clone()).collect();
        names[0] = "mystery".to_string();
        assert!(file.to_layout(&names).is_err());
    }
}
