//! Session manifests and run manifests.
//!
//! The session manifest CSV has four fixed columns followed by one
//! `code=rating` cell per rated behavior code:
//! `session_id,couple_id,speaker_id,gender,<code>=<rating>,...`
//! A JSON manifest (array of session records) is accepted interchangeably.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::SessionRecord;
use crate::error::{Error, Result};

pub fn save_manifest_csv<W: Write>(sessions: &[SessionRecord], writer: W) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    csv.write_record(["session_id", "couple_id", "speaker_id", "gender", "ratings"])?;
    for session in sessions {
        let mut record = vec![
            session.session_id.clone(),
            session.couple_id.clone(),
            session.speaker_id.clone(),
            session.gender.to_string(),
        ];
        for (code, rating) in &session.ratings {
            record.push(format!("{code}={rating}"));
        }
        csv.write_record(&record)?;
    }
    csv.into_inner()
        .map_err(|e| Error::internal(e.to_string()))?
        .flush()?;
    Ok(())
}

pub fn read_manifest_csv<R: Read>(reader: R) -> Result<Vec<SessionRecord>> {
    let mut csv = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let expected = ["session_id", "couple_id", "speaker_id", "gender"];
    for (i, name) in expected.iter().enumerate() {
        if headers.get(i) != Some(name) {
            return Err(Error::Parse {
                line: 1,
                message: format!("manifest column {i} must be '{name}'"),
            });
        }
    }

    let mut sessions = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() < 4 {
            return Err(Error::Parse {
                line,
                message: "manifest row is missing fixed columns".into(),
            });
        }
        let gender = record
            .get(3)
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        let mut ratings = BTreeMap::new();
        for cell in record.iter().skip(4) {
            if cell.is_empty() {
                continue;
            }
            let (code, value) = cell.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("rating cell '{cell}' is not code=rating"),
            })?;
            let rating: f64 = value.parse().map_err(|_| Error::Parse {
                line,
                message: format!("unparseable rating in '{cell}'"),
            })?;
            ratings.insert(code.to_string(), rating);
        }
        let session = SessionRecord {
            session_id: record.get(0).unwrap_or("").to_string(),
            couple_id: record.get(1).unwrap_or("").to_string(),
            speaker_id: record.get(2).unwrap_or("").to_string(),
            gender,
            ratings,
            binary_label: None,
        };
        session.validate()?;
        sessions.push(session);
    }
    Ok(sessions)
}

/// Loads a session manifest, dispatching on the file extension
/// (`.json` for a record array, anything else as CSV).
pub fn load_sessions(path: &Path) -> Result<Vec<SessionRecord>> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let sessions: Vec<SessionRecord> = serde_json::from_reader(BufReader::new(file))?;
        for s in &sessions {
            s.validate()?;
        }
        Ok(sessions)
    } else {
        read_manifest_csv(BufReader::new(file))
    }
}

/// Reproducibility record written next to every trained artifact: the full
/// configuration, the seed, and content hashes of the input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    /// Input path (as given) to SHA-256 of its bytes.
    pub data_hashes: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, seed: u64, config: serde_json::Value) -> RunManifest {
        RunManifest {
            version: 1,
            command: command.into(),
            seed,
            config,
            data_hashes: BTreeMap::new(),
        }
    }

    /// Hashes a file's bytes into the manifest.
    pub fn hash_input(&mut self, label: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        self.data_hashes
            .insert(label.to_string(), format!("{:x}", hasher.finalize()));
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        let mut writer = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut writer, self)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Gender;

    fn session(id: &str) -> SessionRecord {
        SessionRecord {
            session_id: id.to_string(),
            couple_id: "c1".to_string(),
            speaker_id: "c1_a".to_string(),
            gender: Gender::F,
            ratings: BTreeMap::from([
                ("acceptance".to_string(), 7.25),
                ("blame".to_string(), 2.0),
            ]),
            binary_label: None,
        }
    }

    #[test]
    fn csv_round_trip() {
        let sessions = vec![session("s1"), session("s2")];
        let mut buf = Vec::new();
        save_manifest_csv(&sessions, &mut buf).unwrap();
        let loaded = read_manifest_csv(buf.as_slice()).unwrap();
        assert_eq!(sessions, loaded);
    }

    #[test]
    fn json_manifest_loads() {
        let sessions = vec![session("s1")];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        std::fs::write(&path, serde_json::to_string(&sessions).unwrap()).unwrap();
        assert_eq!(load_sessions(&path).unwrap(), sessions);
    }

    #[test]
    fn out_of_range_rating_is_rejected() {
        let text = "session_id,couple_id,speaker_id,gender,ratings\ns1,c1,c1_a,f,blame=12\n";
        assert!(read_manifest_csv(text.as_bytes()).is_err());
    }
}
