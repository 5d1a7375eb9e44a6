//! LLD CSV: `session_id,couple_id,speaker_id,segment_id,t,<lld columns...>`,
//! rows time-ordered within a segment.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::features::{FeatureLayout, LldStream, Segment};
use crate::io::layout::LayoutFile;

const FIXED_COLUMNS: usize = 5;

/// Writes streams in order, one row per LLD vector.
pub fn write_lld_csv<W: Write>(streams: &[LldStream], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    if let Some(first) = streams.first() {
        let mut header = vec![
            "session_id".to_string(),
            "couple_id".to_string(),
            "speaker_id".to_string(),
            "segment_id".to_string(),
            "t".to_string(),
        ];
        header.extend(first.layout.columns().iter().map(|c| c.name.clone()));
        csv.write_record(&header)?;
    }
    for stream in streams {
        for (seg_idx, segment) in stream.segments.iter().enumerate() {
            for (i, vector) in segment.vectors.iter().enumerate() {
                let t = segment.start + i as f64 * stream.hop;
                let mut record = vec![
                    stream.session_id.clone(),
                    stream.couple_id.clone(),
                    stream.speaker_id.clone(),
                    seg_idx.to_string(),
                    t.to_string(),
                ];
                record.extend(vector.iter().map(|x| x.to_string()));
                csv.write_record(&record)?;
            }
        }
    }
    csv.into_inner()
        .map_err(|e| Error::internal(e.to_string()))?
        .flush()?;
    Ok(())
}

struct StreamBuilder {
    stream: LldStream,
    current_segment: Option<String>,
    closed_segments: Vec<String>,
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads streams grouped by session id (order of first appearance), splitting
/// segments on `segment_id` changes and validating hop spacing.
pub fn read_lld_csv<R: Read>(reader: R, layout_file: &LayoutFile) -> Result<Vec<LldStream>> {
    let mut csv = csv::ReaderBuilder::new().from_reader(reader);
    let headers = csv.headers()?.clone();
    if headers.len() < FIXED_COLUMNS + 1 {
        return Err(parse_error(1, "LLD CSV header is missing feature columns"));
    }
    let expected = ["session_id", "couple_id", "speaker_id", "segment_id", "t"];
    for (i, name) in expected.iter().enumerate() {
        if headers.get(i) != Some(name) {
            return Err(parse_error(
                1,
                format!("LLD CSV column {i} must be '{name}', found '{}'", headers.get(i).unwrap_or("")),
            ));
        }
    }
    let feature_names: Vec<String> = headers
        .iter()
        .skip(FIXED_COLUMNS)
        .map(str::to_string)
        .collect();
    let layout: FeatureLayout = layout_file.to_layout(&feature_names)?;
    let hop = layout_file.hop;

    let mut order: Vec<String> = Vec::new();
    let mut builders: std::collections::HashMap<String, StreamBuilder> =
        std::collections::HashMap::new();

    for record in csv.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(parse_error(
                line,
                format!(
                    "row has {} fields, header has {}",
                    record.len(),
                    headers.len()
                ),
            ));
        }
        let session_id = record.get(0).unwrap_or("");
        let couple_id = record.get(1).unwrap_or("");
        let speaker_id = record.get(2).unwrap_or("");
        let segment_id = record.get(3).unwrap_or("");
        let t: f64 = record
            .get(4)
            .unwrap_or("")
            .parse()
            .map_err(|_| parse_error(line, "unparseable time value"))?;
        let mut values = Vec::with_capacity(feature_names.len());
        for field in record.iter().skip(FIXED_COLUMNS) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(line, format!("unparseable LLD value '{field}'")))?;
            values.push(v);
        }

        if !builders.contains_key(session_id) {
            order.push(session_id.to_string());
            builders.insert(
                session_id.to_string(),
                StreamBuilder {
                    stream: LldStream {
                        session_id: session_id.to_string(),
                        couple_id: couple_id.to_string(),
                        speaker_id: speaker_id.to_string(),
                        hop,
                        segments: Vec::new(),
                        layout: layout.clone(),
                    },
                    current_segment: None,
                    closed_segments: Vec::new(),
                },
            );
        }
        let builder = builders.get_mut(session_id).unwrap();
        if builder.stream.couple_id != couple_id || builder.stream.speaker_id != speaker_id {
            return Err(parse_error(
                line,
                format!("session {session_id} changes couple or speaker mid-file"),
            ));
        }

        let new_segment = builder.current_segment.as_deref() != Some(segment_id);
        if new_segment {
            if builder.closed_segments.iter().any(|s| s == segment_id) {
                return Err(parse_error(
                    line,
                    format!("segment {segment_id} of session {session_id} is not contiguous"),
                ));
            }
            if let Some(prev) = builder.current_segment.take() {
                builder.closed_segments.push(prev);
            }
            builder.current_segment = Some(segment_id.to_string());
            builder.stream.segments.push(Segment {
                start: t,
                vectors: Vec::new(),
            });
        }
        let segment = builder.stream.segments.last_mut().unwrap();
        let expected_t = segment.start + segment.vectors.len() as f64 * hop;
        if (t - expected_t).abs() > hop * 1e-3 {
            return Err(parse_error(
                line,
                format!(
                    "row time {t} does not match the expected hop grid ({expected_t})"
                ),
            ));
        }
        segment.vectors.push(values);
    }

    let mut streams = Vec::with_capacity(order.len());
    for id in order {
        let builder = builders.remove(&id).unwrap();
        builder.stream.validate()?;
        streams.push(builder.stream);
    }
    Ok(streams)
}
