//! Frame CSV: `session_id,speaker_id,window_start,f0,...,f{D-1}`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::features::FrameFeature;

pub fn write_frames_csv<W: Write>(frames: &[FrameFeature], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    if let Some(first) = frames.first() {
        let mut header = vec![
            "session_id".to_string(),
            "speaker_id".to_string(),
            "window_start".to_string(),
        ];
        header.extend((0..first.values.len()).map(|i| format!("f{i}")));
        csv.write_record(&header)?;
    }
    for frame in frames {
        let mut record = vec![
            frame.session_id.clone(),
            frame.speaker_id.clone(),
            frame.window_start.to_string(),
        ];
        record.extend(frame.values.iter().map(|x| x.to_string()));
        csv.write_record(&record)?;
    }
    csv.into_inner()
        .map_err(|e| Error::internal(e.to_string()))?
        .flush()?;
    Ok(())
}

pub fn read_frames_csv<R: Read>(reader: R) -> Result<Vec<FrameFeature>> {
    let mut csv = csv::ReaderBuilder::new().from_reader(reader);
    let headers = csv.headers()?.clone();
    if headers.len() < 4
        || headers.get(0) != Some("session_id")
        || headers.get(1) != Some("speaker_id")
        || headers.get(2) != Some("window_start")
    {
        return Err(Error::Parse {
            line: 1,
            message: "frame CSV header must start with session_id,speaker_id,window_start".into(),
        });
    }
    let dim = headers.len() - 3;

    let mut frames = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!(
                    "row has {} fields, header has {}",
                    record.len(),
                    headers.len()
                ),
            });
        }
        let window_start: f64 = record.get(2).unwrap_or("").parse().map_err(|_| Error::Parse {
            line,
            message: "unparseable window_start".into(),
        })?;
        let mut values = Vec::with_capacity(dim);
        for field in record.iter().skip(3) {
            values.push(field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("unparseable frame value '{field}'"),
            })?);
        }
        frames.push(FrameFeature {
            session_id: record.get(0).unwrap_or("").to_string(),
            speaker_id: record.get(1).unwrap_or("").to_string(),
            window_start,
            values,
        });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_frames() {
        let frames: Vec<FrameFeature> = (0..3)
            .map(|i| FrameFeature {
                session_id: format!("s{i}"),
                speaker_id: "sp".into(),
                window_start: i as f64 * 1.5,
                values: vec![0.1 * i as f64, -2.0 / 3.0, 1e-12],
            })
            .collect();
        let mut buf = Vec::new();
        write_frames_csv(&frames, &mut buf).unwrap();
        let loaded = read_frames_csv(buf.as_slice()).unwrap();
        assert_eq!(frames, loaded);
    }

    #[test]
    fn bad_header_is_rejected() {
        let text = "a,b,c,f0\nx,y,0.0,1.0\n";
        assert!(read_frames_csv(text.as_bytes()).is_err());
    }
}
