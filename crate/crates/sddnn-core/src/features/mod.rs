//! LLD streams and their conversion into normalized sliding-window
//! functional frames.

pub mod functionals;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use functionals::{extract_functionals, functionals_of_series, FUNCTIONAL_NAMES, NUM_FUNCTIONALS};

/// Acoustic family of one LLD column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LldFamily {
    Pitch,
    Intensity,
    Jitter,
    Shimmer,
    Mfcc,
    Mfb,
}

/// One LLD column: its CSV name and, when known, its acoustic family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LldColumn {
    pub name: String,
    pub family: Option<LldFamily>,
}

/// Ordered family labels for the LLD columns of a stream.
///
/// Frame vectors hold [`NUM_FUNCTIONALS`] entries per LLD column, so frame
/// column `k` inherits the family of LLD column `k / NUM_FUNCTIONALS`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    columns: Vec<LldColumn>,
}

impl FeatureLayout {
    pub fn new(columns: Vec<LldColumn>) -> Result<FeatureLayout> {
        if columns.is_empty() {
            return Err(Error::config("feature layout needs at least one column"));
        }
        let mut names: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("feature layout has duplicate column names"));
        }
        Ok(FeatureLayout { columns })
    }

    /// The default 28-LLD acoustic layout: pitch, intensity, jitter, shimmer,
    /// 12 MFCCs, and 12 MFBs, for a 168-dimensional frame vector.
    pub fn default_acoustic() -> FeatureLayout {
        let mut columns = vec![
            LldColumn {
                name: "pitch".into(),
                family: Some(LldFamily::Pitch),
            },
            LldColumn {
                name: "intensity".into(),
                family: Some(LldFamily::Intensity),
            },
            LldColumn {
                name: "jitter".into(),
                family: Some(LldFamily::Jitter),
            },
            LldColumn {
                name: "shimmer".into(),
                family: Some(LldFamily::Shimmer),
            },
        ];
        for i in 1..=12 {
            columns.push(LldColumn {
                name: format!("mfcc_{i}"),
                family: Some(LldFamily::Mfcc),
            });
        }
        for i in 1..=12 {
            columns.push(LldColumn {
                name: format!("mfb_{i}"),
                family: Some(LldFamily::Mfb),
            });
        }
        FeatureLayout::new(columns).expect("default layout is valid")
    }

    pub fn columns(&self) -> &[LldColumn] {
        &self.columns
    }

    pub fn num_llds(&self) -> usize {
        self.columns.len()
    }

    /// Dimension of a frame vector built over this layout.
    pub fn frame_dim(&self) -> usize {
        self.columns.len() * NUM_FUNCTIONALS
    }

    /// Family of a frame-vector column.
    pub fn frame_family(&self, frame_col: usize) -> Option<LldFamily> {
        self.columns.get(frame_col / NUM_FUNCTIONALS)?.family
    }

    /// Human-readable name of a frame-vector column, e.g. `pitch.p99`.
    pub fn frame_column_name(&self, frame_col: usize) -> String {
        let lld = &self.columns[frame_col / NUM_FUNCTIONALS];
        format!("{}.{}", lld.name, FUNCTIONAL_NAMES[frame_col % NUM_FUNCTIONALS])
    }
}

/// One contiguous speech segment of a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Wall-clock start time in seconds.
    pub start: f64,
    /// One LLD vector per hop.
    pub vectors: Vec<Vec<f64>>,
}

impl Segment {
    pub fn duration(&self, hop: f64) -> f64 {
        self.vectors.len() as f64 * hop
    }
}

/// Per-(session, speaker) time series of LLD vectors with speech-segment
/// boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct LldStream {
    pub session_id: String,
    pub couple_id: String,
    pub speaker_id: String,
    /// Seconds between consecutive LLD vectors.
    pub hop: f64,
    pub segments: Vec<Segment>,
    pub layout: FeatureLayout,
}

impl LldStream {
    /// Checks vector dimensions, hop positivity, and segment ordering.
    pub fn validate(&self) -> Result<()> {
        if self.hop <= 0.0 {
            return Err(Error::config("stream hop must be positive"));
        }
        let dim = self.layout.num_llds();
        for segment in &self.segments {
            if let Some(bad) = segment.vectors.iter().find(|v| v.len() != dim) {
                return Err(Error::input(format!(
                    "session {}: LLD vector has {} components, layout has {}",
                    self.session_id,
                    bad.len(),
                    dim
                )));
            }
        }
        let mut prev_end = f64::NEG_INFINITY;
        for segment in &self.segments {
            if segment.start < prev_end - 1e-9 {
                return Err(Error::input(format!(
                    "session {}: segments overlap or are out of order",
                    self.session_id
                )));
            }
            prev_end = segment.start + segment.duration(self.hop);
        }
        Ok(())
    }

    /// Total number of LLD vectors across segments.
    pub fn num_vectors(&self) -> usize {
        self.segments.iter().map(|s| s.vectors.len()).sum()
    }

    /// Total speech time in seconds.
    pub fn speech_duration(&self) -> f64 {
        self.num_vectors() as f64 * self.hop
    }
}

/// One sliding-window functional vector with its session linkage.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeature {
    pub session_id: String,
    pub speaker_id: String,
    /// Offset of the window's first sample on the configured time axis.
    pub window_start: f64,
    pub values: Vec<f64>,
}

/// Z-scores every LLD column over the whole stream (all segments pooled).
///
/// Uses the population (divide-by-n) standard deviation; columns with
/// `std < 1e-12` become all-zero.
pub fn normalize_session(stream: &LldStream) -> Result<LldStream> {
    let n = stream.num_vectors();
    if n < 2 {
        return Err(Error::input(format!(
            "session {}: normalization needs at least 2 LLD vectors, found {n}",
            stream.session_id
        )));
    }
    let dim = stream.layout.num_llds();
    let mut mean = vec![0.0; dim];
    for segment in &stream.segments {
        for v in &segment.vectors {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; dim];
    for segment in &stream.segments {
        for v in &segment.vectors {
            for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
    }
    let std: Vec<f64> = var.iter().map(|s| (s / n as f64).sqrt()).collect();

    let mut out = stream.clone();
    for segment in &mut out.segments {
        for v in &mut segment.vectors {
            for ((x, m), sd) in v.iter_mut().zip(&mean).zip(&std) {
                *x = if *sd < 1e-12 { 0.0 } else { (*x - m) / sd };
            }
        }
    }
    Ok(out)
}

/// Removes segments shorter than `min_duration` seconds. May leave the stream
/// empty; callers flag that in their ingestion report.
pub fn drop_short_segments(stream: &LldStream, min_duration: f64) -> LldStream {
    let mut out = stream.clone();
    out.segments
        .retain(|s| s.duration(stream.hop) >= min_duration);
    out
}

/// Which axis sliding windows advance along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeAxis {
    /// Segments abutted end to end; windows never straddle silence.
    Speech,
    /// Wall-clock time; windows may span gaps between segments.
    Wall,
}

/// Sliding-window extraction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Window length in seconds.
    pub window_len: f64,
    /// Window shift in seconds.
    pub shift: f64,
    pub time_axis: TimeAxis,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_len: 20.0,
            shift: 1.0,
            time_axis: TimeAxis::Speech,
        }
    }
}

/// Result of windowing one stream.
#[derive(Debug, Clone, Default)]
pub struct WindowOutcome {
    pub frames: Vec<FrameFeature>,
    /// Frames discarded because a window contained a non-finite LLD value.
    pub nan_frames_dropped: usize,
}

/// Slides fixed-length windows over a stream and extracts functional frames.
///
/// Windows that would need data past the end are not emitted; a stream with
/// less total speech than one window yields an empty outcome.
pub fn window_session(stream: &LldStream, cfg: &WindowConfig) -> Result<WindowOutcome> {
    if cfg.shift <= 0.0 {
        return Err(Error::config("window shift must be positive"));
    }
    if cfg.window_len <= 0.0 {
        return Err(Error::config("window length must be positive"));
    }
    stream.validate()?;

    match cfg.time_axis {
        TimeAxis::Speech => window_speech_axis(stream, cfg),
        TimeAxis::Wall => window_wall_axis(stream, cfg),
    }
}

fn emit_frame(
    stream: &LldStream,
    window: &[Vec<f64>],
    window_start: f64,
    outcome: &mut WindowOutcome,
) -> Result<()> {
    if window
        .iter()
        .any(|row| row.iter().any(|x| !x.is_finite()))
    {
        outcome.nan_frames_dropped += 1;
        return Ok(());
    }
    outcome.frames.push(FrameFeature {
        session_id: stream.session_id.clone(),
        speaker_id: stream.speaker_id.clone(),
        window_start,
        values: extract_functionals(window)?,
    });
    Ok(())
}

fn window_speech_axis(stream: &LldStream, cfg: &WindowConfig) -> Result<WindowOutcome> {
    let rows: Vec<&Vec<f64>> = stream
        .segments
        .iter()
        .flat_map(|s| s.vectors.iter())
        .collect();
    let window = (cfg.window_len / stream.hop).round() as usize;
    let shift = (cfg.shift / stream.hop).round() as usize;
    if window == 0 || shift == 0 {
        return Err(Error::config(
            "window and shift must be at least one hop long",
        ));
    }

    let mut outcome = WindowOutcome::default();
    if rows.len() < window {
        return Ok(outcome);
    }
    let mut buffer: Vec<Vec<f64>> = Vec::with_capacity(window);
    let mut start = 0;
    while start + window <= rows.len() {
        buffer.clear();
        buffer.extend(rows[start..start + window].iter().map(|v| (*v).clone()));
        emit_frame(stream, &buffer, start as f64 * stream.hop, &mut outcome)?;
        start += shift;
    }
    Ok(outcome)
}

fn window_wall_axis(stream: &LldStream, cfg: &WindowConfig) -> Result<WindowOutcome> {
    let mut outcome = WindowOutcome::default();
    let Some(first) = stream.segments.first() else {
        return Ok(outcome);
    };
    let last = stream.segments.last().expect("non-empty");
    let end = last.start + last.duration(stream.hop);

    let mut k = 0usize;
    loop {
        let t0 = first.start + k as f64 * cfg.shift;
        if t0 + cfg.window_len > end + 1e-9 {
            break;
        }
        let t1 = t0 + cfg.window_len;
        let mut window: Vec<Vec<f64>> = Vec::new();
        for segment in &stream.segments {
            let seg_end = segment.start + segment.duration(stream.hop);
            if seg_end <= t0 || segment.start >= t1 {
                continue;
            }
            for (i, v) in segment.vectors.iter().enumerate() {
                let t = segment.start + i as f64 * stream.hop;
                if t >= t0 - 1e-9 && t < t1 - 1e-9 {
                    window.push(v.clone());
                }
            }
        }
        if !window.is_empty() {
            emit_frame(stream, &window, t0, &mut outcome)?;
        }
        k += 1;
    }
    Ok(outcome)
}

/// Ingestion counters for one extraction run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractReport {
    pub sessions_processed: usize,
    /// Streams left too short for normalization after the segment filter.
    pub sessions_skipped: usize,
    pub segments_dropped: usize,
    pub nan_frames_dropped: usize,
    pub frames_emitted: usize,
}

/// The full per-stream pipeline: drop short segments, z-normalize per session,
/// slide windows, extract functionals.
pub fn extract_frames(
    streams: &[LldStream],
    min_segment: f64,
    cfg: &WindowConfig,
) -> Result<(Vec<FrameFeature>, ExtractReport)> {
    let mut frames = Vec::new();
    let mut report = ExtractReport::default();
    for stream in streams {
        stream.validate()?;
        let filtered = drop_short_segments(stream, min_segment);
        report.segments_dropped += stream.segments.len() - filtered.segments.len();
        if filtered.num_vectors() < 2 {
            log::warn!(
                "session {}: too little speech after the segment filter; skipped",
                stream.session_id
            );
            report.sessions_skipped += 1;
            continue;
        }
        let normalized = normalize_session(&filtered)?;
        let outcome = window_session(&normalized, cfg)?;
        if outcome.frames.is_empty() {
            log::warn!(
                "session {}: total speech shorter than one window; no frames emitted",
                stream.session_id
            );
        }
        report.sessions_processed += 1;
        report.nan_frames_dropped += outcome.nan_frames_dropped;
        report.frames_emitted += outcome.frames.len();
        frames.extend(outcome.frames);
    }
    Ok((frames, report))
}
