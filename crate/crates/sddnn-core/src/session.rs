//! Session-level evaluation: frame-score aggregation, decision thresholds,
//! accuracy, and behavior-trajectory export.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default clamp applied to frame scores before the logarithm.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-6;

/// Per-frame scores of one session plus their aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionScore {
    pub session_id: String,
    /// Frame scores in (0,1), in frame order.
    pub frame_scores: Vec<f64>,
    /// Frame timestamps in seconds, strictly increasing.
    pub frame_times: Vec<f64>,
    /// Number of frames.
    pub length: usize,
    /// Geometric-mean aggregate of the clamped frame scores.
    pub aggregate: f64,
}

impl SessionScore {
    pub fn new(
        session_id: impl Into<String>,
        frame_scores: Vec<f64>,
        frame_times: Vec<f64>,
        clamp_eps: f64,
    ) -> Result<SessionScore> {
        if frame_scores.len() != frame_times.len() {
            return Err(Error::input(format!(
                "{} scores but {} frame times",
                frame_scores.len(),
                frame_times.len()
            )));
        }
        if !frame_times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::input("frame times must be strictly increasing"));
        }
        let aggregate = aggregate_session(&frame_scores, clamp_eps)?;
        Ok(SessionScore {
            session_id: session_id.into(),
            length: frame_scores.len(),
            frame_scores,
            frame_times,
            aggregate,
        })
    }
}

/// Aggregates frame scores into a session confidence: the geometric mean
/// `exp(mean(log q))` of the scores clamped into `[eps, 1-eps]`.
pub fn aggregate_session(frame_scores: &[f64], clamp_eps: f64) -> Result<f64> {
    if frame_scores.is_empty() {
        return Err(Error::input("cannot aggregate an empty score list"));
    }
    if !(0.0..0.5).contains(&clamp_eps) {
        return Err(Error::config(format!(
            "clamp epsilon must lie in [0, 0.5), got {clamp_eps}"
        )));
    }
    let log_mean = frame_scores
        .iter()
        .map(|q| q.clamp(clamp_eps, 1.0 - clamp_eps).ln())
        .sum::<f64>()
        / frame_scores.len() as f64;
    Ok(log_mean.exp())
}

/// A fitted decision threshold and its training error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    /// Predict 1 iff the session aggregate exceeds this value.
    pub threshold: f64,
    /// Misclassification rate achieved on the training pairs.
    pub training_error: f64,
}

/// Fits the decision threshold minimizing training misclassification.
///
/// Candidates are the midpoints between consecutive distinct sorted aggregates
/// plus one sentinel below the minimum and one above the maximum; ties are
/// broken toward the smallest candidate.
pub fn fit_threshold(training: &[(f64, u8)]) -> Result<ThresholdModel> {
    if training.is_empty() {
        return Err(Error::config("cannot fit a threshold on no sessions"));
    }
    let has = |label: u8| training.iter().any(|&(_, l)| l == label);
    if !has(0) || !has(1) {
        return Err(Error::config(
            "threshold fitting needs both classes in the training set",
        ));
    }
    if let Some(&(q, _)) = training.iter().find(|(q, _)| !(0.0..=1.0).contains(q)) {
        return Err(Error::input(format!(
            "session aggregate {q} lies outside [0, 1]"
        )));
    }

    let mut values: Vec<f64> = training.iter().map(|&(q, _)| q).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();

    let mut candidates = Vec::with_capacity(values.len() + 1);
    candidates.push(values[0] / 2.0);
    for pair in values.windows(2) {
        candidates.push((pair[0] + pair[1]) / 2.0);
    }
    candidates.push((values[values.len() - 1] + 1.0) / 2.0);

    let mut best = ThresholdModel {
        threshold: candidates[0],
        training_error: f64::INFINITY,
    };
    for &t in &candidates {
        let errors = training
            .iter()
            .filter(|&&(q, label)| u8::from(q > t) != label)
            .count();
        let error = errors as f64 / training.len() as f64;
        if error < best.training_error {
            best = ThresholdModel {
                threshold: t,
                training_error: error,
            };
        }
    }
    Ok(best)
}

/// Binarizes a session aggregate: 1 iff `q > threshold` (strict).
pub fn classify(aggregate: f64, model: &ThresholdModel) -> u8 {
    u8::from(aggregate > model.threshold)
}

/// Fraction of matching prediction/label pairs.
pub fn accuracy(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::input(format!(
            "{} predictions but {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::input("cannot take the accuracy of no decisions"));
    }
    let correct = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(correct as f64 / predictions.len() as f64)
}

/// Writes a behavior-trajectory CSV: `time,<code1>,<code2>,...` with one row
/// per distinct frame time and a blank cell wherever a code lacks a frame.
pub fn emit_trajectory<W: Write>(codes: &[(String, SessionScore)], writer: W) -> Result<()> {
    if codes.is_empty() {
        return Err(Error::input("trajectory needs at least one behavior code"));
    }
    for (name, score) in codes {
        if !score.frame_times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::input(format!(
                "code '{name}': frame times must be strictly increasing"
            )));
        }
    }

    let mut times: Vec<f64> = codes
        .iter()
        .flat_map(|(_, s)| s.frame_times.iter().copied())
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut csv = csv::Writer::from_writer(writer);
    let mut header = vec!["time".to_string()];
    header.extend(codes.iter().map(|(name, _)| name.clone()));
    csv.write_record(&header)?;

    // Per-code cursor into its (sorted) frame times.
    let mut cursors = vec![0usize; codes.len()];
    for &t in &times {
        let mut row = vec![t.to_string()];
        for ((_, score), cursor) in codes.iter().zip(&mut cursors) {
            if *cursor < score.frame_times.len() && score.frame_times[*cursor] == t {
                row.push(score.frame_scores[*cursor].to_string());
                *cursor += 1;
            } else {
                row.push(String::new());
            }
        }
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}
