//! Session/couple data model, extreme-session selection, leave-one-couple-out
//! fold planning, frame labeling, and a synthetic corpus generator for
//! desk-scale experiments.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureLayout, FrameFeature, LldColumn, LldStream, Segment};

/// Speaker gender in the session manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    F,
    M,
}

impl std::fmt::Display for Gender {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Gender::F => "f",
            Gender::M => "m",
        })
    }
}

impl std::str::FromStr for Gender {
    type Err = Error;
    fn from_str(s: &str) -> Result<Gender> {
        match s {
            "f" | "F" => Ok(Gender::F),
            "m" | "M" => Ok(Gender::M),
            other => Err(Error::input(format!("unknown gender '{other}'"))),
        }
    }
}

/// One rated unit: a speaker's side of one recorded interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub couple_id: String,
    pub speaker_id: String,
    pub gender: Gender,
    /// Behavior-code ratings on the 1..9 scale.
    pub ratings: BTreeMap<String, f64>,
    /// Set only after extreme selection.
    pub binary_label: Option<u8>,
}

impl SessionRecord {
    pub fn validate(&self) -> Result<()> {
        for (code, &rating) in &self.ratings {
            if !(1.0..=9.0).contains(&rating) {
                return Err(Error::input(format!(
                    "session {}: rating {rating} for '{code}' outside [1, 9]",
                    self.session_id
                )));
            }
        }
        Ok(())
    }
}

/// Result of extreme-session selection for one behavior code.
#[derive(Debug, Clone)]
pub struct ExtremeSelection {
    /// The selected sessions with `binary_label` set; low extremes first.
    pub sessions: Vec<SessionRecord>,
    /// True when the two classes overlap in rating (e.g. all ratings equal).
    pub degenerate: bool,
}

/// Selects the `per_class` lowest-rated sessions (label 0) and `per_class`
/// highest-rated (label 1) for one behavior code.
///
/// Ties at either cut break by ascending session id, so the selection is
/// deterministic.
pub fn select_extremes(
    sessions: &[SessionRecord],
    code: &str,
    per_class: usize,
) -> Result<ExtremeSelection> {
    if per_class == 0 {
        return Err(Error::config("per-class count must be at least 1"));
    }
    let mut rated: Vec<&SessionRecord> = sessions
        .iter()
        .filter(|s| s.ratings.contains_key(code))
        .collect();
    if rated.len() < 2 * per_class {
        return Err(Error::config(format!(
            "extreme selection needs at least {} sessions rated for '{code}', found {}",
            2 * per_class,
            rated.len()
        )));
    }
    rated.sort_by(|a, b| {
        f64::total_cmp(&a.ratings[code], &b.ratings[code])
            .then_with(|| a.session_id.cmp(&b.session_id))
    });

    let mut selected = Vec::with_capacity(2 * per_class);
    for s in &rated[..per_class] {
        let mut record = (*s).clone();
        record.binary_label = Some(0);
        selected.push(record);
    }
    for s in &rated[rated.len() - per_class..] {
        let mut record = (*s).clone();
        record.binary_label = Some(1);
        selected.push(record);
    }

    let low_max = selected[per_class - 1].ratings[code];
    let high_min = selected[per_class].ratings[code];
    Ok(ExtremeSelection {
        sessions: selected,
        degenerate: low_max >= high_min,
    })
}

/// One leave-one-couple-out fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub held_out_couple_id: String,
    pub train_session_ids: Vec<String>,
    pub test_session_ids: Vec<String>,
}

/// The full leave-one-couple-out partition for one selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

/// Builds one fold per couple holding out all of that couple's selected
/// sessions together, training on everything else.
pub fn make_folds(labeled: &[SessionRecord]) -> Result<FoldPlan> {
    for s in labeled {
        if s.binary_label.is_none() {
            return Err(Error::input(format!(
                "session {} has no binary label; run extreme selection first",
                s.session_id
            )));
        }
    }
    let mut by_couple: BTreeMap<&str, Vec<&SessionRecord>> = BTreeMap::new();
    for s in labeled {
        by_couple.entry(&s.couple_id).or_default().push(s);
    }
    let folds = by_couple
        .iter()
        .map(|(&couple, test)| {
            let mut test_session_ids: Vec<String> =
                test.iter().map(|s| s.session_id.clone()).collect();
            test_session_ids.sort();
            let mut train_session_ids: Vec<String> = labeled
                .iter()
                .filter(|s| s.couple_id != couple)
                .map(|s| s.session_id.clone())
                .collect();
            train_session_ids.sort();
            Fold {
                held_out_couple_id: couple.to_string(),
                train_session_ids,
                test_session_ids,
            }
        })
        .collect();
    Ok(FoldPlan { folds })
}

impl FoldPlan {
    /// Verifies that no couple sits on both sides of any fold and that the
    /// test sets cover every selected session exactly once.
    pub fn audit_no_leakage(&self, labeled: &[SessionRecord]) -> Result<()> {
        let couple_of: HashMap<&str, &str> = labeled
            .iter()
            .map(|s| (s.session_id.as_str(), s.couple_id.as_str()))
            .collect();
        let mut tested: Vec<&str> = Vec::new();
        for fold in &self.folds {
            for id in &fold.train_session_ids {
                let couple = couple_of.get(id.as_str()).ok_or_else(|| {
                    Error::internal(format!("fold references unknown session {id}"))
                })?;
                if *couple == fold.held_out_couple_id {
                    return Err(Error::internal(format!(
                        "couple {couple} appears in both train and test of its own fold"
                    )));
                }
            }
            tested.extend(fold.test_session_ids.iter().map(String::as_str));
        }
        tested.sort_unstable();
        let mut expected: Vec<&str> = labeled.iter().map(|s| s.session_id.as_str()).collect();
        expected.sort_unstable();
        if tested != expected {
            return Err(Error::internal(
                "test sets do not cover every selected session exactly once",
            ));
        }
        Ok(())
    }
}

/// Pairs each frame (by index) with its session's binary label as an MSE
/// target of 0.0 or 1.0.
pub fn label_frames(
    frames: &[FrameFeature],
    labeled: &[SessionRecord],
) -> Result<Vec<(usize, f64)>> {
    let mut labels: HashMap<&str, u8> = HashMap::new();
    for s in labeled {
        let label = s.binary_label.ok_or_else(|| {
            Error::input(format!("session {} has no binary label", s.session_id))
        })?;
        labels.insert(&s.session_id, label);
    }
    frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            let label = labels.get(frame.session_id.as_str()).ok_or_else(|| {
                Error::input(format!(
                    "frame at index {i} belongs to unlabeled session {}",
                    frame.session_id
                ))
            })?;
            Ok((i, f64::from(*label)))
        })
        .collect()
}

/// Parameters of the synthetic corpus generator.
///
/// Each couple has two speakers; sessions alternate between them. Per session
/// and behavior code a latent rating is drawn uniformly in [1, 9]; a designated
/// disjoint subset of LLD columns per code receives an additive burst whose
/// amplitude is `(rating - 5) * effect_size`. Bursts hit a fixed fraction of
/// samples, so the signal survives per-session z-normalization as a shape
/// change rather than a (removed) global mean shift. Speakers carry their own
/// burst-amplitude fingerprint on every column, scaled by `nuisance_scale`,
/// which is the confound that punishes models free to overfit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub num_couples: usize,
    pub sessions_per_couple: usize,
    pub lld_dim: usize,
    pub hop: f64,
    /// Mean total speech duration per session, seconds.
    pub mean_speech_duration: f64,
    pub codes: Vec<String>,
    pub effect_size: f64,
    pub nuisance_scale: f64,
    pub noise_scale: f64,
    /// Number of signal LLD columns designated per behavior code.
    pub signal_cols_per_code: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_couples: 30,
            sessions_per_couple: 2,
            lld_dim: 28,
            hop: 0.05,
            mean_speech_duration: 45.0,
            codes: vec![
                "acceptance".to_string(),
                "negativity".to_string(),
                "blame".to_string(),
            ],
            effect_size: 0.5,
            nuisance_scale: 1.5,
            noise_scale: 1.0,
            signal_cols_per_code: 4,
            seed: 1,
        }
    }
}

/// Fraction of samples carrying the burst amplitude.
const BURST_PROB: f64 = 0.3;

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_couples == 0 || self.sessions_per_couple == 0 {
            return Err(Error::config("corpus needs at least one couple and session"));
        }
        if self.lld_dim == 0 {
            return Err(Error::config("LLD dimension must be at least 1"));
        }
        if self.hop <= 0.0 || self.mean_speech_duration <= 0.0 {
            return Err(Error::config("hop and speech duration must be positive"));
        }
        if self.codes.is_empty() {
            return Err(Error::config("corpus needs at least one behavior code"));
        }
        if self.effect_size < 0.0 || self.nuisance_scale < 0.0 || self.noise_scale < 0.0 {
            return Err(Error::config("scales must be non-negative"));
        }
        if self.codes.len() * self.signal_cols_per_code > self.lld_dim {
            return Err(Error::config(format!(
                "{} codes x {} signal columns exceed the {} LLD columns",
                self.codes.len(),
                self.signal_cols_per_code,
                self.lld_dim
            )));
        }
        Ok(())
    }

    /// The LLD layout the generator emits: the default acoustic layout when the
    /// dimension matches it, otherwise unlabeled generic columns.
    pub fn layout(&self) -> FeatureLayout {
        let acoustic = FeatureLayout::default_acoustic();
        if self.lld_dim == acoustic.num_llds() {
            acoustic
        } else {
            FeatureLayout::new(
                (0..self.lld_dim)
                    .map(|i| LldColumn {
                        name: format!("lld_{i}"),
                        family: None,
                    })
                    .collect(),
            )
            .expect("generic layout is valid")
        }
    }

    /// Signal LLD columns for behavior code `k`: slot `s` maps to column
    /// `s * num_codes + k`, interleaving the codes across families.
    pub fn signal_columns(&self, code_index: usize) -> Vec<usize> {
        (0..self.signal_cols_per_code)
            .map(|s| s * self.codes.len() + code_index)
            .collect()
    }
}

/// A generated corpus: one LLD stream per session record.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub streams: Vec<LldStream>,
    pub sessions: Vec<SessionRecord>,
    pub layout: FeatureLayout,
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; two uniforms per draw keeps the stream layout simple.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generates a synthetic corpus, deterministic per seed.
pub fn synth_corpus(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let layout = config.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut streams = Vec::new();
    let mut sessions = Vec::new();

    for couple in 0..config.num_couples {
        let couple_id = format!("c{couple:03}");
        // Two speakers per couple, each with an additive offset vector and a
        // burst-amplitude fingerprint over all columns.
        let speakers: Vec<(String, Gender, Vec<f64>, Vec<f64>)> = [(Gender::F, "a"), (Gender::M, "b")]
            .iter()
            .map(|(gender, tag)| {
                let offset: Vec<f64> = (0..config.lld_dim)
                    .map(|_| config.nuisance_scale * gaussian(&mut rng))
                    .collect();
                let fingerprint: Vec<f64> = (0..config.lld_dim)
                    .map(|_| config.nuisance_scale * gaussian(&mut rng))
                    .collect();
                (format!("{couple_id}_{tag}"), *gender, offset, fingerprint)
            })
            .collect();

        for session in 0..config.sessions_per_couple {
            let (speaker_id, gender, offset, fingerprint) = &speakers[session % 2];
            let session_id = format!("{couple_id}_s{session:02}");

            let mut ratings = BTreeMap::new();
            let mut amplitude = fingerprint.clone();
            for (k, code) in config.codes.iter().enumerate() {
                let rating = rng.gen_range(1.0..=9.0);
                ratings.insert(code.clone(), rating);
                for col in config.signal_columns(k) {
                    amplitude[col] += (rating - 5.0) * config.effect_size;
                }
            }

            let total = config.mean_speech_duration * rng.gen_range(0.85..1.15);
            let mut segments = Vec::new();
            let mut wall = 0.0;
            let mut remaining = total;
            while remaining > 0.0 {
                let mut seg_len = rng.gen_range(8.0_f64..16.0).min(remaining);
                if remaining - seg_len < 4.0 {
                    seg_len = remaining;
                }
                let samples = (seg_len / config.hop).round().max(1.0) as usize;
                let vectors: Vec<Vec<f64>> = (0..samples)
                    .map(|_| {
                        (0..config.lld_dim)
                            .map(|c| {
                                let burst = if rng.gen::<f64>() < BURST_PROB {
                                    amplitude[c]
                                } else {
                                    0.0
                                };
                                offset[c] + burst + config.noise_scale * gaussian(&mut rng)
                            })
                            .collect()
                    })
                    .collect();
                segments.push(Segment {
                    start: wall,
                    vectors,
                });
                wall += samples as f64 * config.hop + rng.gen_range(0.5..2.5);
                remaining -= seg_len;
            }

            let stream = LldStream {
                session_id: session_id.clone(),
                couple_id: couple_id.clone(),
                speaker_id: speaker_id.clone(),
                hop: config.hop,
                segments,
                layout: layout.clone(),
            };
            stream.validate()?;
            streams.push(stream);

            sessions.push(SessionRecord {
                session_id,
                couple_id: couple_id.clone(),
                speaker_id: speaker_id.clone(),
                gender: *gender,
                ratings,
                binary_label: None,
            });
        }
    }

    Ok(SynthCorpus {
        streams,
        sessions,
        layout,
    })
}
