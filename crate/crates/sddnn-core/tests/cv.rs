//! Cross-validation harness integration tests.

use std::collections::BTreeMap;

use sddnn_core::corpus::{Gender, SessionRecord};
use sddnn_core::features::{FeatureLayout, FrameFeature, LldColumn};
use sddnn_core::trainer::cv::{GenderMode, RunConfig, SplitConfig};
use sddnn_core::trainer::{render_tables, run_cv, Regime, TrainConfig};

/// A corpus of duplicated identical sessions per class: every class-0 session
/// carries the same frames, likewise class 1.
fn duplicated_corpus(
    num_couples: usize,
    frames_per_session: usize,
) -> (Vec<FrameFeature>, Vec<SessionRecord>, FeatureLayout) {
    let layout = FeatureLayout::new(vec![LldColumn {
        name: "x".into(),
        family: None,
    }])
    .unwrap();
    let mut frames = Vec::new();
    let mut sessions = Vec::new();
    for couple in 0..num_couples {
        let label = couple % 2;
        let session_id = format!("s{couple:02}");
        let couple_id = format!("c{couple:02}");
        for i in 0..frames_per_session {
            // Identical frames within a class, mildly varying over time.
            let wiggle = (i as f64) * 1e-3;
            let base = if label == 0 { -0.8 } else { 0.8 };
            frames.push(FrameFeature {
                session_id: session_id.clone(),
                speaker_id: format!("{couple_id}_a"),
                window_start: i as f64,
                values: vec![
                    base - 0.1,
                    base + 0.1,
                    0.2,
                    base,
                    base + wiggle,
                    0.05,
                ],
            });
        }
        sessions.push(SessionRecord {
            session_id,
            couple_id,
            speaker_id: format!("c{couple:02}_a"),
            gender: if couple % 2 == 0 { Gender::F } else { Gender::M },
            ratings: BTreeMap::from([(
                "blame".to_string(),
                if label == 0 { 2.0 } else { 8.0 },
            )]),
            binary_label: None,
        });
    }
    (frames, sessions, layout)
}

fn quick_config() -> RunConfig {
    RunConfig {
        train: TrainConfig {
            epochs: 20,
            dropout_rate: 0.0,
            dense_hidden: vec![4],
            subnet_hidden: 3,
            fusion_hidden: vec![4],
            seed: 7,
            ..TrainConfig::default()
        },
        split: SplitConfig {
            mode: sddnn_core::arch::PartitionMode::Random,
            num_groups: 2,
        },
        extreme_fraction: 0.5,
        per_class: None,
        gender_mode: GenderMode::Pooled,
        clamp_eps: 1e-6,
    }
}

#[test]
fn report_has_one_cell_per_code_and_regime() {
    let (frames, sessions, layout) = duplicated_corpus(8, 4);
    let regimes = [Regime::Dense, Regime::Sd, Regime::Sj, Regime::SdInit];
    let report = run_cv(
        &frames,
        &sessions,
        &layout,
        &["blame".to_string()],
        &regimes,
        &quick_config(),
    )
    .unwrap();
    assert_eq!(report.results.len(), 1);
    assert_eq!(report.results[0].cohorts.len(), 1);
    assert_eq!(report.results[0].cohorts[0].regimes.len(), 4);
    let table = render_tables(&report);
    assert!(table.contains("blame"));
    assert!(table.contains("sd_init"));
}

#[test]
fn duplicated_identical_sessions_reach_perfect_accuracy() {
    let (frames, sessions, layout) = duplicated_corpus(8, 4);
    let regimes = [Regime::Dense, Regime::Subnet, Regime::Sd, Regime::Sj, Regime::SdInit];
    let report = run_cv(
        &frames,
        &sessions,
        &layout,
        &["blame".to_string()],
        &regimes,
        &quick_config(),
    )
    .unwrap();
    for regime in &report.results[0].cohorts[0].regimes {
        let accuracy = regime
            .accuracy
            .unwrap_or_else(|| panic!("{} produced no decisions", regime.regime));
        assert_eq!(
            accuracy, 1.0,
            "regime {} below perfect on duplicated sessions",
            regime.regime
        );
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let (frames, sessions, layout) = duplicated_corpus(8, 4);
    let regimes = [Regime::Dense, Regime::Sd];
    let codes = ["blame".to_string()];
    let cfg = quick_config();
    let a = run_cv(&frames, &sessions, &layout, &codes, &regimes, &cfg).unwrap();
    let b = run_cv(&frames, &sessions, &layout, &codes, &regimes, &cfg).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn unknown_codes_are_reported_with_the_available_list() {
    let (frames, sessions, layout) = duplicated_corpus(4, 2);
    let err = run_cv(
        &frames,
        &sessions,
        &layout,
        &["warmth".to_string()],
        &[Regime::Dense],
        &quick_config(),
    )
    .unwrap_err();
    let text = err.to_string();
    assert!(text.contains("warmth") && text.contains("blame"), "{text}");
}

#[test]
fn per_gender_mode_builds_separate_cohorts() {
    let (frames, sessions, layout) = duplicated_corpus(12, 3);
    let mut cfg = quick_config();
    cfg.gender_mode = GenderMode::PerGender;
    let report = run_cv(
        &frames,
        &sessions,
        &layout,
        &["blame".to_string()],
        &[Regime::Dense],
        &cfg,
    )
    .unwrap();
    let cohorts: Vec<&str> = report.results[0]
        .cohorts
        .iter()
        .map(|c| c.cohort.as_str())
        .collect();
    assert_eq!(cohorts, vec!["f", "m"]);
}
