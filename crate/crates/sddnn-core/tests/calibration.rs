//! Manual calibration harness for the synthetic benchmark defaults.
//! Run with: cargo test -p sddnn-core --test calibration -- --ignored --nocapture

use std::time::Instant;

use sddnn_core::corpus::{synth_corpus, SynthConfig};
use sddnn_core::features::{extract_frames, WindowConfig};
use sddnn_core::trainer::cv::{GenderMode, RunConfig};
use sddnn_core::trainer::{run_cv, Regime, TrainConfig};

fn measure(seed: u64, synth: &SynthConfig, cfg: &RunConfig, regimes: &[Regime]) -> Vec<(Regime, f64)> {
    let synth = SynthConfig { seed, ..synth.clone() };
    let corpus = synth_corpus(&synth).unwrap();
    let (frames, report) = extract_frames(&corpus.streams, 1.5, &WindowConfig::default()).unwrap();
    let mut cfg = cfg.clone();
    cfg.train.seed = seed;
    let t = Instant::now();
    let report_cv = run_cv(
        &frames,
        &corpus.sessions,
        &corpus.layout,
        &[synth.codes[0].clone()],
        regimes,
        &cfg,
    )
    .unwrap();
    let cohort = &report_cv.results[0].cohorts[0];
    let out: Vec<(Regime, f64)> = cohort
        .regimes
        .iter()
        .map(|r| (r.regime, r.accuracy.unwrap_or(f64::NAN)))
        .collect();
    println!(
        "seed {seed}: frames {} | cv {:.1}s | {}",
        report.frames_emitted,
        t.elapsed().as_secs_f64(),
        out.iter()
            .map(|(r, a)| format!("{r}={:.3}", a))
            .collect::<Vec<_>>()
            .join(" ")
    );
    out
}

fn env_f64(name: &str, default: f64) -> f64 {
    std::env::var(name)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

#[test]
#[ignore]
fn calibrate_default_benchmark() {
    let synth = SynthConfig {
        effect_size: env_f64("CAL_EFFECT", SynthConfig::default().effect_size),
        nuisance_scale: env_f64("CAL_NUISANCE", SynthConfig::default().nuisance_scale),
        ..SynthConfig::default()
    };
    println!(
        "effect {} nuisance {}",
        synth.effect_size, synth.nuisance_scale
    );
    let cfg = RunConfig {
        gender_mode: GenderMode::Pooled,
        ..RunConfig::default()
    };
    let regimes = [Regime::Dense, Regime::Sd, Regime::Sj, Regime::SdInit];
    let total = Instant::now();
    let mut sums = vec![0.0; regimes.len()];
    let seeds = [1u64, 2, 3, 4, 5];
    for &seed in &seeds {
        let out = measure(seed, &synth, &cfg, &regimes);
        for (i, (_, a)) in out.iter().enumerate() {
            sums[i] += a;
        }
    }
    println!("--- means over {} seeds ---", seeds.len());
    for (i, r) in regimes.iter().enumerate() {
        println!("{r}: {:.4}", sums[i] / seeds.len() as f64);
    }
    println!("total {:.1}s", total.elapsed().as_secs_f64());
}

#[test]
#[ignore]
fn calibrate_separable_benchmark() {
    let synth = SynthConfig {
        nuisance_scale: 0.0,
        effect_size: 2.0,
        ..SynthConfig::default()
    };
    let cfg = RunConfig {
        gender_mode: GenderMode::Pooled,
        ..RunConfig::default()
    };
    let total = Instant::now();
    measure(1, &synth, &cfg, &[Regime::Sd]);
    println!("total {:.1}s", total.elapsed().as_secs_f64());
}
