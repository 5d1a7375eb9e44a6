//! Subcommand implementations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use sddnn_core::arch::partition_features;
use sddnn_core::corpus::{select_extremes, synth_corpus, Gender, SessionRecord, SynthConfig};
use sddnn_core::features::{
    extract_frames, FeatureLayout, FrameFeature, LldColumn, TimeAxis, WindowConfig,
    NUM_FUNCTIONALS,
};
use sddnn_core::io::{
    load_layout, load_model, load_sessions, read_frames_csv, read_lld_csv, save_layout,
    save_manifest_csv, save_model, write_frames_csv, write_lld_csv, LayoutFile, ModelFile,
    NamedNetwork, RunManifest,
};
use sddnn_core::session::{emit_trajectory, SessionScore, DEFAULT_CLAMP_EPS};
use sddnn_core::trainer::cv::RunConfig;
use sddnn_core::trainer::{
    render_tables, run_cv, train_dense, train_dense_sdinit, train_sd, train_sj, train_subnets,
    Regime, TrainSet,
};
use sddnn_core::{Error, Result};

fn load_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| {
        Error::config(format!("cannot open config {}: {e}", path.display()))
    })?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

pub fn synth(config_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    let mut config: SynthConfig = load_json_config(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let corpus = synth_corpus(&config)?;

    std::fs::create_dir_all(out_dir)?;
    let lld_path = out_dir.join("llds.csv");
    let layout_path = out_dir.join("layout.json");
    let manifest_path = out_dir.join("manifest.csv");

    write_lld_csv(&corpus.streams, BufWriter::new(File::create(&lld_path)?))?;
    save_layout(
        &LayoutFile::from_layout(&corpus.layout, config.hop),
        &layout_path,
    )?;
    save_manifest_csv(
        &corpus.sessions,
        BufWriter::new(File::create(&manifest_path)?),
    )?;

    let total_speech: f64 = corpus.streams.iter().map(|s| s.speech_duration()).sum();
    println!(
        "couples: {}\nsessions: {}\ntotal speech: {:.1} s\nwrote: {}, {}, {}",
        config.num_couples,
        corpus.sessions.len(),
        total_speech,
        lld_path.display(),
        layout_path.display(),
        manifest_path.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn extract(
    lld_path: &Path,
    layout_path: &Path,
    out_path: &Path,
    window: f64,
    shift: f64,
    min_segment: f64,
    time_axis: &str,
) -> Result<()> {
    let time_axis = match time_axis {
        "speech" => TimeAxis::Speech,
        "wall" => TimeAxis::Wall,
        other => {
            return Err(Error::config(format!(
                "unknown time axis '{other}' (expected speech or wall)"
            )))
        }
    };
    let layout_file = load_layout(layout_path)?;
    let streams = read_lld_csv(BufReader::new(File::open(lld_path)?), &layout_file)?;
    let cfg = WindowConfig {
        window_len: window,
        shift,
        time_axis,
    };
    let (frames, report) = extract_frames(&streams, min_segment, &cfg)?;
    write_frames_csv(&frames, BufWriter::new(File::create(out_path)?))?;

    eprintln!(
        "sessions: {} processed, {} skipped; segments dropped: {}; \
         frames: {} emitted, {} dropped (non-finite values)",
        report.sessions_processed,
        report.sessions_skipped,
        report.segments_dropped,
        report.frames_emitted,
        report.nan_frames_dropped
    );
    if frames.is_empty() {
        eprintln!("warning: no frames emitted (window longer than available speech?)");
    }
    println!("wrote {} frames to {}", frames.len(), out_path.display());
    Ok(())
}

/// Resolves the frame layout: an explicit sidecar file, the default acoustic
/// layout when the dimensions match it, or unlabeled generic columns.
fn resolve_layout(layout_path: Option<&Path>, frame_dim: usize) -> Result<FeatureLayout> {
    if let Some(path) = layout_path {
        let file = load_layout(path)?;
        let layout = file.to_layout(&file.columns)?;
        if layout.frame_dim() != frame_dim {
            return Err(Error::config(format!(
                "layout describes {} frame columns but frames have {frame_dim}",
                layout.frame_dim()
            )));
        }
        return Ok(layout);
    }
    let default = FeatureLayout::default_acoustic();
    if frame_dim == default.frame_dim() {
        return Ok(default);
    }
    if frame_dim % NUM_FUNCTIONALS != 0 {
        return Err(Error::config(format!(
            "frame dimension {frame_dim} is not a multiple of {NUM_FUNCTIONALS}; \
             supply a layout file"
        )));
    }
    FeatureLayout::new(
        (0..frame_dim / NUM_FUNCTIONALS)
            .map(|i| LldColumn {
                name: format!("lld_{i}"),
                family: None,
            })
            .collect(),
    )
}

fn parse_gender(gender: Option<&str>) -> Result<Option<Gender>> {
    gender.map(str::parse).transpose()
}

fn load_inputs(
    frames_path: &Path,
    manifest_path: &Path,
) -> Result<(Vec<FrameFeature>, Vec<SessionRecord>)> {
    let frames = read_frames_csv(BufReader::new(File::open(frames_path)?))?;
    if frames.is_empty() {
        return Err(Error::input(format!(
            "{} contains no frames",
            frames_path.display()
        )));
    }
    let sessions = load_sessions(manifest_path)?;
    if sessions.is_empty() {
        return Err(Error::input(format!(
            "{} contains no sessions",
            manifest_path.display()
        )));
    }
    Ok((frames, sessions))
}

fn pick_code(requested: Option<&str>, sessions: &[SessionRecord]) -> Result<String> {
    let available: std::collections::BTreeSet<&str> = sessions
        .iter()
        .flat_map(|s| s.ratings.keys().map(String::as_str))
        .collect();
    match requested {
        Some(code) if available.contains(code) => Ok(code.to_string()),
        Some(code) => Err(Error::config(format!(
            "unknown behavior code '{code}'; available: {}",
            available.into_iter().collect::<Vec<_>>().join(", ")
        ))),
        None => {
            let first = available
                .into_iter()
                .next()
                .ok_or_else(|| Error::input("manifest has no rated sessions"))?;
            eprintln!("no --code given; training '{first}'");
            Ok(first.to_string())
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn train(
    frames_path: &Path,
    manifest_path: &Path,
    regime: &str,
    config_path: Option<&Path>,
    model_out: &Path,
    base_model: Option<&Path>,
    code: Option<&str>,
    gender: Option<&str>,
    layout_path: Option<&Path>,
    seed: Option<u64>,
) -> Result<()> {
    let regime: Regime = regime.parse()?;
    let mut cfg: RunConfig = match config_path {
        Some(path) => load_json_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.train.seed = seed;
    }
    cfg.train.regime = regime;
    cfg.train.validate()?;

    if matches!(regime, Regime::Sj | Regime::SdInit) && base_model.is_none() {
        return Err(Error::config(format!(
            "regime {regime} requires --base-model pointing at a trained sd model"
        )));
    }

    let (frames, sessions) = load_inputs(frames_path, manifest_path)?;
    let code = pick_code(code, &sessions)?;
    let gender = parse_gender(gender)?;
    let pool: Vec<SessionRecord> = sessions
        .iter()
        .filter(|s| gender.is_none_or(|g| s.gender == g))
        .filter(|s| s.ratings.contains_key(&code))
        .cloned()
        .collect();
    let per_class = match cfg.per_class {
        Some(n) => n,
        None => (pool.len() as f64 * cfg.extreme_fraction).floor() as usize,
    };
    if per_class == 0 {
        return Err(Error::config(
            "too few rated sessions to select extreme classes",
        ));
    }
    let selection = select_extremes(&pool, &code, per_class)?;
    let set = TrainSet::from_frames(&frames, &selection.sessions)?;
    if set.is_empty() {
        return Err(Error::config("selected sessions have no frames"));
    }

    let model_file = match regime {
        Regime::Dense => {
            let (net, _) = train_dense(&set, &cfg.train)?;
            ModelFile::single(regime, &code, net)
        }
        Regime::Subnet | Regime::Sd => {
            let layout = resolve_layout(layout_path, set.feature_dim()?)?;
            let assignment = partition_features(
                cfg.split.mode,
                &layout,
                cfg.split.num_groups,
                sddnn_core::trainer::derive_seed(cfg.train.seed, &[7]),
            )?;
            let subnets = train_subnets(&set, &assignment, &cfg.train)?;
            if regime == Regime::Subnet {
                let networks = subnets
                    .into_iter()
                    .map(|m| NamedNetwork {
                        name: m.group,
                        network: m.network,
                    })
                    .collect();
                ModelFile::bundle(regime, &code, networks)
            } else {
                let nets: Vec<_> = subnets.into_iter().map(|m| m.network).collect();
                let (net, _) = train_sd(&nets, &set, &cfg.train)?;
                ModelFile::single(regime, &code, net)
            }
        }
        Regime::Sj | Regime::SdInit => {
            let base_path = base_model.expect("checked above");
            let base = load_model(base_path)?;
            if base.regime != Regime::Sd {
                return Err(Error::config(format!(
                    "--base-model must be a trained sd model, found regime {}",
                    base.regime
                )));
            }
            let sd_net = base.only_network()?;
            if !sd_net.trained {
                return Err(Error::config("--base-model has not been trained"));
            }
            let (net, _) = if regime == Regime::Sj {
                train_sj(sd_net, &set, &cfg.train)?
            } else {
                train_dense_sdinit(sd_net, &set, &cfg.train)?
            };
            ModelFile::single(regime, &code, net)
        }
    };

    save_model(&model_file, model_out)?;

    let mut manifest = RunManifest::new(
        format!("train --regime {regime} --code {code}"),
        cfg.train.seed,
        serde_json::to_value(&cfg)?,
    );
    manifest.hash_input("frames", frames_path)?;
    manifest.hash_input("manifest", manifest_path)?;
    let manifest_out = run_manifest_path(model_out);
    manifest.save(&manifest_out)?;

    println!(
        "trained {regime} model for '{code}' on {} frames from {} sessions\nwrote {} and {}",
        set.len(),
        selection.sessions.len(),
        model_out.display(),
        manifest_out.display()
    );
    Ok(())
}

fn run_manifest_path(artifact: &Path) -> std::path::PathBuf {
    let mut name = artifact
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".to_string());
    name.push_str(".run.json");
    artifact.with_file_name(name)
}

#[allow(clippy::too_many_arguments)]
pub fn cv(
    frames_path: &Path,
    manifest_path: &Path,
    codes: &[String],
    regimes: &[String],
    config_path: Option<&Path>,
    report_path: &Path,
    layout_path: Option<&Path>,
    jobs: Option<usize>,
    seed: Option<u64>,
) -> Result<()> {
    if let Some(jobs) = jobs {
        if jobs == 0 {
            return Err(Error::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::config(format!("cannot configure {jobs} workers: {e}")))?;
    }
    let mut cfg: RunConfig = match config_path {
        Some(path) => load_json_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.train.seed = seed;
    }
    let regimes: Vec<Regime> = regimes
        .iter()
        .map(|r| r.parse())
        .collect::<Result<Vec<_>>>()?;
    if regimes.is_empty() || codes.is_empty() {
        return Err(Error::config("need at least one --codes and --regimes entry"));
    }

    let (frames, sessions) = load_inputs(frames_path, manifest_path)?;
    let layout = resolve_layout(layout_path, frames[0].values.len())?;

    let report = run_cv(&frames, &sessions, &layout, codes, &regimes, &cfg)?;

    let file = File::create(report_path)?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, &report)?;
    writer.write_all(b"\n")?;
    writer.flush()?;

    let mut manifest = RunManifest::new(
        format!("cv --codes {} --regimes {}", codes.join(","), regimes
            .iter()
            .map(Regime::as_str)
            .collect::<Vec<_>>()
            .join(",")),
        cfg.train.seed,
        serde_json::to_value(&cfg)?,
    );
    manifest.hash_input("frames", frames_path)?;
    manifest.hash_input("manifest", manifest_path)?;
    manifest.save(&run_manifest_path(report_path))?;

    print!("{}", render_tables(&report));
    eprintln!(
        "cross-validation finished in {:.1} s; report at {}",
        report.wall_clock_secs,
        report_path.display()
    );
    Ok(())
}

pub fn trajectory(
    model_paths: &[std::path::PathBuf],
    frames_path: &Path,
    session: &str,
    out_path: &Path,
) -> Result<()> {
    let frames = read_frames_csv(BufReader::new(File::open(frames_path)?))?;
    let mut session_frames: Vec<&FrameFeature> =
        frames.iter().filter(|f| f.session_id == session).collect();
    if session_frames.is_empty() {
        return Err(Error::input(format!(
            "session '{session}' not found in {}",
            frames_path.display()
        )));
    }
    session_frames.sort_by(|a, b| f64::total_cmp(&a.window_start, &b.window_start));

    let mut columns = Vec::with_capacity(model_paths.len());
    let mut seen_names: std::collections::HashSet<String> = std::collections::HashSet::new();
    for path in model_paths {
        let model = load_model(path)?;
        let net = model.only_network().map_err(|_| {
            Error::input(format!(
                "{} is a multi-network bundle; trajectories need single-network models",
                path.display()
            ))
        })?;
        let mut scores = Vec::with_capacity(session_frames.len());
        let mut times = Vec::with_capacity(session_frames.len());
        for frame in &session_frames {
            scores.push(net.score(&frame.values)?);
            times.push(frame.window_start);
        }
        let mut name = model.code.clone();
        let mut suffix = 2;
        while !seen_names.insert(name.clone()) {
            name = format!("{}_{suffix}", model.code);
            suffix += 1;
        }
        columns.push((
            name,
            SessionScore::new(session, scores, times, DEFAULT_CLAMP_EPS)?,
        ));
    }

    emit_trajectory(&columns, BufWriter::new(File::create(out_path)?))?;
    println!(
        "wrote {} rows x {} codes to {}",
        session_frames.len(),
        columns.len(),
        out_path.display()
    );
    Ok(())
}
