//! Command-line entry point for the behavior-classification pipeline.
//!
//! Subcommands: `synth` (generate a synthetic corpus), `extract` (LLD streams
//! to functional frames), `train` (one regime, one model file), `cv` (the full
//! cross-validation matrix), and `trajectory` (per-frame score curves for one
//! session).
//!
//! Exit codes: 0 on success, 2 for usage/configuration/input problems, 1 for
//! internal errors. Diagnostics go to stderr; stdout carries only requested
//! data and summaries.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "sddnn", version, about = "Behavior classification from windowed acoustic functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (LLD CSV, layout JSON, session manifest).
    Synth {
        /// Synthesis configuration JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the configuration seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Extract normalized sliding-window functional frames from LLD streams.
    Extract {
        /// LLD CSV input.
        #[arg(long)]
        lld: PathBuf,
        /// Sidecar layout JSON (hop and column families).
        #[arg(long)]
        layout: PathBuf,
        /// Frame CSV output.
        #[arg(long)]
        out: PathBuf,
        /// Window length in seconds.
        #[arg(long, default_value_t = 20.0)]
        window: f64,
        /// Window shift in seconds.
        #[arg(long, default_value_t = 1.0)]
        shift: f64,
        /// Minimum speech-segment duration in seconds.
        #[arg(long, default_value_t = 1.5)]
        min_segment: f64,
        /// Axis windows slide over: concatenated speech time or wall clock.
        #[arg(long, default_value = "speech")]
        time_axis: String,
    },
    /// Train one regime on the extreme sessions of one behavior code.
    Train {
        /// Frame CSV input.
        #[arg(long)]
        frames: PathBuf,
        /// Session manifest (CSV or JSON).
        #[arg(long)]
        manifest: PathBuf,
        /// Regime: dense, subnet, sd, sj, or sd_init.
        #[arg(long)]
        regime: String,
        /// Run configuration JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output model JSON.
        #[arg(long)]
        model_out: PathBuf,
        /// Trained composite model (required for sj and sd_init).
        #[arg(long)]
        base_model: Option<PathBuf>,
        /// Behavior code to train; defaults to the first available.
        #[arg(long)]
        code: Option<String>,
        /// Restrict training to one gender (f or m).
        #[arg(long)]
        gender: Option<String>,
        /// Sidecar layout JSON for feature families.
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Override the configuration seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run leave-one-couple-out cross-validation over codes and regimes.
    Cv {
        /// Frame CSV input.
        #[arg(long)]
        frames: PathBuf,
        /// Session manifest (CSV or JSON).
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated behavior codes.
        #[arg(long, value_delimiter = ',')]
        codes: Vec<String>,
        /// Comma-separated regimes.
        #[arg(long, value_delimiter = ',')]
        regimes: Vec<String>,
        /// Run configuration JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report JSON output.
        #[arg(long)]
        report: PathBuf,
        /// Sidecar layout JSON for feature families.
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Worker-thread cap for fold parallelism.
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the configuration seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Emit a behavior-trajectory CSV for one session.
    Trajectory {
        /// Trained model JSON; repeat for one score column per model.
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        /// Frame CSV input.
        #[arg(long)]
        frames: PathBuf,
        /// Session to trace.
        #[arg(long)]
        session: String,
        /// Trajectory CSV output.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth { config, out, seed } => commands::synth(&config, &out, seed),
        Command::Extract {
            lld,
            layout,
            out,
            window,
            shift,
            min_segment,
            time_axis,
        } => commands::extract(&lld, &layout, &out, window, shift, min_segment, &time_axis),
        Command::Train {
            frames,
            manifest,
            regime,
            config,
            model_out,
            base_model,
            code,
            gender,
            layout,
            seed,
        } => commands::train(
            &frames,
            &manifest,
            &regime,
            config.as_deref(),
            &model_out,
            base_model.as_deref(),
            code.as_deref(),
            gender.as_deref(),
            layout.as_deref(),
            seed,
        ),
        Command::Cv {
            frames,
            manifest,
            codes,
            regimes,
            config,
            report,
            layout,
            jobs,
            seed,
        } => commands::cv(
            &frames,
            &manifest,
            &codes,
            &regimes,
            config.as_deref(),
            &report,
            layout.as_deref(),
            jobs,
            seed,
        ),
        Command::Trajectory {
            model,
            frames,
            session,
            out,
        } => commands::trajectory(&model, &frames, &session, &out),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
