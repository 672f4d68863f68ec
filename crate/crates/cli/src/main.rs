//! `lisim`: dataset preparation, synthetic scan generation and evaluation.

mod commands;
mod config;
mod layout;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::metrics::MetricsArgs;
use crate::config::{PipelineConfig, ValidationError};

#[derive(Parser, Debug)]
#[command(name = "lisim", version, about = "LiDAR intensity simulation data pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Fail on the first bad frame instead of skipping it.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Lines {
    #[value(name = "64")]
    L64,
    #[value(name = "32")]
    L32,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build input/target training pairs from a KITTI-style recording.
    PrepareReal,
    /// Convert a VKITTI-style scene into translator inputs and a KITTI tree.
    PrepareSynth,
    /// Turn prepared synthetic depth plus predicted intensity into scans.
    SynthCloud {
        /// Directory of predicted intensity PNGs named `<id>.png`.
        #[arg(long)]
        intensity_dir: PathBuf,
        /// Output directory for `.bin` scans (default: the dataset's velodyne/).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        lines: Option<Lines>,
        /// Drop points whose predicted intensity is zero.
        #[arg(long)]
        drop_zero: bool,
    },
    /// Compare predictions, feature sets or scan collections.
    Metrics {
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        features_a: Option<PathBuf>,
        #[arg(long)]
        features_b: Option<PathBuf>,
        #[arg(long)]
        clouds_a: Option<PathBuf>,
        #[arg(long)]
        clouds_b: Option<PathBuf>,
        #[arg(long, value_enum)]
        lines: Option<Lines>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Dump one frame's intermediate layers as PNGs.
    Inspect {
        #[arg(long)]
        frame: String,
        #[arg(long)]
        out: PathBuf,
        /// Read the frame from the synthetic scene instead of the recording.
        #[arg(long)]
        synthetic: bool,
    },
}

fn load_config(common: &Common) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cfg.strict |= common.strict;
    if let Some(j) = common.jobs {
        cfg.jobs = j;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn apply_lines(cfg: &mut PipelineConfig, lines: Option<Lines>) {
    if let Some(l) = lines {
        cfg.sparsify.n_lines = match l {
            Lines::L64 => 64,
            Lines::L32 => 32,
        };
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = load_config(&cli.common)?;
    match cli.command {
        Command::PrepareReal => {
            let m = commands::prepare_real::run(&cfg)?;
            println!("{} frames written, manifest hash {}", m.frames.len(), m.config_hash);
        }
        Command::PrepareSynth => {
            let m = commands::prepare_synth::run(&cfg)?;
            println!("{} frames written, manifest hash {}", m.frames.len(), m.config_hash);
        }
        Command::SynthCloud {
            intensity_dir,
            out,
            lines,
            drop_zero,
        } => {
            apply_lines(&mut cfg, lines);
            cfg.cloud.drop_zero |= drop_zero;
            let m = commands::synth_cloud::run(&cfg, &intensity_dir, out)?;
            println!("{} scans written", m.frames.len());
        }
        Command::Metrics {
            pred,
            truth,
            features_a,
            features_b,
            clouds_a,
            clouds_b,
            lines,
            report,
        } => {
            apply_lines(&mut cfg, lines);
            let args = MetricsArgs {
                pred,
                truth,
                features_a,
                features_b,
                clouds_a,
                clouds_b,
            };
            let r = commands::metrics::run(&cfg, &args)?;
            let json = serde_json::to_string_pretty(&r)? + "\n";
            match report {
                Some(path) => std::fs::write(path, json)?,
                None => print!("{json}"),
            }
        }
        Command::Inspect { frame, out, synthetic } => commands::inspect::run(&cfg, &frame, &out, synthetic)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ValidationError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
