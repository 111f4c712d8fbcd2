//! `sglc`: batch front end for the two-stage restoration pipeline.
//!
//! Exit codes: 0 on full success, 1 when any image failed (failures are
//! listed and partial progress is kept), 2 on configuration errors.

mod metrics_cmd;
mod run_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sglc_core::{
    export_em_data, generate_corpus, CorruptionSpec, PipelineConfig, StageOrder,
};

#[derive(Parser)]
#[command(
    name = "sglc",
    version,
    about = "Two-stage high-resolution image restoration (grid patching + window smoothing)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Restore images with the configured pipeline.
    Run(run_cmd::RunArgs),
    /// Compare two directories of same-named images (PSNR / SSIM).
    Metrics(metrics_cmd::MetricsArgs),
    /// Export enhancer-training window-patch pairs from hazy/clean pairs.
    ExportEm(ExportEmArgs),
    /// Generate a self-supervised corpus of white-square corruptions.
    SslGen(SslGenArgs),
}

#[derive(Args)]
struct ExportEmArgs {
    /// Directory of hazy input images.
    #[arg(long)]
    input: PathBuf,
    /// Directory of matching clean images (same filenames).
    #[arg(long)]
    clean: PathBuf,
    /// Output directory for the patch pairs and manifest.
    #[arg(long)]
    output: PathBuf,
    /// Pipeline configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SslGenArgs {
    /// Directory of clean input images.
    #[arg(long)]
    input: PathBuf,
    /// Output directory for the corrupted/clean/mask triplets.
    #[arg(long)]
    output: PathBuf,
    /// Range for the number of squares per image, e.g. `1,8`.
    #[arg(long, value_name = "MIN,MAX")]
    squares: Option<String>,
    /// Square side as a fraction of the smaller dimension, e.g. `0.01,0.10`.
    #[arg(long = "side-frac", value_name = "LO,HI")]
    side_frac: Option<String>,
    /// Fill value painted inside squares (default 1.0 = white).
    #[arg(long)]
    fill: Option<f64>,
    /// Master seed; per-image seeds derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SGLC_LOG", "warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run_cmd::execute(args),
        Command::Metrics(args) => metrics_cmd::execute(args),
        Command::ExportEm(args) => export_em(args),
        Command::SslGen(args) => ssl_gen(args),
    }
}

fn export_em(args: ExportEmArgs) -> ExitCode {
    let cfg = match load_config(args.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => return config_error(e),
    };
    match export_em_data(&args.input, &args.clean, &args.output, &cfg) {
        Ok(manifest) => {
            println!(
                "exported {} patch pairs ({}x{} windows) to {}",
                manifest.records.len(),
                manifest.window_side,
                manifest.window_side,
                args.output.display()
            );
            ExitCode::SUCCESS
        }
        Err(e @ sglc_core::SglcError::Config(_)) => config_error(e.into()),
        Err(e) => {
            eprintln!("export failed: {e}");
            ExitCode::from(1)
        }
    }
}

fn ssl_gen(args: SslGenArgs) -> ExitCode {
    let mut spec = CorruptionSpec {
        seed: args.seed,
        ..CorruptionSpec::default()
    };
    if let Some(s) = &args.squares {
        match parse_pair::<u32>(s) {
            Ok(range) => spec.square_count = range,
            Err(e) => return config_error(anyhow::anyhow!("--squares: {e}")),
        }
    }
    if let Some(s) = &args.side_frac {
        match parse_pair::<f64>(s) {
            Ok(range) => spec.side_fraction = range,
            Err(e) => return config_error(anyhow::anyhow!("--side-frac: {e}")),
        }
    }
    if let Some(fill) = args.fill {
        spec.fill_value = fill;
    }
    if let Err(e) = spec.validate() {
        return config_error(e.into());
    }
    match generate_corpus(&args.input, &args.output, &spec) {
        Ok(manifest) => {
            println!(
                "generated {} triplets ({} skipped) in {}",
                manifest.records.len(),
                manifest.skipped.len(),
                args.output.display()
            );
            if manifest.skipped.is_empty() {
                ExitCode::SUCCESS
            } else {
                for s in &manifest.skipped {
                    eprintln!("skipped {}: {}", s.skipped, s.reason);
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("corpus generation failed: {e}");
            ExitCode::from(1)
        }
    }
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated values, got `{s}`"))?;
    let a = a
        .trim()
        .parse()
        .map_err(|_| format!("bad value `{}`", a.trim()))?;
    let b = b
        .trim()
        .parse()
        .map_err(|_| format!("bad value `{}`", b.trim()))?;
    Ok((a, b))
}

fn load_config(path: Option<&std::path::Path>) -> anyhow::Result<PipelineConfig> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?;
            Ok(PipelineConfig::from_config_str(&text)?)
        }
    }
}

fn config_error(e: anyhow::Error) -> ExitCode {
    eprintln!("configuration error: {e}");
    ExitCode::from(2)
}

/// Shared flag -> config plumbing for `run` and friends.
#[derive(Args, Clone)]
pub struct ConfigOverrides {
    /// Pipeline configuration file (flags below override its values).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Grid-patch side for the global stage.
    #[arg(long = "grid-size")]
    pub grid_size: Option<usize>,
    /// Window side for the local stage.
    #[arg(long = "window-size")]
    pub window_size: Option<usize>,
    /// Stage order: gfg-then-lfe | lfe-then-gfg | gfg-only | lfe-only.
    #[arg(long)]
    pub order: Option<String>,
    /// Overlapping-window smoothing: on | off.
    #[arg(long)]
    pub mops: Option<String>,
    /// Global-stage processor: identity | dcp[:k=v,...] | external:<cmd>.
    #[arg(long = "gfg-proc")]
    pub gfg_proc: Option<String>,
    /// Local-stage processor: identity | dcp[:k=v,...] | external:<cmd>.
    #[arg(long = "lfe-proc")]
    pub lfe_proc: Option<String>,
    /// Augmentation set: d4 | identity | comma list of r0,r90m,...
    #[arg(long)]
    pub transforms: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Seed recorded in the config (reproducibility bookkeeping).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Padding mode: reflect | zero | edge.
    #[arg(long = "pad-mode")]
    pub pad_mode: Option<String>,
    /// Diagnostic: overlap without the spline taper.
    #[arg(long = "mops-flat-weights", default_value_t = false)]
    pub mops_flat_weights: bool,
}

impl ConfigOverrides {
    pub fn resolve(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(v) = self.grid_size {
            cfg.grid_side = v;
        }
        if let Some(v) = self.window_size {
            cfg.window_side = v;
        }
        if let Some(v) = &self.order {
            cfg.order = v.parse::<StageOrder>()?;
        }
        if let Some(v) = &self.mops {
            cfg.mops = match v.as_str() {
                "on" => true,
                "off" => false,
                other => anyhow::bail!("--mops expects on or off, got `{other}`"),
            };
        }
        if let Some(v) = &self.gfg_proc {
            cfg.gfg_processor = v.parse()?;
        }
        if let Some(v) = &self.lfe_proc {
            cfg.lfe_processor = v.parse()?;
        }
        if let Some(v) = &self.transforms {
            cfg.transforms = sglc_core::config::parse_transforms(v)?;
            cfg.canonicalize_transforms();
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.pad_mode {
            cfg.pad_mode = sglc_core::PadMode::parse(v)?;
        }
        if self.mops_flat_weights {
            cfg.mops_flat_weights = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
