//! The `run` subcommand: batch restoration with reporting.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Args;
use sglc_core::{
    grid_split, pad_for_grid, psnr, read_image, run_pipeline, ssim, with_worker_pool,
    write_image, GridGeometry, ImageBuffer, PipelineConfig, RunRecord, RunReport, WindowPlan,
};

use crate::ConfigOverrides;

#[derive(Args)]
pub struct RunArgs {
    /// Input image or directory of images (.png / .ppm).
    #[arg(long)]
    input: PathBuf,
    /// Output directory; outputs keep their input filenames.
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Directory of reference images for PSNR/SSIM (same filenames).
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Write the run report as JSON to this path.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Debug: dump the global stage's grid patches as numbered PNGs here.
    #[arg(long = "dump-grid-patches")]
    dump_grid_patches: Option<PathBuf>,
    /// Debug: write the local stage's window coverage-count map here.
    #[arg(long = "coverage-map")]
    coverage_map: Option<PathBuf>,
    /// Process multiple images concurrently (for small images).
    #[arg(long = "parallel-images", default_value_t = false)]
    parallel_images: bool,
}

pub fn execute(args: RunArgs) -> ExitCode {
    let cfg = match args.overrides.resolve() {
        Ok(cfg) => cfg,
        Err(e) => return crate::config_error(e),
    };
    let inputs = match collect_inputs(&args.input) {
        Ok(inputs) => inputs,
        Err(e) => return crate::config_error(e),
    };
    if let Err(e) = std::fs::create_dir_all(&args.output) {
        return crate::config_error(anyhow::anyhow!("{}: {e}", args.output.display()));
    }

    let records: Vec<RunRecord> = with_worker_pool(cfg.workers, || {
        if args.parallel_images {
            use rayon::prelude::*;
            inputs
                .par_iter()
                .map(|path| process_one(path, &args, &cfg))
                .collect()
        } else {
            inputs
                .iter()
                .map(|path| process_one(path, &args, &cfg))
                .collect()
        }
    });

    let failures: Vec<(String, String)> = records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| (r.input.clone(), e.clone())))
        .collect();
    for record in &records {
        match &record.error {
            Some(err) => println!("{}: FAILED ({err})", record.input),
            None => {
                let mut line = format!("{}: {:.3} s", record.input, record.total_seconds);
                if let Some(g) = record.gfg_seconds {
                    line.push_str(&format!(" (gfg {g:.3} s"));
                    if let Some(l) = record.lfe_seconds {
                        line.push_str(&format!(", lfe {l:.3} s"));
                    }
                    line.push(')');
                } else if let Some(l) = record.lfe_seconds {
                    line.push_str(&format!(" (lfe {l:.3} s)"));
                }
                if let Some(p) = record.psnr_db {
                    line.push_str(&format!(" psnr {}", format_db(p)));
                }
                if let Some(s) = record.ssim {
                    line.push_str(&format!(" ssim {s:.4}"));
                }
                println!("{line}");
            }
        }
    }

    let report = RunReport::from_records(records);
    if let Some(mean) = report.mean_psnr_db {
        println!("mean psnr {mean:.4} dB");
    }
    if let Some(mean) = report.mean_ssim {
        println!("mean ssim {mean:.4}");
    }
    println!("mean time {:.3} s/image", report.mean_total_seconds);

    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report).expect("serializable report");
        if let Err(e) = std::fs::write(path, json) {
            eprintln!("could not write report {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }

    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} of {} images failed:", failures.len(), report.records.len());
        for f in &failures {
            eprintln!("  {}: {}", f.input, f.error.as_deref().unwrap_or("unknown"));
        }
        ExitCode::from(1)
    }
}

fn process_one(path: &Path, args: &RunArgs, cfg: &PipelineConfig) -> RunRecord {
    let input_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let started = Instant::now();
    let mut record = RunRecord {
        input: input_name.clone(),
        output: None,
        gfg_seconds: None,
        lfe_seconds: None,
        total_seconds: 0.0,
        psnr_db: None,
        ssim: None,
        error: None,
    };

    let attempt = || -> anyhow::Result<(PathBuf, sglc_core::StageTiming, ImageBuffer)> {
        let img = read_image(path)?;
        if let Some(dir) = &args.dump_grid_patches {
            dump_grid_patches(&img, cfg, &input_name, dir)?;
        }
        if let Some(dir) = &args.coverage_map {
            dump_coverage_map(&img, cfg, &input_name, dir)?;
        }
        let (out, timing) = run_pipeline(&img, cfg)?;
        let out_path = args.output.join(path.file_name().unwrap_or_default());
        write_image(&out, &out_path)?;
        Ok((out_path, timing, out))
    };

    match attempt() {
        Ok((out_path, timing, out)) => {
            record.output = Some(out_path.display().to_string());
            record.gfg_seconds = timing.gfg_seconds;
            record.lfe_seconds = timing.lfe_seconds;
            if let Some(ref_dir) = &args.reference {
                let ref_path = ref_dir.join(path.file_name().unwrap_or_default());
                match read_image(&ref_path) {
                    Ok(reference) => {
                        record.psnr_db = psnr(&reference, &out, 1.0).ok();
                        record.ssim = ssim(&reference, &out).ok();
                    }
                    Err(e) => {
                        log::warn!("no reference for {input_name}: {e}");
                    }
                }
            }
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record.total_seconds = started.elapsed().as_secs_f64();
    record
}

fn dump_grid_patches(
    img: &ImageBuffer,
    cfg: &PipelineConfig,
    name: &str,
    dir: &Path,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let (h, w, _) = img.dims();
    let geometry = GridGeometry::new(h, w, cfg.grid_side)?;
    let padded = pad_for_grid(img, &geometry, cfg.pad_mode)?;
    let set = grid_split(&padded, geometry)?;
    let stem = Path::new(name)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("image");
    for (k, patch) in set.patches().iter().enumerate() {
        write_image(patch, dir.join(format!("{stem}_patch_{k:04}.png")))?;
    }
    Ok(())
}

fn dump_coverage_map(
    img: &ImageBuffer,
    cfg: &PipelineConfig,
    name: &str,
    dir: &Path,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let (h, w, _) = img.dims();
    let side = cfg.window_side;
    let plan = if cfg.mops {
        let stride = side / 2;
        let canvas_h = h + side + (stride - h % stride) % stride;
        let canvas_w = w + side + (stride - w % stride) % stride;
        WindowPlan::overlapping_spline(canvas_h, canvas_w, side)?
    } else {
        let canvas_h = h.div_ceil(side) * side;
        let canvas_w = w.div_ceil(side) * side;
        WindowPlan::non_overlapping(canvas_h, canvas_w, side)?
    };
    let counts = plan.coverage_map();
    let max = counts.data().iter().cloned().fold(1.0, f64::max);
    let scaled = ImageBuffer::new(
        counts.height(),
        counts.width(),
        1,
        counts.data().iter().map(|&v| v / max).collect(),
    )?;
    let stem = Path::new(name)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("image");
    write_image(&scaled, dir.join(format!("{stem}_coverage.png")))?;
    Ok(())
}

fn format_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.4} dB")
    }
}

pub fn collect_inputs(input: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    if !input.is_dir() {
        anyhow::bail!("{}: no such file or directory", input.display());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        anyhow::bail!("{}: no .png or .ppm images found", input.display());
    }
    Ok(files)
}
