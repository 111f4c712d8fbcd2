//! The `metrics` subcommand: per-pair and mean PSNR/SSIM over two
//! directories of same-named images.
//!
//! Output lines are `path psnr_db ssim seconds`; identical pairs print
//! `inf` for PSNR.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Args;
use sglc_core::{psnr, read_image, ssim, RunRecord, RunReport};

#[derive(Args)]
pub struct MetricsArgs {
    /// Directory of reference images.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Directory of test images (same filenames).
    #[arg(long)]
    test: PathBuf,
    /// Write the per-pair results as JSON to this path.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn execute(args: MetricsArgs) -> ExitCode {
    let ref_files = match list_images(&args.reference) {
        Ok(f) => f,
        Err(e) => return crate::config_error(e),
    };
    let test_files = match list_images(&args.test) {
        Ok(f) => f,
        Err(e) => return crate::config_error(e),
    };

    let mut orphans: Vec<String> = Vec::new();
    orphans.extend(
        ref_files
            .keys()
            .filter(|k| !test_files.contains_key(*k))
            .map(|k| format!("{k} (only in --ref)")),
    );
    orphans.extend(
        test_files
            .keys()
            .filter(|k| !ref_files.contains_key(*k))
            .map(|k| format!("{k} (only in --test)")),
    );

    let mut any_failed = !orphans.is_empty();
    let mut records = Vec::new();
    for (name, ref_path) in &ref_files {
        let Some(test_path) = test_files.get(name) else {
            continue;
        };
        let started = Instant::now();
        let outcome = compare(ref_path, test_path);
        let seconds = started.elapsed().as_secs_f64();
        match outcome {
            Ok((psnr_db, ssim_value)) => {
                println!("{name} {} {ssim_value:.6} {seconds:.3}", format_db(psnr_db));
                records.push(RunRecord {
                    input: name.clone(),
                    output: None,
                    gfg_seconds: None,
                    lfe_seconds: None,
                    total_seconds: seconds,
                    psnr_db: Some(psnr_db),
                    ssim: Some(ssim_value),
                    error: None,
                });
            }
            Err(e) => {
                any_failed = true;
                eprintln!("{name}: skipped ({e})");
                records.push(RunRecord {
                    input: name.clone(),
                    output: None,
                    gfg_seconds: None,
                    lfe_seconds: None,
                    total_seconds: seconds,
                    psnr_db: None,
                    ssim: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    let report = RunReport::from_records(records);
    let compared = report.records.iter().filter(|r| r.error.is_none()).count();
    let identical = report
        .records
        .iter()
        .filter(|r| r.psnr_db.is_some_and(f64::is_infinite))
        .count();
    match report.mean_psnr_db {
        Some(mean) => println!("mean psnr {mean:.6} dB over {compared} pairs"),
        None if identical == compared && compared > 0 => {
            println!("mean psnr inf (all {compared} pairs identical)")
        }
        None => {}
    }
    if let Some(mean) = report.mean_ssim {
        println!("mean ssim {mean:.6}");
    }

    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report).expect("serializable report");
        if let Err(e) = std::fs::write(path, json) {
            eprintln!("could not write report {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }

    if !orphans.is_empty() {
        eprintln!("unpaired files:");
        for o in &orphans {
            eprintln!("  {o}");
        }
    }
    if any_failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn compare(ref_path: &Path, test_path: &Path) -> anyhow::Result<(f64, f64)> {
    let reference = read_image(ref_path)?;
    let test = read_image(test_path)?;
    let psnr_db = psnr(&reference, &test, 1.0)?;
    let ssim_value = ssim(&reference, &test)?;
    Ok((psnr_db, ssim_value))
}

fn format_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

fn list_images(dir: &Path) -> anyhow::Result<BTreeMap<String, PathBuf>> {
    if !dir.is_dir() {
        anyhow::bail!("{}: not a directory", dir.display());
    }
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm"))
            .unwrap_or(false);
        if is_image {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                out.insert(name.to_string(), path.clone());
            }
        }
    }
    Ok(out)
}
