//! Local-stage training-data export: run the global stage over hazy
//! inputs, pad both the result and the clean counterpart to window-size
//! multiples, and write aligned window-patch pairs plus a manifest for an
//! external trainer.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Result, SglcError};
use crate::grid::gfg_stage;
use crate::io::{read_image, write_image};
use crate::pipeline::resolve_processor;
use crate::window::WindowPlan;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EmPatchRecord {
    pub hazy_input: String,
    pub clean_input: String,
    pub padded_height: usize,
    pub padded_width: usize,
    pub origin_y: usize,
    pub origin_x: usize,
    pub dehazed_patch: String,
    pub clean_patch: String,
}

#[derive(Debug, Clone, Default)]
pub struct EmManifest {
    pub window_side: usize,
    pub records: Vec<EmPatchRecord>,
}

impl EmManifest {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("serializable record"));
            out.push('\n');
        }
        out
    }
}

/// Pairs same-named images from `input_dir` (hazy) and `clean_dir`, runs
/// the configured global stage on each hazy image, and writes aligned
/// non-overlapping window-patch pairs into `output_dir`.
pub fn export_em_data(
    input_dir: impl AsRef<Path>,
    clean_dir: impl AsRef<Path>,
    output_dir: impl AsRef<Path>,
    cfg: &PipelineConfig,
) -> Result<EmManifest> {
    cfg.validate()?;
    let input_dir = input_dir.as_ref();
    let clean_dir = clean_dir.as_ref();
    let output_dir = output_dir.as_ref();
    std::fs::create_dir_all(output_dir).map_err(|e| SglcError::Io {
        path: output_dir.to_path_buf(),
        source: e,
    })?;

    let hazy_files = list_images(input_dir)?;
    let clean_files = list_images(clean_dir)?;
    let orphans: Vec<String> = hazy_files
        .keys()
        .filter(|k| !clean_files.contains_key(*k))
        .chain(clean_files.keys().filter(|k| !hazy_files.contains_key(*k)))
        .cloned()
        .collect();
    if !orphans.is_empty() {
        return Err(SglcError::Config(format!(
            "unpaired files: {}",
            orphans.join(", ")
        )));
    }
    if hazy_files.is_empty() {
        return Err(SglcError::Config(format!(
            "no images found in {}",
            input_dir.display()
        )));
    }

    let gfg_proc = resolve_processor(&cfg.gfg_processor, &std::env::temp_dir(), cfg)?;
    let side = cfg.window_side;
    let mut manifest = EmManifest {
        window_side: side,
        records: Vec::new(),
    };

    for (name, hazy_path) in &hazy_files {
        let clean_path = &clean_files[name];
        let hazy = read_image(hazy_path)?;
        let clean = read_image(clean_path)?;
        if hazy.dims() != clean.dims() {
            return Err(SglcError::shape_mismatch(
                format!("{name}: hazy {:?}", hazy.dims()),
                format!("clean {:?}", clean.dims()),
            ));
        }
        let dehazed = gfg_stage(&hazy, cfg.grid_side, gfg_proc.as_ref(), cfg.pad_mode)?;

        let (h, w, _) = dehazed.dims();
        let padded_h = h.div_ceil(side) * side;
        let padded_w = w.div_ceil(side) * side;
        let dehazed_padded = dehazed.pad_to(padded_h, padded_w, cfg.pad_mode)?;
        let clean_padded = clean.pad_to(padded_h, padded_w, cfg.pad_mode)?;
        let plan = WindowPlan::non_overlapping(padded_h, padded_w, side)?;

        let stem = Path::new(name)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("image");
        for &(oy, ox) in &plan.origins {
            let dehazed_patch = dehazed_padded.crop_at(oy, ox, side, side)?;
            let clean_patch = clean_padded.crop_at(oy, ox, side, side)?;
            let dehazed_path = output_dir.join(format!("{stem}_y{oy:05}_x{ox:05}_dehazed.png"));
            let clean_out = output_dir.join(format!("{stem}_y{oy:05}_x{ox:05}_clean.png"));
            write_image(&dehazed_patch, &dehazed_path)?;
            write_image(&clean_patch, &clean_out)?;
            manifest.records.push(EmPatchRecord {
                hazy_input: hazy_path.to_string_lossy().into_owned(),
                clean_input: clean_path.to_string_lossy().into_owned(),
                padded_height: padded_h,
                padded_width: padded_w,
                origin_y: oy,
                origin_x: ox,
                dehazed_patch: dehazed_path.to_string_lossy().into_owned(),
                clean_patch: clean_out.to_string_lossy().into_owned(),
            });
        }
    }

    let manifest_path = output_dir.join("manifest.jsonl");
    std::fs::write(&manifest_path, manifest.to_jsonl()).map_err(|e| SglcError::Io {
        path: manifest_path,
        source: e,
    })?;
    Ok(manifest)
}

fn list_images(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| SglcError::Io {
        path: dir.to_path_buf(),
        source: e,
    })? {
        let path = entry
            .map_err(|e| SglcError::Io {
                path: dir.to_path_buf(),
                source: e,
            })?
            .path();
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
