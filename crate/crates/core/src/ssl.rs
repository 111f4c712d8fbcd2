//! Self-supervised pretraining data: clean images corrupted by random
//! white squares, paired with their originals and a mask.
//!
//! Randomness comes from ChaCha8 keyed by a 64-bit seed, so a corpus is
//! reproducible across platforms and across parallel runs: each image
//! derives its own sub-seed from the master seed and its manifest index.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::buffer::ImageBuffer;
use crate::error::{Result, SglcError};
use crate::io::{read_image, write_image};

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionSpec {
    /// Inclusive range for the number of squares per image.
    pub square_count: (u32, u32),
    /// Square side as a fraction of the smaller image dimension.
    pub side_fraction: (f64, f64),
    /// Value painted into every channel inside a square.
    pub fill_value: f64,
    pub seed: u64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        CorruptionSpec {
            square_count: (1, 8),
            side_fraction: (0.01, 0.10),
            fill_value: 1.0,
            seed: 0,
        }
    }
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.square_count.0 > self.square_count.1 {
            return Err(SglcError::Config(format!(
                "square count range [{}, {}] is empty",
                self.square_count.0, self.square_count.1
            )));
        }
        let (lo, hi) = self.side_fraction;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(SglcError::Config(format!(
                "side fraction range [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"
            )));
        }
        if !(0.0..=1.0).contains(&self.fill_value) {
            return Err(SglcError::Config(format!(
                "fill value {} outside [0, 1]",
                self.fill_value
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Square {
    pub y: usize,
    pub x: usize,
    pub side: usize,
}

/// Paints seeded random squares into a copy of `clean`.
///
/// Returns the corrupted image, a single-channel mask (1 inside squares,
/// 0 outside), and the squares themselves. Outside the mask the corrupted
/// image equals the input bit-exactly.
pub fn corrupt(
    clean: &ImageBuffer,
    spec: &CorruptionSpec,
) -> Result<(ImageBuffer, ImageBuffer, Vec<Square>)> {
    spec.validate()?;
    let (h, w, c) = clean.dims();
    if h < 10 || w < 10 {
        return Err(SglcError::InvalidImage(format!(
            "image {h}x{w} too small to corrupt (minimum 10x10)"
        )));
    }
    let min_dim = h.min(w);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let count = rng.random_range(spec.square_count.0..=spec.square_count.1);
    let mut corrupted = clean.clone();
    let mut mask = ImageBuffer::zeros(h, w, 1)?;
    let mut squares = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let fraction = rng.random_range(spec.side_fraction.0..=spec.side_fraction.1);
        let side = ((fraction * min_dim as f64).round() as usize).max(1);
        let y = rng.random_range(0..=h - side);
        let x = rng.random_range(0..=w - side);
        for yy in y..y + side {
            for xx in x..x + side {
                for ch in 0..c {
                    corrupted.set(yy, xx, ch, spec.fill_value);
                }
                mask.set(yy, xx, 0, 1.0);
            }
        }
        squares.push(Square { y, x, side });
    }
    Ok((corrupted, mask, squares))
}

/// Re-applies recorded squares to a clean image: the replay route used to
/// verify a manifest.
pub fn apply_squares(clean: &ImageBuffer, squares: &[Square], fill_value: f64) -> ImageBuffer {
    let (_, _, c) = clean.dims();
    let mut out = clean.clone();
    for sq in squares {
        for yy in sq.y..sq.y + sq.side {
            for xx in sq.x..sq.x + sq.side {
                for ch in 0..c {
                    out.set(yy, xx, ch, fill_value);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CorpusRecord {
    pub clean: String,
    pub corrupted: String,
    pub mask: String,
    pub seed: u64,
    pub squares: Vec<Square>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SkippedFile {
    pub skipped: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusManifest {
    pub records: Vec<CorpusRecord>,
    pub skipped: Vec<SkippedFile>,
}

impl CorpusManifest {
    /// Line-delimited JSON: one record per generated triplet, then one
    /// line per skipped input.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("serializable record"));
            out.push('\n');
        }
        for s in &self.skipped {
            out.push_str(&serde_json::to_string(s).expect("serializable record"));
            out.push('\n');
        }
        out
    }
}

/// Sub-seed derivation: splitmix64 over the master seed and record index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Corrupts every readable image in `input_dir`, writing per-image
/// triplets (clean copy, corrupted, mask) plus `manifest.jsonl` into
/// `output_dir`.
pub fn generate_corpus(
    input_dir: impl AsRef<Path>,
    output_dir: impl AsRef<Path>,
    spec: &CorruptionSpec,
) -> Result<CorpusManifest> {
    spec.validate()?;
    let input_dir = input_dir.as_ref();
    let output_dir = output_dir.as_ref();
    std::fs::create_dir_all(output_dir).map_err(|e| SglcError::Io {
        path: output_dir.to_path_buf(),
        source: e,
    })?;

    let mut inputs: Vec<PathBuf> = std::fs::read_dir(input_dir)
        .map_err(|e| SglcError::Io {
            path: input_dir.to_path_buf(),
            source: e,
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm"))
                .unwrap_or(false)
        })
        .collect();
    inputs.sort();

    enum Outcome {
        Generated(CorpusRecord),
        Skipped(SkippedFile),
    }

    let outcomes: Vec<Outcome> = inputs
        .par_iter()
        .enumerate()
        .map(|(index, path)| {
            let seed = derive_seed(spec.seed, index as u64);
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("image")
                .to_string();
            let generate = || -> Result<CorpusRecord> {
                let clean = read_image(path)?;
                let per_image = CorruptionSpec {
                    seed,
                    ..spec.clone()
                };
                let (corrupted, mask, squares) = corrupt(&clean, &per_image)?;
                let clean_path = output_dir.join(format!("{stem}_clean.png"));
                let corrupted_path = output_dir.join(format!("{stem}_corrupted.png"));
                let mask_path = output_dir.join(format!("{stem}_mask.png"));
                write_image(&clean, &clean_path)?;
                write_image(&corrupted, &corrupted_path)?;
                write_image(&mask, &mask_path)?;
                Ok(CorpusRecord {
                    clean: clean_path.to_string_lossy().into_owned(),
                    corrupted: corrupted_path.to_string_lossy().into_owned(),
                    mask: mask_path.to_string_lossy().into_owned(),
                    seed,
                    squares,
                })
            };
            match generate() {
                Ok(record) => Ok(Outcome::Generated(record)),
                Err(err) => {
                    // Unwritable output is fatal; unreadable input is
                    // recorded and skipped.
                    let fatal = matches!(
                        &err,
                        SglcError::Io { path, .. } if path.starts_with(output_dir)
                    );
                    if fatal {
                        return Err(err);
                    }
                    log::warn!("skipping {}: {err}", path.display());
                    Ok(Outcome::Skipped(SkippedFile {
                        skipped: path.to_string_lossy().into_owned(),
                        reason: err.to_string(),
                    }))
                }
            }
        })
        .collect::<Result<_>>()?;

    let mut manifest = CorpusManifest::default();
    for outcome in outcomes {
        match outcome {
            Outcome::Generated(r) => manifest.records.push(r),
            Outcome::Skipped(s) => manifest.skipped.push(s),
        }
    }
    let manifest_path = output_dir.join("manifest.jsonl");
    std::fs::write(&manifest_path, manifest.to_jsonl()).map_err(|e| SglcError::Io {
        path: manifest_path,
        source: e,
    })?;
    Ok(manifest)
}
