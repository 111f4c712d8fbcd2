//! Raster file I/O: 8/16-bit PNG (grayscale or RGB) and binary PPM (P6).
//!
//! Samples map to `[0, 1]` by dividing by the bit-depth maximum; writing
//! quantizes with round-half-up, so a write-then-read round trip moves any
//! sample by at most half a quantum.

use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::buffer::ImageBuffer;
use crate::error::{Result, SglcError};

/// Output sample width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let reader = image::ImageReader::open(path).map_err(|e| SglcError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let decoded = reader.decode().map_err(|e| SglcError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let buffer = match decoded {
        DynamicImage::ImageLuma8(img) => from_samples(
            img.height(),
            img.width(),
            1,
            img.as_raw().iter().map(|&v| v as f64 / 255.0),
        ),
        DynamicImage::ImageRgb8(img) => from_samples(
            img.height(),
            img.width(),
            3,
            img.as_raw().iter().map(|&v| v as f64 / 255.0),
        ),
        DynamicImage::ImageLuma16(img) => from_samples(
            img.height(),
            img.width(),
            1,
            img.as_raw().iter().map(|&v| v as f64 / 65535.0),
        ),
        DynamicImage::ImageRgb16(img) => from_samples(
            img.height(),
            img.width(),
            3,
            img.as_raw().iter().map(|&v| v as f64 / 65535.0),
        ),
        other => {
            return Err(SglcError::Format {
                path: path.to_path_buf(),
                message: format!(
                    "unsupported channel layout {:?} (expected 8/16-bit grayscale or RGB)",
                    other.color()
                ),
            })
        }
    }?;
    Ok(buffer)
}

fn from_samples(
    height: u32,
    width: u32,
    channels: usize,
    samples: impl Iterator<Item = f64>,
) -> Result<ImageBuffer> {
    ImageBuffer::new(
        height as usize,
        width as usize,
        channels,
        samples.collect(),
    )
}

/// Writes 8-bit output; format chosen by extension (`.png`, `.ppm`).
pub fn write_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    write_image_depth(img, path, BitDepth::Eight)
}

pub fn write_image_depth(
    img: &ImageBuffer,
    path: impl AsRef<Path>,
    depth: BitDepth,
) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    if format == ImageFormat::Pnm {
        return write_ppm(img, path, depth);
    }
    let (h, w) = (img.height() as u32, img.width() as u32);
    let dynamic = match (img.channels(), depth) {
        (1, BitDepth::Eight) => DynamicImage::ImageLuma8(
            image::GrayImage::from_raw(w, h, quantize_u8(img.data())).unwrap(),
        ),
        (3, BitDepth::Eight) => DynamicImage::ImageRgb8(
            image::RgbImage::from_raw(w, h, quantize_u8(img.data())).unwrap(),
        ),
        (1, BitDepth::Sixteen) => DynamicImage::ImageLuma16(
            image::ImageBuffer::from_raw(w, h, quantize_u16(img.data())).unwrap(),
        ),
        (3, BitDepth::Sixteen) => DynamicImage::ImageRgb16(
            image::ImageBuffer::from_raw(w, h, quantize_u16(img.data())).unwrap(),
        ),
        _ => unreachable!("channel count validated by ImageBuffer"),
    };
    dynamic
        .save_with_format(path, format)
        .map_err(|e| SglcError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

/// Binary PPM (P6), 8-bit, written directly: maxval 255, samples row-major
/// RGB.
fn write_ppm(img: &ImageBuffer, path: &Path, depth: BitDepth) -> Result<()> {
    if img.channels() != 3 {
        return Err(SglcError::Format {
            path: path.to_path_buf(),
            message: "binary PPM (P6) requires 3 channels".into(),
        });
    }
    if depth != BitDepth::Eight {
        return Err(SglcError::Format {
            path: path.to_path_buf(),
            message: "binary PPM output is 8-bit only (use PNG for 16-bit)".into(),
        });
    }
    let mut bytes = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    bytes.extend(quantize_u8(img.data()));
    std::fs::write(path, bytes).map_err(|e| SglcError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "png" => Ok(ImageFormat::Png),
        "ppm" => Ok(ImageFormat::Pnm),
        other => Err(SglcError::Format {
            path: path.to_path_buf(),
            message: format!("unsupported output format `.{other}` (use .png or .ppm)"),
        }),
    }
}

fn quantize_u8(data: &[f64]) -> Vec<u8> {
    data.iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor().min(255.0) as u8)
        .collect()
}

fn quantize_u16(data: &[f64]) -> Vec<u16> {
    data.iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 65535.0 + 0.5).floor().min(65535.0) as u16)
        .collect()
}
