//! Dense in-memory raster: the pixel container every stage operates on.
//!
//! Samples are `f64` in the nominal range `[0, 1]`, row-major and
//! channel-interleaved. Quantization happens only at file I/O and at the
//! raw tensor boundary; blending and the loss need sub-quantum precision.

use crate::error::{Result, SglcError};
use crate::geometry::GridGeometry;

/// How out-of-bounds source samples are produced when padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadMode {
    /// Mirror without repeating the edge row/column.
    Reflect,
    /// Fill with zeros.
    Zero,
    /// Repeat the edge row/column.
    Edge,
}

impl PadMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PadMode::Reflect => "reflect",
            PadMode::Zero => "zero",
            PadMode::Edge => "edge",
        }
    }

    pub fn parse(s: &str) -> Result<PadMode> {
        match s {
            "reflect" => Ok(PadMode::Reflect),
            "zero" => Ok(PadMode::Zero),
            "edge" => Ok(PadMode::Edge),
            other => Err(SglcError::Config(format!("unknown pad mode `{other}`"))),
        }
    }
}

/// H×W×C raster of finite `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    /// Wraps raw samples after validating shape, channel count and finiteness.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(height, width, channels)?;
        if data.len() != height * width * channels {
            return Err(SglcError::InvalidImage(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(SglcError::InvalidImage(
                "non-finite sample in image data".into(),
            ));
        }
        Ok(ImageBuffer {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        check_dims(height, width, channels)?;
        Ok(ImageBuffer {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        let mut img = Self::zeros(height, width, channels)?;
        if !value.is_finite() {
            return Err(SglcError::InvalidImage("non-finite fill value".into()));
        }
        img.data.fill(value);
        Ok(img)
    }

    /// Builds a buffer by evaluating `f(y, x, c)` at every sample.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        check_dims(height, width, channels)?;
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// (height, width, channels)
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, value: f64) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.dims() == other.dims()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Clamps every sample to `[0, 1]` in place.
    pub fn clamp01(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// Largest absolute per-sample difference; errors on shape mismatch.
    pub fn max_abs_diff(&self, other: &ImageBuffer) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(SglcError::shape_mismatch(
                format_dims(self.dims()),
                format_dims(other.dims()),
            ));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Top-left crop to `height`×`width`; bit-exact copy of the kept region.
    pub fn crop(&self, height: usize, width: usize) -> Result<ImageBuffer> {
        self.crop_at(0, 0, height, width)
    }

    /// Rectangular crop with top-left corner at (y, x).
    pub fn crop_at(&self, y: usize, x: usize, height: usize, width: usize) -> Result<ImageBuffer> {
        if height == 0 || width == 0 || y + height > self.height || x + width > self.width {
            return Err(SglcError::Geometry(format!(
                "crop {height}x{width} at ({y}, {x}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(height * width * c);
        for row in y..y + height {
            let start = (row * self.width + x) * c;
            data.extend_from_slice(&self.data[start..start + width * c]);
        }
        Ok(ImageBuffer {
            height,
            width,
            channels: c,
            data,
        })
    }

    /// Pads at the bottom/right only, up to `height`×`width`.
    pub fn pad_to(&self, height: usize, width: usize, mode: PadMode) -> Result<ImageBuffer> {
        if height < self.height || width < self.width {
            return Err(SglcError::Geometry(format!(
                "pad target {height}x{width} smaller than source {}x{}",
                self.height, self.width
            )));
        }
        self.pad_margins(
            0,
            height - self.height,
            0,
            width - self.width,
            mode,
        )
    }

    /// Pads with independent margins on every side.
    pub fn pad_margins(
        &self,
        top: usize,
        bottom: usize,
        left: usize,
        right: usize,
        mode: PadMode,
    ) -> Result<ImageBuffer> {
        if mode == PadMode::Reflect {
            if (top > 0 || bottom > 0) && self.height < 2 {
                return Err(SglcError::PatchSize(
                    "reflect padding undefined for a single-row image".into(),
                ));
            }
            if (left > 0 || right > 0) && self.width < 2 {
                return Err(SglcError::PatchSize(
                    "reflect padding undefined for a single-column image".into(),
                ));
            }
        }
        let out_h = self.height + top + bottom;
        let out_w = self.width + left + right;
        let c = self.channels;
        let mut out = ImageBuffer {
            height: out_h,
            width: out_w,
            channels: c,
            data: vec![0.0; out_h * out_w * c],
        };
        for oy in 0..out_h {
            let sy = map_source(oy as isize - top as isize, self.height, mode);
            for ox in 0..out_w {
                let sx = map_source(ox as isize - left as isize, self.width, mode);
                let dst = (oy * out_w + ox) * c;
                match (sy, sx) {
                    (Some(sy), Some(sx)) => {
                        let src = (sy * self.width + sx) * c;
                        out.data[dst..dst + c].copy_from_slice(&self.data[src..src + c]);
                    }
                    _ => {
                        // PadMode::Zero outside the source: already zeroed
                    }
                }
            }
        }
        Ok(out)
    }
}

fn check_dims(height: usize, width: usize, channels: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(SglcError::InvalidImage(format!(
            "zero-sized image {height}x{width}"
        )));
    }
    if channels != 1 && channels != 3 {
        return Err(SglcError::InvalidImage(format!(
            "unsupported channel count {channels} (expected 1 or 3)"
        )));
    }
    Ok(())
}

fn format_dims((h, w, c): (usize, usize, usize)) -> String {
    format!("{h}x{w}x{c}")
}

/// Maps a possibly out-of-range coordinate into `[0, n)` per the pad mode.
/// `None` means "no source" (zero fill).
fn map_source(i: isize, n: usize, mode: PadMode) -> Option<usize> {
    if i >= 0 && (i as usize) < n {
        return Some(i as usize);
    }
    match mode {
        PadMode::Zero => None,
        PadMode::Edge => Some(i.clamp(0, n as isize - 1) as usize),
        PadMode::Reflect => Some(fold_reflect(i, n)),
    }
}

/// Triangle-wave fold: the infinite mirror without repeating edge samples.
/// Caller guarantees `n >= 2` whenever `i` is out of range.
fn fold_reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * n - 2;
    let mut j = i % period;
    if j < 0 {
        j += period;
    }
    if j >= n {
        j = period - j;
    }
    j as usize
}

/// Pads an image to its grid-padded dimensions with reflect boundaries.
///
/// The top-left H×W region is a bit-exact copy of the input; the added
/// bottom/right margin mirrors the interior. Rejects patch sides larger
/// than twice the smallest image dimension, where the mirror runs out of
/// content.
pub fn pad_reflect(img: &ImageBuffer, geometry: &GridGeometry) -> Result<ImageBuffer> {
    pad_for_grid(img, geometry, PadMode::Reflect)
}

/// As [`pad_reflect`] but with a selectable pad mode.
pub fn pad_for_grid(
    img: &ImageBuffer,
    geometry: &GridGeometry,
    mode: PadMode,
) -> Result<ImageBuffer> {
    let (h, w, _) = img.dims();
    if geometry.original != (h, w) {
        return Err(SglcError::Geometry(format!(
            "geometry describes {}x{}, image is {h}x{w}",
            geometry.original.0, geometry.original.1
        )));
    }
    if mode == PadMode::Reflect && geometry.patch_side > 2 * h.min(w) {
        return Err(SglcError::PatchSize(format!(
            "patch side {} exceeds twice the smallest image dimension {}",
            geometry.patch_side,
            h.min(w)
        )));
    }
    let (ph, pw) = geometry.padded;
    img.pad_to(ph, pw, mode)
}
