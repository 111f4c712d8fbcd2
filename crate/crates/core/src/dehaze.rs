//! The atmospheric scattering model and a classical dark-channel inversion.
//!
//! Haze forms as I_h(x) = t(x)·I_o(x) + (1 − t(x))·A with transmission
//! t(x) = e^(−β·d(x)). `synthesize_haze` runs the model forward to build
//! test scenes; `DarkChannelDehazer` inverts it from statistics alone, as
//! a trained-model stand-in that needs no weights.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::buffer::ImageBuffer;
use crate::error::{Result, SglcError};
use crate::processor::PatchProcessor;

/// Physical haze parameters: scattering coefficient, airlight color, and
/// per-pixel scene depth.
#[derive(Debug, Clone)]
pub struct ScatteringParams {
    /// β > 0, attenuation per unit depth.
    pub beta: f64,
    /// Per-channel airlight, each component in (0, 1].
    pub atmospheric_light: Vec<f64>,
    /// Single-channel depth map, d(x) >= 0.
    pub depth_map: ImageBuffer,
}

impl ScatteringParams {
    pub fn validate(&self, channels: usize) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(SglcError::Config(format!(
                "beta must be positive and finite, got {}",
                self.beta
            )));
        }
        if self.atmospheric_light.len() != channels {
            return Err(SglcError::Config(format!(
                "atmospheric light has {} components, image has {channels} channels",
                self.atmospheric_light.len()
            )));
        }
        if !self
            .atmospheric_light
            .iter()
            .all(|&a| a > 0.0 && a <= 1.0)
        {
            return Err(SglcError::Config(
                "atmospheric light components must lie in (0, 1]".into(),
            ));
        }
        if self.depth_map.channels() != 1 {
            return Err(SglcError::Config("depth map must be single-channel".into()));
        }
        if self.depth_map.data().iter().any(|&d| d < 0.0) {
            return Err(SglcError::Config("depth must be non-negative".into()));
        }
        Ok(())
    }
}

/// t(x) = e^(−β·d(x)), single channel.
pub fn transmission_map(beta: f64, depth: &ImageBuffer) -> Result<ImageBuffer> {
    let (h, w, _) = depth.dims();
    let data = depth.data().iter().map(|&d| (-beta * d).exp()).collect();
    ImageBuffer::new(h, w, 1, data)
}

/// Runs the scattering model forward: hazy = t·clean + (1 − t)·A.
pub fn synthesize_haze(clean: &ImageBuffer, params: &ScatteringParams) -> Result<ImageBuffer> {
    let (h, w, c) = clean.dims();
    params.validate(c)?;
    if params.depth_map.height() != h || params.depth_map.width() != w {
        return Err(SglcError::shape_mismatch(
            format!("{h}x{w} depth map"),
            format!(
                "{}x{}",
                params.depth_map.height(),
                params.depth_map.width()
            ),
        ));
    }
    let t = transmission_map(params.beta, &params.depth_map)?;
    let mut out = clean.clone();
    for y in 0..h {
        for x in 0..w {
            let tv = t.get(y, x, 0);
            for ch in 0..c {
                let a = params.atmospheric_light[ch];
                let v = tv * clean.get(y, x, ch) + (1.0 - tv) * a;
                out.set(y, x, ch, v.clamp(0.0, 1.0));
            }
        }
    }
    Ok(out)
}

/// Inverts the scattering model with known airlight and transmission:
/// clean = (hazy − A) / max(t, t_floor) + A, clamped to [0, 1].
///
/// This is the exact inverse wherever t >= t_floor; the dehazer calls it
/// with *estimated* A and t.
pub fn recover_with_transmission(
    hazy: &ImageBuffer,
    atmospheric_light: &[f64],
    transmission: &ImageBuffer,
    t_floor: f64,
) -> Result<ImageBuffer> {
    let (h, w, c) = hazy.dims();
    if atmospheric_light.len() != c {
        return Err(SglcError::Config(format!(
            "atmospheric light has {} components, image has {c} channels",
            atmospheric_light.len()
        )));
    }
    if transmission.height() != h || transmission.width() != w || transmission.channels() != 1 {
        return Err(SglcError::shape_mismatch(
            format!("{h}x{w}x1 transmission"),
            format!(
                "{}x{}x{}",
                transmission.height(),
                transmission.width(),
                transmission.channels()
            ),
        ));
    }
    let mut out = hazy.clone();
    for y in 0..h {
        for x in 0..w {
            let t = transmission.get(y, x, 0).max(t_floor);
            for ch in 0..c {
                let a = atmospheric_light[ch];
                let v = (hazy.get(y, x, ch) - a) / t + a;
                out.set(y, x, ch, v.clamp(0.0, 1.0));
            }
        }
    }
    Ok(out)
}

/// Classical dark-channel-prior dehazer.
///
/// Estimates the airlight from the brightest 0.1% of the min-filtered dark
/// channel, the transmission as 1 − ω·minfilter(min_c I/A), and inverts
/// the scattering model with a transmission floor.
pub struct DarkChannelDehazer {
    pub omega: f64,
    pub t_floor: f64,
    pub kernel: usize,
    degenerate_warned: AtomicBool,
}

impl Default for DarkChannelDehazer {
    fn default() -> Self {
        DarkChannelDehazer::new(0.95, 0.1, 15)
    }
}

impl DarkChannelDehazer {
    pub fn new(omega: f64, t_floor: f64, kernel: usize) -> Self {
        DarkChannelDehazer {
            omega,
            t_floor,
            kernel,
            degenerate_warned: AtomicBool::new(false),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(SglcError::Config(format!(
                "omega {} outside [0, 1]",
                self.omega
            )));
        }
        if !(self.t_floor > 0.0 && self.t_floor <= 1.0) {
            return Err(SglcError::Config(format!(
                "transmission floor {} outside (0, 1]",
                self.t_floor
            )));
        }
        if self.kernel == 0 {
            return Err(SglcError::Config("kernel must be >= 1".into()));
        }
        Ok(())
    }

    /// Airlight from the top 0.1% brightest dark-channel pixels: among
    /// those candidates, the brightest input pixels (by channel sum) are
    /// averaged, which keeps the estimate near the true airlight even
    /// when the haziest region has dim scene content behind it.
    fn estimate_atmospheric_light(&self, patch: &ImageBuffer, dark: &[f64]) -> Vec<f64> {
        let (h, w, c) = patch.dims();
        let count = ((h * w) as f64 * 0.001).ceil().max(1.0) as usize;
        let mut order: Vec<usize> = (0..h * w).collect();
        order.sort_by(|&a, &b| dark[b].partial_cmp(&dark[a]).unwrap());
        let mut candidates: Vec<usize> = order[..count].to_vec();
        let intensity = |idx: usize| -> f64 {
            (0..c).map(|ch| patch.data()[idx * c + ch]).sum()
        };
        candidates.sort_by(|&a, &b| intensity(b).partial_cmp(&intensity(a)).unwrap());
        let keep = candidates.len().div_ceil(10);
        let mut light = vec![0.0; c];
        for &idx in candidates.iter().take(keep) {
            for ch in 0..c {
                light[ch] += patch.data()[idx * c + ch];
            }
        }
        for v in &mut light {
            *v /= keep as f64;
        }
        light
    }
}

impl PatchProcessor for DarkChannelDehazer {
    fn name(&self) -> &str {
        "dcp"
    }

    fn process(&self, patch: &ImageBuffer) -> Result<ImageBuffer> {
        self.validate()?;
        let (h, w, c) = patch.dims();
        if c != 3 {
            return Err(SglcError::InvalidImage(
                "dark-channel dehazing requires a 3-channel patch".into(),
            ));
        }

        let min_channel: Vec<f64> = (0..h * w)
            .map(|i| {
                let base = i * 3;
                patch.data()[base]
                    .min(patch.data()[base + 1])
                    .min(patch.data()[base + 2])
            })
            .collect();
        let dark = min_filter_2d(&min_channel, h, w, self.kernel);

        let light = self.estimate_atmospheric_light(patch, &dark);
        if light.iter().any(|&a| a < 1e-6) {
            // A near-black patch makes the airlight estimate meaningless;
            // pass the patch through rather than dividing by ~0.
            if !self.degenerate_warned.swap(true, Ordering::Relaxed) {
                log::warn!("dark-channel airlight estimate degenerate; returning patch unchanged");
            }
            return Ok(patch.clone());
        }

        let normalized_min: Vec<f64> = (0..h * w)
            .map(|i| {
                let base = i * 3;
                (0..3)
                    .map(|ch| patch.data()[base + ch] / light[ch])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let filtered = min_filter_2d(&normalized_min, h, w, self.kernel);
        let transmission: Vec<f64> = filtered.iter().map(|&v| 1.0 - self.omega * v).collect();
        let t_map = ImageBuffer::new(h, w, 1, transmission)?;

        recover_with_transmission(patch, &light, &t_map, self.t_floor)
    }
}

/// Separable 2-D sliding minimum with a clamped window of `kernel` samples
/// per axis (van Herk / Gil-Werman, O(n) regardless of kernel size).
pub fn min_filter_2d(values: &[f64], height: usize, width: usize, kernel: usize) -> Vec<f64> {
    assert_eq!(values.len(), height * width);
    let mut rows = vec![0.0; height * width];
    let mut row_buf = Vec::with_capacity(width);
    for y in 0..height {
        row_buf.clear();
        row_buf.extend_from_slice(&values[y * width..(y + 1) * width]);
        let filtered = min_filter_1d(&row_buf, kernel);
        rows[y * width..(y + 1) * width].copy_from_slice(&filtered);
    }
    let mut out = vec![0.0; height * width];
    let mut col_buf = Vec::with_capacity(height);
    for x in 0..width {
        col_buf.clear();
        col_buf.extend((0..height).map(|y| rows[y * width + x]));
        let filtered = min_filter_1d(&col_buf, kernel);
        for y in 0..height {
            out[y * width + x] = filtered[y];
        }
    }
    out
}

fn min_filter_1d(input: &[f64], kernel: usize) -> Vec<f64> {
    let n = input.len();
    if n == 0 || kernel <= 1 {
        return input.to_vec();
    }
    // window for index i: [i - before, i + after], clamped to bounds
    let before = (kernel - 1) / 2;
    let after = kernel / 2;
    let mut out = vec![0.0; n];
    let mut deque: VecDeque<usize> = VecDeque::new();
    for i in 0..n + before {
        if i < n {
            while let Some(&back) = deque.back() {
                if input[back] >= input[i] {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(i);
        }
        if i >= before {
            let center = i - before;
            while let Some(&front) = deque.front() {
                if front + after < center {
                    deque.pop_front();
                } else {
                    break;
                }
            }
            out[center] = input[*deque.front().unwrap()];
        }
    }
    out
}
