//! Seeded synthetic hazy/clean scene pairs for calibration and testing.
//!
//! Scenes are smooth random color fields with a lattice of near-black
//! "shadow" dots (so the dark-channel prior holds), hazed through the
//! scattering model with a smooth depth map. The same seed always produces
//! the same scene, on any platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::buffer::ImageBuffer;
use crate::dehaze::{synthesize_haze, ScatteringParams};

pub struct SyntheticScene {
    pub clean: ImageBuffer,
    pub hazy: ImageBuffer,
    pub params: ScatteringParams,
}

/// Deterministic scene generator; RGB, at least 16x16.
pub fn synthetic_scene(seed: u64, height: usize, width: usize) -> SyntheticScene {
    assert!(height >= 16 && width >= 16, "scene too small");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Smooth color field: a few random low-frequency cosine waves per channel.
    let mut phases = [[0.0f64; 4]; 3];
    let mut freqs = [[0.0f64; 4]; 3];
    let mut mixes = [[0.0f64; 4]; 3];
    for c in 0..3 {
        for k in 0..4 {
            phases[c][k] = rng.random_range(0.0..std::f64::consts::TAU);
            freqs[c][k] = rng.random_range(0.5..3.0);
            mixes[c][k] = rng.random_range(0.2..1.0);
        }
    }
    let mut clean = ImageBuffer::from_fn(height, width, 3, |y, x, c| {
        let fy = y as f64 / height as f64;
        let fx = x as f64 / width as f64;
        let mut v = 0.0;
        let mut norm = 0.0;
        for k in 0..4 {
            let angle = std::f64::consts::TAU * freqs[c][k] * (fy + fx * (k as f64 + 1.0) * 0.37)
                + phases[c][k];
            v += mixes[c][k] * (0.5 + 0.5 * angle.cos());
            norm += mixes[c][k];
        }
        0.1 + 0.8 * (v / norm)
    })
    .expect("valid dims");

    // Shadow dots every 8 pixels, jittered: 2x2 near-black blocks that give
    // every local neighborhood a genuinely dark sample.
    let spacing = 8;
    for gy in 0..height / spacing {
        for gx in 0..width / spacing {
            let jy = rng.random_range(0..spacing - 1);
            let jx = rng.random_range(0..spacing - 1);
            let y0 = (gy * spacing + jy).min(height - 2);
            let x0 = (gx * spacing + jx).min(width - 2);
            let level = rng.random_range(0.0..0.02);
            for dy in 0..2 {
                for dx in 0..2 {
                    for c in 0..3 {
                        clean.set(y0 + dy, x0 + dx, c, level);
                    }
                }
            }
        }
    }

    // Smooth depth: a ramp plus a gaussian hill, scaled so transmission
    // stays well away from zero.
    let ramp_dir = rng.random_range(0.0..std::f64::consts::TAU);
    let hill_y = rng.random_range(0.2..0.8);
    let hill_x = rng.random_range(0.2..0.8);
    let hill_sigma = rng.random_range(0.15..0.4);
    let depth = ImageBuffer::from_fn(height, width, 1, |y, x, _| {
        let fy = y as f64 / height as f64;
        let fx = x as f64 / width as f64;
        let ramp = 0.5 + 0.5 * (fy * ramp_dir.cos() + fx * ramp_dir.sin());
        let dy = fy - hill_y;
        let dx = fx - hill_x;
        let hill = (-(dy * dy + dx * dx) / (2.0 * hill_sigma * hill_sigma)).exp();
        0.15 + 0.6 * ramp + 0.4 * hill
    })
    .expect("valid dims");

    let beta: f64 = rng.random_range(0.7..1.3);
    let tint: f64 = rng.random_range(-0.05..0.05);
    let base: f64 = rng.random_range(0.78..0.9);
    let atmospheric_light = vec![
        (base + tint).clamp(0.05, 1.0),
        base,
        (base - tint).clamp(0.05, 1.0),
    ];

    let params = ScatteringParams {
        beta,
        atmospheric_light,
        depth_map: depth,
    };
    let hazy = synthesize_haze(&clean, &params).expect("scene dimensions agree");
    SyntheticScene {
        clean,
        hazy,
        params,
    }
}
