//! PSNR and single-scale SSIM, the quality numbers every run reports.

use crate::buffer::ImageBuffer;
use crate::error::{Result, SglcError};

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

pub fn mse(reference: &ImageBuffer, test: &ImageBuffer) -> Result<f64> {
    check_shapes(reference, test)?;
    let sum: f64 = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.data().len() as f64)
}

/// 10·log10(peak²/MSE); +∞ when the images are identical.
pub fn psnr(reference: &ImageBuffer, test: &ImageBuffer, peak: f64) -> Result<f64> {
    let mse = mse(reference, test)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Single-scale SSIM: 11×11 Gaussian window (σ = 1.5), C1 = (0.01·peak)²,
/// C2 = (0.03·peak)², averaged over valid window positions and channels.
pub fn ssim(reference: &ImageBuffer, test: &ImageBuffer) -> Result<f64> {
    check_shapes(reference, test)?;
    let (h, w, channels) = reference.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(SglcError::InvalidImage(format!(
            "image {h}x{w} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )));
    }
    let peak = 1.0;
    let c1 = (0.01 * peak) * (0.01 * peak);
    let c2 = (0.03 * peak) * (0.03 * peak);
    let kernel = gaussian_kernel();

    let mut channel_mean_sum = 0.0;
    for ch in 0..channels {
        let x = extract_plane(reference, ch);
        let y = extract_plane(test, ch);
        let xx: Vec<f64> = x.iter().map(|&v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|&v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(&a, &b)| a * b).collect();

        let mu_x = valid_gauss(&x, h, w, &kernel);
        let mu_y = valid_gauss(&y, h, w, &kernel);
        let e_xx = valid_gauss(&xx, h, w, &kernel);
        let e_yy = valid_gauss(&yy, h, w, &kernel);
        let e_xy = valid_gauss(&xy, h, w, &kernel);

        let mut sum = 0.0;
        for i in 0..mu_x.len() {
            let mx = mu_x[i];
            let my = mu_y[i];
            let var_x = e_xx[i] - mx * mx;
            let var_y = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            let numerator = (2.0 * mx * my + c1) * (2.0 * cov + c2);
            let denominator = (mx * mx + my * my + c1) * (var_x + var_y + c2);
            sum += numerator / denominator;
        }
        channel_mean_sum += sum / mu_x.len() as f64;
    }
    Ok(channel_mean_sum / channels as f64)
}

fn check_shapes(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if !a.same_shape(b) {
        let (h, w, c) = a.dims();
        let (bh, bw, bc) = b.dims();
        return Err(SglcError::shape_mismatch(
            format!("{h}x{w}x{c}"),
            format!("{bh}x{bw}x{bc}"),
        ));
    }
    Ok(())
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let center = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - center;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn extract_plane(img: &ImageBuffer, channel: usize) -> Vec<f64> {
    let (h, w, c) = img.dims();
    (0..h * w).map(|i| img.data()[i * c + channel]).collect()
}

/// Separable Gaussian over valid positions only: output is
/// (h − 10) × (w − 10).
fn valid_gauss(plane: &[f64], h: usize, w: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let out_w = w - SSIM_WINDOW + 1;
    let out_h = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; h * out_w];
    for y in 0..h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (k, &wk) in kernel.iter().enumerate() {
                acc += wk * plane[y * w + x + k];
            }
            rows[y * out_w + x] = acc;
        }
    }
    let mut out = vec![0.0; out_h * out_w];
    for y in 0..out_h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (k, &wk) in kernel.iter().enumerate() {
                acc += wk * rows[(y + k) * out_w + x];
            }
            out[y * out_w + x] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, h: usize, w: usize, c: usize, lo: f64, hi: f64) -> ImageBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..h * w * c).map(|_| rng.random_range(lo..hi)).collect();
        ImageBuffer::new(h, w, c, data).unwrap()
    }

    /// Naive double-loop SSIM with weighted central moments: the
    /// independent route the fast path is verified against.
    fn ssim_oracle(a: &ImageBuffer, b: &ImageBuffer) -> f64 {
        let (h, w, channels) = a.dims();
        let kernel = gaussian_kernel();
        let c1 = 0.01f64 * 0.01;
        let c2 = 0.03f64 * 0.03;
        let mut total = 0.0;
        for ch in 0..channels {
            let mut sum = 0.0;
            let mut count = 0usize;
            for oy in 0..=h - SSIM_WINDOW {
                for ox in 0..=w - SSIM_WINDOW {
                    let mut mx = 0.0;
                    let mut my = 0.0;
                    for ky in 0..SSIM_WINDOW {
                        for kx in 0..SSIM_WINDOW {
                            let wgt = kernel[ky] * kernel[kx];
                            mx += wgt * a.get(oy + ky, ox + kx, ch);
                            my += wgt * b.get(oy + ky, ox + kx, ch);
                        }
                    }
                    let mut var_x = 0.0;
                    let mut var_y = 0.0;
                    let mut cov = 0.0;
                    for ky in 0..SSIM_WINDOW {
                        for kx in 0..SSIM_WINDOW {
                            let wgt = kernel[ky] * kernel[kx];
                            let dx = a.get(oy + ky, ox + kx, ch) - mx;
                            let dy = b.get(oy + ky, ox + kx, ch) - my;
                            var_x += wgt * dx * dx;
                            var_y += wgt * dy * dy;
                            cov += wgt * dx * dy;
                        }
                    }
                    sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                        / ((mx * mx + my * my + c1) * (var_x + var_y + c2));
                    count += 1;
                }
            }
            total += sum / count as f64;
        }
        total / channels as f64
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let img = random_image(1, 8, 8, 3, 0.0, 1.0);
        assert!(psnr(&img, &img, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn uniform_offset_gives_twenty_db() {
        let reference = random_image(2, 16, 16, 3, 0.0, 0.9);
        let shifted = {
            let data = reference.data().iter().map(|v| v + 0.1).collect();
            ImageBuffer::new(16, 16, 3, data).unwrap()
        };
        let value = psnr(&reference, &shifted, 1.0).unwrap();
        assert!((value - 20.0).abs() < 1e-6, "psnr {value}");
    }

    #[test]
    fn psnr_is_symmetric_and_consistent_with_mse() {
        let a = random_image(3, 12, 12, 1, 0.0, 1.0);
        let b = random_image(4, 12, 12, 1, 0.0, 1.0);
        let ab = psnr(&a, &b, 1.0).unwrap();
        let ba = psnr(&b, &a, 1.0).unwrap();
        assert_eq!(ab, ba);
        let recomputed = 10.0 * (1.0 / mse(&a, &b).unwrap()).log10();
        assert!((ab - recomputed).abs() < 1e-9);
    }

    #[test]
    fn ssim_identical_is_exactly_one() {
        let img = random_image(5, 16, 16, 3, 0.0, 1.0);
        assert_eq!(ssim(&img, &img).unwrap(), 1.0);
    }

    #[test]
    fn ssim_of_inverted_image_is_below_one() {
        let img = random_image(6, 16, 16, 1, 0.0, 1.0);
        let inverted = {
            let data = img.data().iter().map(|v| 1.0 - v).collect();
            ImageBuffer::new(16, 16, 1, data).unwrap()
        };
        assert!(ssim(&img, &inverted).unwrap() < 1.0);
    }

    #[test]
    fn ssim_matches_the_naive_oracle() {
        for seed in 0..20u64 {
            let a = random_image(seed, 16, 16, 3, 0.0, 1.0);
            let b = random_image(seed + 500, 16, 16, 3, 0.0, 1.0);
            let fast = ssim(&a, &b).unwrap();
            let slow = ssim_oracle(&a, &b);
            assert!(
                (fast - slow).abs() < 1e-6,
                "seed {seed}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn ssim_rejects_small_images() {
        let img = random_image(7, 10, 16, 1, 0.0, 1.0);
        assert!(ssim(&img, &img).is_err());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = random_image(8, 16, 16, 1, 0.0, 1.0);
        let b = random_image(8, 16, 17, 1, 0.0, 1.0);
        assert!(psnr(&a, &b, 1.0).is_err());
        assert!(ssim(&a, &b).is_err());
    }
}
