//! Laplacian pyramid with exact reconstruction and a true adjoint.
//!
//! Burt–Adelson construction: G_0 is the image, G_{l+1} = down(blur(G_l)),
//! band L_l = G_l − up(G_{l+1}), and the final level is the low-pass
//! residual G_depth. The blur is the separable binomial [1,4,6,4,1]/16 with
//! reflect boundaries; upsampling interleaves zeros and blurs with the
//! doubled kernel. Because each band stores exactly what reconstruction
//! adds back, collapsing reproduces the source to rounding error.

use crate::buffer::ImageBuffer;
use crate::error::{Result, SglcError};

const KERNEL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
const KERNEL2: [f64; 5] = [1.0 / 8.0, 4.0 / 8.0, 6.0 / 8.0, 4.0 / 8.0, 1.0 / 8.0];

#[derive(Debug, Clone)]
pub struct LaplacianPyramid {
    /// `depth` band-pass levels followed by the low-pass residual.
    levels: Vec<ImageBuffer>,
    depth: usize,
}

impl LaplacianPyramid {
    /// Band levels first, residual last; `levels().len() == depth() + 1`.
    pub fn levels(&self) -> &[ImageBuffer] {
        &self.levels
    }

    /// Number of downsampling steps.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Rebuilds the source image from the levels.
    pub fn collapse(&self) -> Result<ImageBuffer> {
        let mut current = self.levels[self.depth].clone();
        for level in self.levels[..self.depth].iter().rev() {
            let up = upsample(&current, level.height(), level.width());
            current = add(level, &up)?;
        }
        Ok(current)
    }
}

/// Deepest pyramid the image supports: min dimension >= 2^(depth − 1).
pub fn max_depth_for(height: usize, width: usize) -> usize {
    let min_dim = height.min(width);
    let mut depth = 1;
    while 1usize << depth.min(60) <= min_dim {
        depth += 1;
    }
    depth
}

pub fn build_pyramid(img: &ImageBuffer, depth: usize) -> Result<LaplacianPyramid> {
    if depth < 1 {
        return Err(SglcError::Config("pyramid depth must be >= 1".into()));
    }
    let min_dim = img.height().min(img.width());
    if depth > 1 && min_dim < (1usize << (depth - 1)) {
        return Err(SglcError::Config(format!(
            "image {}x{} too small for pyramid depth {depth}",
            img.height(),
            img.width()
        )));
    }
    let mut levels = Vec::with_capacity(depth + 1);
    let mut current = img.clone();
    for _ in 0..depth {
        let next = downsample(&blur(&current, &KERNEL));
        let up = upsample(&next, current.height(), current.width());
        levels.push(sub(&current, &up)?);
        current = next;
    }
    levels.push(current);
    Ok(LaplacianPyramid { levels, depth })
}

/// Adjoint of the pyramid operator: maps per-level cotangents back to
/// image space, so that <pyramid(x), y> == <x, adjoint(y)>.
pub fn pyramid_adjoint(cotangents: &[ImageBuffer], depth: usize) -> Result<ImageBuffer> {
    if cotangents.len() != depth + 1 {
        return Err(SglcError::Config(format!(
            "expected {} cotangent levels, got {}",
            depth + 1,
            cotangents.len()
        )));
    }
    // Walk the construction backwards, accumulating the gradient wrt each
    // gaussian level. A band L_l = g_l − up(g_{l+1}) sends y_l to g_l and
    // −upᵀ(y_l) to g_{l+1}; a step g_{l+1} = down(blur(g_l)) sends its
    // accumulated gradient through blurᵀ(downᵀ(·)).
    let mut acc = cotangents[depth].clone();
    for l in (0..depth).rev() {
        let y_l = &cotangents[l];
        let down_contrib = upsample_adjoint(y_l, acc.height(), acc.width());
        let bar_next = sub(&acc, &down_contrib)?;
        let expanded = zero_insert(&bar_next, y_l.height(), y_l.width());
        acc = add(y_l, &blur_adjoint(&expanded, &KERNEL))?;
    }
    Ok(acc)
}

fn add(a: &ImageBuffer, b: &ImageBuffer) -> Result<ImageBuffer> {
    binary(a, b, |x, y| x + y)
}

fn sub(a: &ImageBuffer, b: &ImageBuffer) -> Result<ImageBuffer> {
    binary(a, b, |x, y| x - y)
}

fn binary(a: &ImageBuffer, b: &ImageBuffer, f: impl Fn(f64, f64) -> f64) -> Result<ImageBuffer> {
    if !a.same_shape(b) {
        let (h, w, c) = a.dims();
        let (bh, bw, bc) = b.dims();
        return Err(SglcError::shape_mismatch(
            format!("{h}x{w}x{c}"),
            format!("{bh}x{bw}x{bc}"),
        ));
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y))
        .collect();
    let (h, w, c) = a.dims();
    ImageBuffer::new(h, w, c, data)
}

fn fold(i: isize, n: usize) -> usize {
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

/// Separable convolution with reflect boundaries.
fn blur(img: &ImageBuffer, kernel: &[f64; 5]) -> ImageBuffer {
    conv_cols(&conv_rows(img, kernel), kernel)
}

fn conv_rows(img: &ImageBuffer, kernel: &[f64; 5]) -> ImageBuffer {
    let (h, w, c) = img.dims();
    let mut out = vec![0.0; h * w * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, &wk) in kernel.iter().enumerate() {
                    let sx = fold(x as isize + k as isize - 2, w);
                    acc += wk * img.data()[(y * w + sx) * c + ch];
                }
                out[(y * w + x) * c + ch] = acc;
            }
        }
    }
    ImageBuffer::new(h, w, c, out).expect("same shape")
}

fn conv_cols(img: &ImageBuffer, kernel: &[f64; 5]) -> ImageBuffer {
    let (h, w, c) = img.dims();
    let mut out = vec![0.0; h * w * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, &wk) in kernel.iter().enumerate() {
                    let sy = fold(y as isize + k as isize - 2, h);
                    acc += wk * img.data()[(sy * w + x) * c + ch];
                }
                out[(y * w + x) * c + ch] = acc;
            }
        }
    }
    ImageBuffer::new(h, w, c, out).expect("same shape")
}

/// Adjoint of [`blur`]: scatter with the same taps through the same folds.
fn blur_adjoint(img: &ImageBuffer, kernel: &[f64; 5]) -> ImageBuffer {
    conv_cols_adjoint(&conv_rows_adjoint(img, kernel), kernel)
}

fn conv_rows_adjoint(img: &ImageBuffer, kernel: &[f64; 5]) -> ImageBuffer {
    let (h, w, c) = img.dims();
    let mut out = vec![0.0; h * w * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let v = img.data()[(y * w + x) * c + ch];
                for (k, &wk) in kernel.iter().enumerate() {
                    let sx = fold(x as isize + k as isize - 2, w);
                    out[(y * w + sx) * c + ch] += wk * v;
                }
            }
        }
    }
    ImageBuffer::new(h, w, c, out).expect("same shape")
}

fn conv_cols_adjoint(img: &ImageBuffer, kernel: &[f64; 5]) -> ImageBuffer {
    let (h, w, c) = img.dims();
    let mut out = vec![0.0; h * w * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let v = img.data()[(y * w + x) * c + ch];
                for (k, &wk) in kernel.iter().enumerate() {
                    let sy = fold(y as isize + k as isize - 2, h);
                    out[(sy * w + x) * c + ch] += wk * v;
                }
            }
        }
    }
    ImageBuffer::new(h, w, c, out).expect("same shape")
}

/// Keeps even-indexed rows and columns: ceil-halved dimensions.
fn downsample(img: &ImageBuffer) -> ImageBuffer {
    let (h, w, c) = img.dims();
    let oh = h.div_ceil(2);
    let ow = w.div_ceil(2);
    let mut data = Vec::with_capacity(oh * ow * c);
    for y in 0..oh {
        for x in 0..ow {
            let base = (2 * y * w + 2 * x) * c;
            data.extend_from_slice(&img.data()[base..base + c]);
        }
    }
    ImageBuffer::new(oh, ow, c, data).expect("downsample dims")
}

/// Zero-insertion to the target size, then blur with the doubled kernel.
/// A size-1 axis inserts no zeros, so it keeps the unit-sum kernel.
fn upsample(img: &ImageBuffer, target_h: usize, target_w: usize) -> ImageBuffer {
    let z = zero_insert(img, target_h, target_w);
    let row_kernel = if target_w >= 2 { &KERNEL2 } else { &KERNEL };
    let col_kernel = if target_h >= 2 { &KERNEL2 } else { &KERNEL };
    conv_cols(&conv_rows(&z, row_kernel), col_kernel)
}

/// Adjoint of [`upsample`]: blur-adjoint, then take even samples.
fn upsample_adjoint(img: &ImageBuffer, source_h: usize, source_w: usize) -> ImageBuffer {
    debug_assert_eq!(source_h, img.height().div_ceil(2));
    debug_assert_eq!(source_w, img.width().div_ceil(2));
    let row_kernel = if img.width() >= 2 { &KERNEL2 } else { &KERNEL };
    let col_kernel = if img.height() >= 2 { &KERNEL2 } else { &KERNEL };
    downsample(&conv_rows_adjoint(
        &conv_cols_adjoint(img, col_kernel),
        row_kernel,
    ))
}

fn zero_insert(img: &ImageBuffer, target_h: usize, target_w: usize) -> ImageBuffer {
    let (h, w, c) = img.dims();
    debug_assert_eq!(h, target_h.div_ceil(2));
    debug_assert_eq!(w, target_w.div_ceil(2));
    let mut out = ImageBuffer::zeros(target_h, target_w, c).expect("target dims");
    for y in 0..h {
        for x in 0..w {
            let dst = (2 * y * target_w + 2 * x) * c;
            let src = (y * w + x) * c;
            out.data_mut()[dst..dst + c].copy_from_slice(&img.data()[src..src + c]);
        }
    }
    out
}
