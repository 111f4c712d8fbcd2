//! Grid patching: the strided-subsampling bijection behind the global stage.
//!
//! Patch `k` takes every (n_h, n_w)-th pixel starting at offset
//! (k / n_w, k % n_w), so each patch is a thumbnail that spans the whole
//! padded image and the N patches together visit every pixel exactly once.
//! The merge is the exact inverse; the round trip is bit-exact.

use rayon::prelude::*;

use crate::buffer::{pad_for_grid, ImageBuffer, PadMode};
use crate::error::{Result, SglcError};
use crate::geometry::GridGeometry;
use crate::processor::{run_processor, PatchProcessor};

/// The N strided patches of one padded image, in ascending `k` order.
#[derive(Debug, Clone)]
pub struct GridPatchSet {
    geometry: GridGeometry,
    patches: Vec<ImageBuffer>,
}

impl GridPatchSet {
    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn patches(&self) -> &[ImageBuffer] {
        &self.patches
    }

    /// Replaces the patch contents, keeping the geometry. Shapes must match.
    pub fn with_patches(geometry: GridGeometry, patches: Vec<ImageBuffer>) -> Result<Self> {
        let set = GridPatchSet { geometry, patches };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        let g = self.geometry.patch_side;
        if self.patches.len() != self.geometry.patch_count {
            return Err(SglcError::Geometry(format!(
                "expected {} patches, got {}",
                self.geometry.patch_count,
                self.patches.len()
            )));
        }
        for (k, p) in self.patches.iter().enumerate() {
            if p.height() != g || p.width() != g {
                return Err(SglcError::Geometry(format!(
                    "patch {k} is {}x{}, expected {g}x{g}",
                    p.height(),
                    p.width()
                )));
            }
        }
        Ok(())
    }
}

/// Splits a padded image into its N strided grid patches.
pub fn grid_split(padded: &ImageBuffer, geometry: GridGeometry) -> Result<GridPatchSet> {
    let (h, w, c) = padded.dims();
    if (h, w) != geometry.padded {
        return Err(SglcError::Geometry(format!(
            "padded image is {h}x{w}, geometry expects {}x{}",
            geometry.padded.0, geometry.padded.1
        )));
    }
    let g = geometry.patch_side;
    let (n_h, n_w) = geometry.divisions;
    let mut patches = Vec::with_capacity(geometry.patch_count);
    for k in 0..geometry.patch_count {
        let (r, col) = geometry.patch_offset(k);
        let mut data = Vec::with_capacity(g * g * c);
        for i in 0..g {
            let y = i * n_h + r;
            for j in 0..g {
                let x = j * n_w + col;
                let base = (y * w + x) * c;
                data.extend_from_slice(&padded.data()[base..base + c]);
            }
        }
        patches.push(ImageBuffer::new(g, g, c, data)?);
    }
    Ok(GridPatchSet { geometry, patches })
}

/// Reassembles the unique padded image the patch set was split from.
pub fn grid_merge(set: &GridPatchSet) -> Result<ImageBuffer> {
    set.validate()?;
    let geometry = set.geometry;
    let (ph, pw) = geometry.padded;
    let (n_h, n_w) = geometry.divisions;
    let c = set.patches[0].channels();
    for (k, p) in set.patches.iter().enumerate() {
        if p.channels() != c {
            return Err(SglcError::Geometry(format!(
                "patch {k} has {} channels, expected {c}",
                p.channels()
            )));
        }
    }
    let mut out = ImageBuffer::zeros(ph, pw, c)?;
    for k in 0..geometry.patch_count {
        let (r, col) = geometry.patch_offset(k);
        let patch = &set.patches[k];
        let g = geometry.patch_side;
        for i in 0..g {
            let y = i * n_h + r;
            for j in 0..g {
                let x = j * n_w + col;
                let dst = out.index(y, x, 0);
                let src = patch.index(i, j, 0);
                out.data_mut()[dst..dst + c].copy_from_slice(&patch.data()[src..src + c]);
            }
        }
    }
    Ok(out)
}

/// The global stage: pad, split into grid patches, run the processor on
/// each patch independently, merge, and crop back to the input size.
///
/// Patch invocations run on the ambient rayon pool; results are
/// position-addressed so scheduling never affects the output.
pub fn gfg_stage(
    img: &ImageBuffer,
    patch_side: usize,
    proc: &dyn PatchProcessor,
    pad_mode: PadMode,
) -> Result<ImageBuffer> {
    let (h, w, _) = img.dims();
    let geometry = GridGeometry::new(h, w, patch_side)?;
    let padded = pad_for_grid(img, &geometry, pad_mode)?;
    let split = grid_split(&padded, geometry)?;
    let processed: Vec<ImageBuffer> = split
        .patches
        .par_iter()
        .enumerate()
        .map(|(k, patch)| {
            run_processor(proc, patch).map_err(|e| SglcError::GridPatch {
                index: k,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let merged = grid_merge(&GridPatchSet {
        geometry,
        patches: processed,
    })?;
    merged.crop(h, w)
}
