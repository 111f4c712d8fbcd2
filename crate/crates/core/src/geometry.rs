use crate::error::{Result, SglcError};

/// Padding and stride bookkeeping for the grid-patching bijection.
///
/// The padded dimensions round the original ones up to the next multiple
/// of the patch side; divisions are how many patches tile each axis, and
/// every one of the `patch_count` patches is a strided subsample of the
/// padded image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridGeometry {
    /// (H, W) of the source image.
    pub original: (usize, usize),
    /// (H', W'), both multiples of `patch_side`.
    pub padded: (usize, usize),
    /// G, the side of every square patch.
    pub patch_side: usize,
    /// (n_h, n_w) = (H'/G, W'/G); also the sampling strides.
    pub divisions: (usize, usize),
    /// N = n_h * n_w.
    pub patch_count: usize,
}

impl GridGeometry {
    pub fn new(height: usize, width: usize, patch_side: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(SglcError::InvalidImage(format!(
                "zero-sized image {height}x{width}"
            )));
        }
        if patch_side == 0 {
            return Err(SglcError::PatchSize("patch side must be >= 1".into()));
        }
        let padded_h = round_up(height, patch_side);
        let padded_w = round_up(width, patch_side);
        let n_h = padded_h / patch_side;
        let n_w = padded_w / patch_side;
        Ok(GridGeometry {
            original: (height, width),
            padded: (padded_h, padded_w),
            patch_side,
            divisions: (n_h, n_w),
            patch_count: n_h * n_w,
        })
    }

    /// Per-patch sampling offset: patch `k` starts at row `k / n_w`,
    /// column `k % n_w` of the padded image.
    pub fn patch_offset(&self, k: usize) -> (usize, usize) {
        (k / self.divisions.1, k % self.divisions.1)
    }
}

fn round_up(n: usize, step: usize) -> usize {
    if n % step == 0 {
        n
    } else {
        (n / step + 1) * step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hd_image_geometry() {
        // 4000x6000 with 1024-pixel patches.
        let g = GridGeometry::new(4000, 6000, 1024).unwrap();
        assert_eq!(g.padded, (4096, 6144));
        assert_eq!(g.divisions, (4, 6));
        assert_eq!(g.patch_count, 24);
    }

    #[test]
    fn divisible_dimensions_are_unchanged() {
        let g = GridGeometry::new(2048, 2048, 1024).unwrap();
        assert_eq!(g.padded, (2048, 2048));
        assert_eq!(g.patch_count, 4);
    }

    #[test]
    fn rejects_zero_patch_side() {
        assert!(GridGeometry::new(4, 4, 0).is_err());
    }

    #[test]
    fn single_patch_when_side_covers_image() {
        let g = GridGeometry::new(7, 7, 7).unwrap();
        assert_eq!(g.padded, (7, 7));
        assert_eq!(g.patch_count, 1);
        assert_eq!(g.patch_offset(0), (0, 0));
    }

    #[test]
    fn offsets_enumerate_row_major() {
        let g = GridGeometry::new(4, 6, 2).unwrap();
        assert_eq!(g.divisions, (2, 3));
        let offsets: Vec<_> = (0..g.patch_count).map(|k| g.patch_offset(k)).collect();
        assert_eq!(
            offsets,
            vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]
        );
    }
}
