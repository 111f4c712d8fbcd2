//! The 8 symmetries of a square (group D4), used as test-time augmentation.
//!
//! A transform first mirrors horizontally (when `mirrored`), then rotates
//! counter-clockwise by `rotation` quarter turns. Rotation direction is a
//! convention; it only has to stay consistent with [`DihedralTransform::inverse`].

use crate::buffer::ImageBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DihedralTransform {
    /// Quarter turns counter-clockwise, 0..=3.
    rotation: u8,
    /// Horizontal mirror applied before the rotation.
    mirrored: bool,
}

impl DihedralTransform {
    pub const IDENTITY: DihedralTransform = DihedralTransform {
        rotation: 0,
        mirrored: false,
    };

    /// All 8 group elements, identity first.
    pub const ALL: [DihedralTransform; 8] = [
        DihedralTransform::make(0, false),
        DihedralTransform::make(1, false),
        DihedralTransform::make(2, false),
        DihedralTransform::make(3, false),
        DihedralTransform::make(0, true),
        DihedralTransform::make(1, true),
        DihedralTransform::make(2, true),
        DihedralTransform::make(3, true),
    ];

    const fn make(rotation: u8, mirrored: bool) -> Self {
        DihedralTransform { rotation, mirrored }
    }

    pub fn new(rotation: u8, mirrored: bool) -> Self {
        DihedralTransform {
            rotation: rotation % 4,
            mirrored,
        }
    }

    pub fn rotation(&self) -> u8 {
        self.rotation
    }

    pub fn mirrored(&self) -> bool {
        self.mirrored
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// The unique element that undoes this one. Pure rotations invert to
    /// the opposite rotation; every mirrored element is an involution.
    pub fn inverse(&self) -> DihedralTransform {
        if self.mirrored {
            *self
        } else {
            DihedralTransform::new((4 - self.rotation) % 4, false)
        }
    }

    /// Group composition: `self.compose(first)` applies `first`, then `self`.
    pub fn compose(&self, first: DihedralTransform) -> DihedralTransform {
        if self.mirrored {
            DihedralTransform::new((4 + self.rotation - first.rotation) % 4, !first.mirrored)
        } else {
            DihedralTransform::new((self.rotation + first.rotation) % 4, first.mirrored)
        }
    }

    /// Canonical token used in configs: `r0`, `r90`, `r180`, `r270`,
    /// with an `m` suffix for the mirrored variants.
    pub fn token(&self) -> String {
        let deg = u32::from(self.rotation) * 90;
        if self.mirrored {
            format!("r{deg}m")
        } else {
            format!("r{deg}")
        }
    }

    pub fn parse_token(tok: &str) -> Option<DihedralTransform> {
        let (body, mirrored) = match tok.strip_suffix('m') {
            Some(body) => (body, true),
            None => (tok, false),
        };
        let deg: u32 = body.strip_prefix('r')?.parse().ok()?;
        if deg % 90 != 0 || deg >= 360 {
            return None;
        }
        Some(DihedralTransform::new((deg / 90) as u8, mirrored))
    }
}

/// Applies a dihedral transform; dimensions swap for odd quarter turns.
pub fn apply_dihedral(img: &ImageBuffer, t: DihedralTransform) -> ImageBuffer {
    let mirrored = if t.mirrored { mirror_h(img) } else { img.clone() };
    match t.rotation {
        0 => mirrored,
        1 => rotate90_ccw(&mirrored),
        2 => rotate180(&mirrored),
        3 => rotate270_ccw(&mirrored),
        _ => unreachable!(),
    }
}

fn mirror_h(img: &ImageBuffer) -> ImageBuffer {
    let (h, w, c) = img.dims();
    remap(img, h, w, |y, x| (y, w - 1 - x), c)
}

fn rotate90_ccw(img: &ImageBuffer) -> ImageBuffer {
    let (h, w, c) = img.dims();
    remap(img, w, h, |y, x| (x, w - 1 - y), c)
}

fn rotate180(img: &ImageBuffer) -> ImageBuffer {
    let (h, w, c) = img.dims();
    remap(img, h, w, |y, x| (h - 1 - y, w - 1 - x), c)
}

fn rotate270_ccw(img: &ImageBuffer) -> ImageBuffer {
    let (h, w, c) = img.dims();
    remap(img, w, h, |y, x| (h - 1 - x, y), c)
}

fn remap(
    img: &ImageBuffer,
    out_h: usize,
    out_w: usize,
    src: impl Fn(usize, usize) -> (usize, usize),
    channels: usize,
) -> ImageBuffer {
    let mut data = Vec::with_capacity(out_h * out_w * channels);
    for y in 0..out_h {
        for x in 0..out_w {
            let (sy, sx) = src(y, x);
            let base = img.index(sy, sx, 0);
            data.extend_from_slice(&img.data()[base..base + channels]);
        }
    }
    ImageBuffer::new(out_h, out_w, channels, data).expect("remap preserves sample count")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn marker(h: usize, w: usize) -> ImageBuffer {
        ImageBuffer::from_fn(h, w, 1, |y, x, _| (y * w + x) as f64).unwrap()
    }

    #[test]
    fn identity_is_bit_exact() {
        let img = marker(3, 5);
        assert_eq!(apply_dihedral(&img, DihedralTransform::IDENTITY), img);
    }

    #[test]
    fn quarter_turn_ccw_2x2() {
        // [[a, b], [c, d]] rotated 90 degrees CCW becomes [[b, d], [a, c]].
        let img = ImageBuffer::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let rot = apply_dihedral(&img, DihedralTransform::new(1, false));
        assert_eq!(rot.data(), &[2.0, 4.0, 1.0, 3.0]);
    }

    #[test]
    fn dims_swap_on_odd_turns() {
        let img = marker(3, 5);
        let rot = apply_dihedral(&img, DihedralTransform::new(1, false));
        assert_eq!(rot.dims(), (5, 3, 1));
        let rot3 = apply_dihedral(&img, DihedralTransform::new(3, false));
        assert_eq!(rot3.dims(), (5, 3, 1));
    }

    #[test]
    fn every_transform_inverts() {
        let img = marker(3, 5);
        for t in DihedralTransform::ALL {
            let back = apply_dihedral(&apply_dihedral(&img, t), t.inverse());
            assert_eq!(back, img, "inverse failed for {:?}", t);
        }
    }

    #[test]
    fn composition_table_is_closed_and_consistent() {
        // Exhaustive 8x8 check on a marker image: applying t1 then t2 must
        // equal applying compose(t2, t1), and the result stays in the group.
        let img = marker(3, 5);
        for t1 in DihedralTransform::ALL {
            for t2 in DihedralTransform::ALL {
                let sequential = apply_dihedral(&apply_dihedral(&img, t1), t2);
                let composed = t2.compose(t1);
                assert!(DihedralTransform::ALL.contains(&composed));
                assert_eq!(
                    sequential,
                    apply_dihedral(&img, composed),
                    "compose({:?}, {:?})",
                    t2,
                    t1
                );
            }
        }
    }

    #[test]
    fn all_eight_are_distinct() {
        let img = marker(3, 5);
        let outputs: Vec<_> = DihedralTransform::ALL
            .iter()
            .map(|&t| apply_dihedral(&img, t))
            .collect();
        for i in 0..8 {
            for j in i + 1..8 {
                assert_ne!(outputs[i], outputs[j], "transforms {i} and {j} collide");
            }
        }
    }

    #[test]
    fn tokens_round_trip() {
        for t in DihedralTransform::ALL {
            assert_eq!(DihedralTransform::parse_token(&t.token()), Some(t));
        }
        assert_eq!(DihedralTransform::parse_token("r45"), None);
        assert_eq!(DihedralTransform::parse_token("x90"), None);
    }
}
