//! Raw tensor exchange format for the external-process bridge.
//!
//! Layout, bit-exact: magic `SGLC` (4 bytes), then height, width and
//! channels as 32-bit little-endian unsigned integers, then
//! height·width·channels IEEE-754 32-bit little-endian floats, row-major
//! and channel-interleaved. No padding, no trailer.

use std::io::{Read, Write};
use std::path::Path;

use crate::buffer::ImageBuffer;
use crate::error::{Result, SglcError};

pub const TENSOR_MAGIC: [u8; 4] = *b"SGLC";
pub const TENSOR_HEADER_LEN: u64 = 16;

/// Exact file size for a tensor of the given dimensions.
pub fn tensor_byte_len(height: usize, width: usize, channels: usize) -> u64 {
    TENSOR_HEADER_LEN + (height as u64) * (width as u64) * (channels as u64) * 4
}

pub fn write_tensor(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (h, w, c) = img.dims();
    let mut bytes = Vec::with_capacity(tensor_byte_len(h, w, c) as usize);
    bytes.extend_from_slice(&TENSOR_MAGIC);
    bytes.extend_from_slice(&(h as u32).to_le_bytes());
    bytes.extend_from_slice(&(w as u32).to_le_bytes());
    bytes.extend_from_slice(&(c as u32).to_le_bytes());
    for &v in img.data() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| SglcError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    file.write_all(&bytes).map_err(|e| SglcError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|e| SglcError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| SglcError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_tensor(&bytes)
}

pub fn parse_tensor(bytes: &[u8]) -> Result<ImageBuffer> {
    if bytes.len() < TENSOR_HEADER_LEN as usize {
        return Err(SglcError::MalformedTensor(format!(
            "file is {} bytes, shorter than the {TENSOR_HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if bytes[..4] != TENSOR_MAGIC {
        return Err(SglcError::MalformedTensor(format!(
            "bad magic {:02x?}",
            &bytes[..4]
        )));
    }
    let h = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let c = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if h == 0 || w == 0 || (c != 1 && c != 3) {
        return Err(SglcError::MalformedTensor(format!(
            "invalid dimensions {h}x{w}x{c}"
        )));
    }
    let samples = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(c))
        .filter(|&n| n <= (1 << 31))
        .ok_or_else(|| SglcError::MalformedTensor(format!("dimensions {h}x{w}x{c} overflow")))?;
    let expected = TENSOR_HEADER_LEN as usize + samples * 4;
    if bytes.len() != expected {
        return Err(SglcError::MalformedTensor(format!(
            "expected {expected} bytes for {h}x{w}x{c}, found {}",
            bytes.len()
        )));
    }
    let mut data = Vec::with_capacity(samples);
    for chunk in bytes[16..].chunks_exact(4) {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(SglcError::MalformedTensor("non-finite sample".into()));
        }
        data.push(v as f64);
    }
    ImageBuffer::new(h, w, c, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Buffers whose samples are exactly representable as f32, so the
    /// f64 -> f32 -> f64 trip through the format is bit-exact.
    fn f32_exact_buffer(h: usize, w: usize, c: usize) -> ImageBuffer {
        ImageBuffer::from_fn(h, w, c, |y, x, ch| {
            f64::from(((y * w * c + x * c + ch) % 256) as f32 / 255.0f32)
        })
        .unwrap()
    }

    #[test]
    fn sizes_are_exact() {
        assert_eq!(tensor_byte_len(1024, 1024, 3), 12_582_928);
        assert_eq!(tensor_byte_len(1, 1, 1), 20);
    }

    #[test]
    fn round_trip_is_bit_exact_for_f32_samples() {
        let dir = tempfile::tempdir().unwrap();
        let img = f32_exact_buffer(9, 13, 3);
        let path = dir.path().join("t.sglct");
        write_tensor(&img, &path).unwrap();
        assert_eq!(
            std::fs::metadata(&path).unwrap().len(),
            tensor_byte_len(9, 13, 3)
        );
        let back = read_tensor(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        // bad magic
        let mut bytes = vec![0u8; 20];
        bytes[..4].copy_from_slice(b"NOPE");
        assert!(matches!(
            parse_tensor(&bytes),
            Err(SglcError::MalformedTensor(_))
        ));
        // truncated header
        assert!(parse_tensor(&[0u8; 10]).is_err());
        // payload length mismatch
        let img = f32_exact_buffer(2, 2, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.sglct");
        write_tensor(&img, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.pop();
        assert!(matches!(
            parse_tensor(&bytes),
            Err(SglcError::MalformedTensor(_))
        ));
        // trailing garbage
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.push(0);
        assert!(parse_tensor(&bytes).is_err());
        // bad channel count
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[12..16].copy_from_slice(&2u32.to_le_bytes());
        assert!(parse_tensor(&bytes).is_err());
        // non-finite sample
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            parse_tensor(&bytes),
            Err(SglcError::MalformedTensor(_))
        ));
    }
}
