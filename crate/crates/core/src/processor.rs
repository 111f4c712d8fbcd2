//! The pluggable per-patch transform both pipeline stages fan work out to.
//!
//! A processor maps an image to an image of identical shape and must be
//! stateless: the same input always yields the same output, so patches can
//! be dispatched to any number of workers without changing the result.

use crate::buffer::ImageBuffer;
use crate::error::{Result, SglcError};

pub trait PatchProcessor: Send + Sync {
    fn name(&self) -> &str;

    /// Side length this processor requires, or `None` to accept any size.
    fn declared_side(&self) -> Option<usize> {
        None
    }

    fn process(&self, patch: &ImageBuffer) -> Result<ImageBuffer>;
}

/// Returns its input unchanged.
pub struct IdentityProcessor;

impl PatchProcessor for IdentityProcessor {
    fn name(&self) -> &str {
        "identity"
    }

    fn process(&self, patch: &ImageBuffer) -> Result<ImageBuffer> {
        Ok(patch.clone())
    }
}

/// Applies a pure per-sample function. Handy for tests and calibration
/// runs: any global intensity map commutes with both tiling schemes.
pub struct SampleMapProcessor {
    name: String,
    map: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl SampleMapProcessor {
    pub fn new(name: impl Into<String>, map: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        SampleMapProcessor {
            name: name.into(),
            map: Box::new(map),
        }
    }
}

impl PatchProcessor for SampleMapProcessor {
    fn name(&self) -> &str {
        &self.name
    }

    fn process(&self, patch: &ImageBuffer) -> Result<ImageBuffer> {
        let (h, w, c) = patch.dims();
        let data = patch.data().iter().map(|&v| (self.map)(v)).collect();
        ImageBuffer::new(h, w, c, data)
    }
}

/// Runs a processor and enforces the shape/finiteness/range contract:
/// output dimensions must equal the input's, samples must be finite, and
/// the result is clamped to `[0, 1]`.
pub(crate) fn run_processor(proc: &dyn PatchProcessor, patch: &ImageBuffer) -> Result<ImageBuffer> {
    if let Some(side) = proc.declared_side() {
        if patch.height() != side || patch.width() != side {
            return Err(SglcError::shape_mismatch(
                format!("{side}x{side} (declared by `{}`)", proc.name()),
                format!("{}x{}", patch.height(), patch.width()),
            ));
        }
    }
    let mut out = proc.process(patch)?;
    if out.dims() != patch.dims() {
        let (h, w, c) = patch.dims();
        let (oh, ow, oc) = out.dims();
        return Err(SglcError::shape_mismatch(
            format!("{h}x{w}x{c}"),
            format!("{oh}x{ow}x{oc} from `{}`", proc.name()),
        ));
    }
    if !out.is_finite() {
        return Err(SglcError::NonFiniteOutput {
            name: proc.name().to_string(),
        });
    }
    out.clamp01();
    Ok(out)
}
