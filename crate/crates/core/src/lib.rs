//! Two-stage high-resolution image restoration around pluggable
//! per-patch processors.
//!
//! The global stage tiles an image into strided grid patches — each one a
//! thumbnail spanning the whole scene — processes them independently, and
//! reassembles them through the exact inverse of the split. The local
//! stage then refines the result on contiguous windows; its overlapping-
//! patch smoother blends spline-weighted, dihedral-augmented window
//! predictions to suppress tile seams. Around the two stages sit a
//! classical dark-channel dehazer, an external-process bridge for trained
//! models, the composite pixel + Laplacian-pyramid loss with its analytic
//! gradient, PSNR/SSIM metrics, and a self-supervised corruption data
//! generator.

pub mod buffer;
pub mod config;
pub mod dehaze;
pub mod dihedral;
pub mod error;
pub mod export;
pub mod external;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod pipeline;
pub mod processor;
pub mod pyramid;
pub mod ssl;
pub mod synthetic;
pub mod tensor;
pub mod window;

pub use buffer::{pad_for_grid, pad_reflect, ImageBuffer, PadMode};
pub use config::{PipelineConfig, ProcessorSpec, StageOrder};
pub use dehaze::{
    recover_with_transmission, synthesize_haze, transmission_map, DarkChannelDehazer,
    ScatteringParams,
};
pub use dihedral::{apply_dihedral, DihedralTransform};
pub use error::{Result, SglcError};
pub use export::{export_em_data, EmManifest, EmPatchRecord};
pub use external::ExternalProcessor;
pub use geometry::GridGeometry;
pub use grid::{gfg_stage, grid_merge, grid_split, GridPatchSet};
pub use io::{read_image, write_image, write_image_depth, BitDepth};
pub use loss::{sglc_loss, sglc_loss_grad, LossOptions, LossValue, DEFAULT_EPSILON};
pub use metrics::{mse, psnr, ssim};
pub use pipeline::{
    resolve_processor, run_pipeline, with_worker_pool, RunRecord, RunReport, StageTiming,
};
pub use processor::{IdentityProcessor, PatchProcessor, SampleMapProcessor};
pub use pyramid::{build_pyramid, max_depth_for, LaplacianPyramid};
pub use ssl::{corrupt, generate_corpus, CorpusManifest, CorpusRecord, CorruptionSpec, Square};
pub use synthetic::{synthetic_scene, SyntheticScene};
pub use tensor::{read_tensor, tensor_byte_len, write_tensor};
pub use window::{
    lfe_stage, lfe_stage_with, mops_merge, spline_profile, window_split, LfeOptions, WindowPlan,
};
