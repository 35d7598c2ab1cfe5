//! Gaussian curvature of depth and disparity maps.
//!
//! The pipeline is: read a disparity or depth map ([`depth_io`]), back-project
//! it into a gridded point cloud ([`projection`]), optionally smooth each 3D
//! component, estimate per-pixel curvature from the fundamental forms
//! ([`curvature`]) and summarise the result with sparsity statistics
//! ([`metrics`]). [`synth`] renders analytic scenes with known curvature and
//! [`stereo_eval`] provides the usual disparity accuracy metrics.
//!
//! Dense per-pixel loops run on the rayon pool when the `parallel` feature is
//! enabled (the default) and on the calling thread otherwise.

pub mod curvature;
pub mod depth_io;
mod error;
pub mod metrics;
mod par;
pub mod projection;
pub mod stereo_eval;
pub mod synth;

pub use crate::curvature::{curvature_field, CurvatureField};
pub use crate::depth_io::{
    CameraIntrinsics, DepthGrid, DisparityGrid, Grid, ScalarGrid,
};
pub use crate::error::{Error, Result};
pub use crate::metrics::{CurvatureHistogram, HistogramSpec, SparsityReport};
pub use crate::projection::{backproject, smooth_surface, SmoothingParams, SurfaceGrid};

/// Whether this build spreads per-pixel work over a thread pool.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
