//! Disparity and depth maps: in-memory grids, PFM and `calib.txt` I/O, and
//! the disparity/depth conversion of a rectified stereo rig.

mod calib;
mod grid;
mod pfm;

pub use self::calib::{format_calib, parse_calib, read_calib, read_calibration, write_calib, Calibration};
pub use self::grid::{Depth, DepthGrid, Disparity, DisparityGrid, Grid, SampleKind, Scalar, ScalarGrid};
pub use self::pfm::{
    decode_pfm, encode_pfm, read_pfm, read_pfm_with_header, write_pfm, write_pfm_scaled, Endianness,
    PfmHeader,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pinhole intrinsics of the reference camera plus the stereo-rig terms
/// needed to turn disparity into metric depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Focal lengths in pixels.
    pub fx: f64,
    pub fy: f64,
    /// Principal point in pixels, column and row.
    pub cx: f64,
    pub cy: f64,
    pub baseline_m: f64,
    /// Difference of the principal-point columns of the two cameras.
    pub doffs_px: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, baseline_m: f64, doffs_px: f64) -> Result<Self> {
        let cam = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            baseline_m,
            doffs_px,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.fx, self.fy, self.cx, self.cy, self.baseline_m, self.doffs_px]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidIntrinsics("non-finite parameter".into()));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.baseline_m <= 0.0 {
            return Err(Error::InvalidIntrinsics(format!(
                "baseline must be positive, got {} m",
                self.baseline_m
            )));
        }
        if self.doffs_px < 0.0 {
            return Err(Error::InvalidIntrinsics(format!(
                "doffs must be non-negative, got {} px",
                self.doffs_px
            )));
        }
        Ok(())
    }

    /// Depth in meters for a disparity in pixels, `None` when `d + doffs <= 0`.
    #[inline]
    pub fn depth_from_disparity(&self, disparity: f64) -> Option<f64> {
        let shifted = disparity + self.doffs_px;
        if shifted > 0.0 {
            Some(self.fx * self.baseline_m / shifted)
        } else {
            None
        }
    }

    /// Disparity in pixels for a depth in meters; inverse of
    /// [`depth_from_disparity`](Self::depth_from_disparity).
    #[inline]
    pub fn disparity_from_depth(&self, depth: f64) -> Option<f64> {
        if depth > 0.0 && depth.is_finite() {
            Some(self.fx * self.baseline_m / depth - self.doffs_px)
        } else {
            None
        }
    }
}

/// Converts a disparity map into metric depth, `Z = fx * b / (d + doffs)`.
///
/// Invalid inputs and pixels with `d + doffs <= 0` are invalid in the output.
pub fn disparity_to_depth(disp: &DisparityGrid, cam: &CameraIntrinsics) -> Result<DepthGrid> {
    cam.validate()?;
    let converted = disp.map_valid(|d| cam.depth_from_disparity(d));
    Ok(converted)
}

/// Converts a depth map into disparity, `d = fx * b / Z - doffs`.
///
/// Pixels whose disparity would be negative are invalid in the output.
pub fn depth_to_disparity(depth: &DepthGrid, cam: &CameraIntrinsics) -> Result<DisparityGrid> {
    cam.validate()?;
    Ok(depth.map_valid(|z| cam.disparity_from_depth(z)))
}
