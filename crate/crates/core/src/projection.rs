//! Back-projection of depth maps into gridded point clouds, and Gaussian
//! smoothing of those point clouds.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::depth_io::{CameraIntrinsics, DepthGrid};
use crate::error::{Error, Result};
use crate::par;

/// A 3D point per pixel, parametrized by `(u, v) = (column, row)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    width: usize,
    height: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    valid: Vec<bool>,
}

impl SurfaceGrid {
    /// Builds a surface from co-indexed coordinate grids. Pixels with a
    /// non-finite coordinate are demoted to invalid; invalid pixels hold zeros.
    pub fn from_components(
        width: usize,
        height: usize,
        mut x: Vec<f64>,
        mut y: Vec<f64>,
        mut z: Vec<f64>,
        mut valid: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height;
        if [x.len(), y.len(), z.len(), valid.len()].iter().any(|&len| len != n) {
            return Err(Error::ShapeMismatch {
                width,
                height,
                len: x.len(),
            });
        }
        for i in 0..n {
            valid[i] = valid[i] && x[i].is_finite() && y[i].is_finite() && z[i].is_finite();
            if !valid[i] {
                x[i] = 0.0;
                y[i] = 0.0;
                z[i] = 0.0;
            }
        }
        Ok(SurfaceGrid {
            width,
            height,
            x,
            y,
            z,
            valid,
        })
    }

    /// Samples `f(u, v)` on every pixel; `None` marks the pixel invalid.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(f64, f64) -> Option<Vector3<f64>>) -> Self {
        let n = width * height;
        let (mut x, mut y, mut z) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut valid = vec![false; n];
        for v in 0..height {
            for u in 0..width {
                if let Some(p) = f(u as f64, v as f64) {
                    let i = v * width + u;
                    x[i] = p.x;
                    y[i] = p.y;
                    z[i] = p.z;
                    valid[i] = true;
                }
            }
        }
        Self::from_components(width, height, x, y, z, valid).expect("shapes agree by construction")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        u < self.width && v < self.height && self.valid[v * self.width + u]
    }

    /// Point at column `u`, row `v`, ignoring the mask.
    #[inline]
    pub fn point(&self, u: usize, v: usize) -> Vector3<f64> {
        let i = v * self.width + u;
        Vector3::new(self.x[i], self.y[i], self.z[i])
    }

    /// Point at `(u, v)` if valid.
    pub fn get(&self, u: usize, v: usize) -> Option<Vector3<f64>> {
        self.is_valid(u, v).then(|| self.point(u, v))
    }

    /// Applies `f` to every valid point.
    pub fn map_points(&self, f: impl Fn(Vector3<f64>) -> Vector3<f64>) -> Self {
        let mut out = self.clone();
        for i in 0..self.valid.len() {
            if self.valid[i] {
                let p = f(Vector3::new(self.x[i], self.y[i], self.z[i]));
                out.x[i] = p.x;
                out.y[i] = p.y;
                out.z[i] = p.z;
            }
        }
        out
    }
}

/// Inverts the pinhole projection: `X = (x - cx) / fx * d`,
/// `Y = (y - cy) / fy * d`, `Z = d`, with `(x, y)` the pixel column and row.
pub fn backproject(depth: &DepthGrid, cam: &CameraIntrinsics) -> SurfaceGrid {
    let (w, h) = (depth.width(), depth.height());
    let d = depth.values();
    let mut x = vec![0.0; w * h];
    let mut y = vec![0.0; w * h];
    par::for_each_row(&mut x, w, |row, out| {
        for (col, o) in out.iter_mut().enumerate() {
            *o = (col as f64 - cam.cx) / cam.fx * d[row * w + col];
        }
    });
    par::for_each_row(&mut y, w, |row, out| {
        let ry = (row as f64 - cam.cy) / cam.fy;
        for (col, o) in out.iter_mut().enumerate() {
            *o = ry * d[row * w + col];
        }
    });
    SurfaceGrid {
        width: w,
        height: h,
        x,
        y,
        z: d.to_vec(),
        valid: depth.valid().to_vec(),
    }
}

/// Gaussian smoothing parameters. `sigma` is measured in grid steps (pixels),
/// and the kernel is cut at `ceil(truncation * sigma)` pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub sigma: f64,
    pub truncation: u32,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            sigma: 0.0,
            truncation: 3,
        }
    }
}

impl SmoothingParams {
    pub fn new(sigma: f64) -> Result<Self> {
        let p = SmoothingParams {
            sigma,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::param(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if self.truncation < 1 {
            return Err(Error::param("truncation radius must be at least 1 sigma"));
        }
        Ok(())
    }

    pub fn radius(&self) -> usize {
        (self.truncation as f64 * self.sigma).ceil() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.sigma == 0.0
    }
}

/// L1-normalized, truncated 1D Gaussian of length `2 * radius + 1`.
pub fn gaussian_kernel(params: &SmoothingParams) -> Vec<f64> {
    if params.is_identity() {
        return vec![1.0];
    }
    let r = params.radius() as isize;
    let denom = 2.0 * params.sigma * params.sigma;
    let mut k: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / denom).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Smooths X, Y and Z independently with a separable Gaussian over the
/// `(u, v)` grid.
///
/// This is a normalized convolution: invalid pixels get zero weight and the
/// remaining weights are renormalized per output pixel, so every output point
/// is an affine combination of valid input points. Invalid pixels stay
/// invalid.
pub fn smooth_surface(s: &SurfaceGrid, params: &SmoothingParams) -> Result<SurfaceGrid> {
    params.validate()?;
    if params.is_identity() {
        return Ok(s.clone());
    }
    let kernel = gaussian_kernel(params);
    let weight: Vec<f64> = s.valid.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
    let masked = |c: &[f64]| -> Vec<f64> { c.iter().zip(&weight).map(|(a, w)| a * w).collect() };

    let (w, h) = (s.width, s.height);
    let den = convolve_separable(&weight, w, h, &kernel);
    let mut out = s.clone();
    for (src, dst) in [(&s.x, &mut out.x), (&s.y, &mut out.y), (&s.z, &mut out.z)] {
        let num = convolve_separable(&masked(src), w, h, &kernel);
        for i in 0..w * h {
            if s.valid[i] && den[i] > 0.0 {
                dst[i] = num[i] / den[i];
            }
        }
    }
    for (i, &d) in den.iter().enumerate() {
        if out.valid[i] && d.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            out.valid[i] = false;
            out.x[i] = 0.0;
            out.y[i] = 0.0;
            out.z[i] = 0.0;
        }
    }
    Ok(out)
}

/// Diagnostic only: Gaussian smoothing of the raw depth map in image space.
///
/// Depth samples are not uniformly spaced over the surface, so this distorts
/// geometry; it exists to contrast against [`smooth_surface`].
pub fn smooth_depth_image_space(depth: &DepthGrid, params: &SmoothingParams) -> Result<DepthGrid> {
    params.validate()?;
    if params.is_identity() {
        return Ok(depth.clone());
    }
    let kernel = gaussian_kernel(params);
    let (w, h) = (depth.width(), depth.height());
    let weight: Vec<f64> = depth.valid().iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
    let num = convolve_separable(depth.values(), w, h, &kernel);
    let den = convolve_separable(&weight, w, h, &kernel);
    let samples = (0..w * h)
        .map(|i| (depth.valid()[i] && den[i] > 0.0).then(|| num[i] / den[i]))
        .collect();
    DepthGrid::from_options(w, h, samples)
}

/// Zero-padded separable convolution: horizontal pass, then vertical pass.
fn convolve_separable(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = kernel.len() / 2;
    let mut tmp = vec![0.0; w * h];
    par::for_each_row(&mut tmp, w, |y, out| {
        let row = &src[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            let mut acc = 0.0;
            for (j, sample) in row[lo..=hi].iter().enumerate() {
                acc += kernel[lo + j + r - x] * sample;
            }
            *o = acc;
        }
    });
    let mut dst = vec![0.0; w * h];
    par::for_each_row(&mut dst, w, |y, out| {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for yy in lo..=hi {
            let k = kernel[yy + r - y];
            let row = &tmp[yy * w..(yy + 1) * w];
            for (o, s) in out.iter_mut().zip(row) {
                *o += k * s;
            }
        }
    });
    dst
}
