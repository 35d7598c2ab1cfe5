//! Per-pixel Gaussian and principal curvatures of a gridded surface from
//! its first and second fundamental forms.
//!
//! Derivatives are central differences with unit grid step. The step size
//! cancels in `K = (LN - M^2) / (EG - F^2)` (both determinants scale with
//! the fourth power of the step), so no physical spacing is needed.

use nalgebra::Vector3;

use crate::depth_io::ScalarGrid;
use crate::par;
use crate::projection::SurfaceGrid;

/// Below this ratio `|Z_u x Z_v| / (|Z_u| |Z_v|)` the tangent plane is
/// treated as degenerate.
pub const DEGENERATE_TANGENT_RATIO: f64 = 1e-12;

/// Relative floor on `EG - F^2`, measured against `EG`.
pub const METRIC_DET_EPS: f64 = 1e-15;

/// Surface derivatives at a pixel with respect to `u` (column) and `v` (row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub zu: Vector3<f64>,
    pub zv: Vector3<f64>,
    pub zuu: Vector3<f64>,
    pub zuv: Vector3<f64>,
    pub zvv: Vector3<f64>,
}

/// Coefficients of the first (`e`, `f`, `g`) and second (`l`, `m`, `n`)
/// fundamental forms, with the unit normal `Z_u x Z_v / |Z_u x Z_v|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalForms {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    pub normal: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalCurvatures {
    /// Larger principal curvature.
    pub kappa1: f64,
    pub kappa2: f64,
}

/// Central-difference derivatives at `(u, v)`. `None` unless the pixel and
/// all eight neighbours are valid.
pub fn partial_derivatives(s: &SurfaceGrid, u: usize, v: usize) -> Option<Derivatives> {
    if u == 0 || v == 0 || u + 1 >= s.width() || v + 1 >= s.height() {
        return None;
    }
    let w = s.width();
    let valid = s.valid();
    for row in v - 1..=v + 1 {
        if !valid[row * w + u - 1..=row * w + u + 1].iter().all(|&ok| ok) {
            return None;
        }
    }
    let p = |du: isize, dv: isize| s.point((u as isize + du) as usize, (v as isize + dv) as usize);
    let c = p(0, 0);
    let (right, left, down, up) = (p(1, 0), p(-1, 0), p(0, 1), p(0, -1));
    Some(Derivatives {
        zu: (right - left) * 0.5,
        zv: (down - up) * 0.5,
        zuu: right - c * 2.0 + left,
        zvv: down - c * 2.0 + up,
        zuv: (p(1, 1) - p(1, -1) - p(-1, 1) + p(-1, -1)) * 0.25,
    })
}

/// `None` at points where the tangent vectors are (nearly) parallel.
pub fn fundamental_forms(d: &Derivatives) -> Option<FundamentalForms> {
    let cross = d.zu.cross(&d.zv);
    let cross_norm = cross.norm();
    if cross_norm.is_nan() || cross_norm < DEGENERATE_TANGENT_RATIO * d.zu.norm() * d.zv.norm() || cross_norm == 0.0 {
        return None;
    }
    let normal = cross / cross_norm;
    Some(FundamentalForms {
        e: d.zu.dot(&d.zu),
        f: d.zu.dot(&d.zv),
        g: d.zv.dot(&d.zv),
        l: d.zuu.dot(&normal),
        m: d.zuv.dot(&normal),
        n: d.zvv.dot(&normal),
        normal,
    })
}

impl FundamentalForms {
    /// `EG - F^2` if it clears the degeneracy floor.
    fn metric_det(&self) -> Option<f64> {
        let det = self.e * self.g - self.f * self.f;
        (det > METRIC_DET_EPS * self.e * self.g && det > 0.0).then_some(det)
    }
}

/// `K = (LN - M^2) / (EG - F^2)` in inverse squared units of the surface.
pub fn gaussian_curvature(f: &FundamentalForms) -> Option<f64> {
    let det = f.metric_det()?;
    Some((f.l * f.n - f.m * f.m) / det)
}

/// `H = (EN + GL - 2FM) / (2 (EG - F^2))`.
pub fn mean_curvature(f: &FundamentalForms) -> Option<f64> {
    let det = f.metric_det()?;
    Some((f.e * f.n + f.g * f.l - 2.0 * f.f * f.m) / (2.0 * det))
}

/// Eigenvalues of the shape operator, `H +- sqrt(H^2 - K)`.
///
/// The larger-magnitude root is formed directly and the other as `K / root`,
/// so their product reproduces `K` without cancellation.
pub fn principal_curvatures(f: &FundamentalForms) -> Option<PrincipalCurvatures> {
    let k = gaussian_curvature(f)?;
    let h = mean_curvature(f)?;
    Some(principal_from_mean_gaussian(h, k))
}

pub(crate) fn principal_from_mean_gaussian(h: f64, k: f64) -> PrincipalCurvatures {
    let disc = (h * h - k).max(0.0).sqrt();
    let big = if h >= 0.0 { h + disc } else { h - disc };
    let small = if big != 0.0 { k / big } else { 0.0 };
    let (kappa1, kappa2) = if big >= small { (big, small) } else { (small, big) };
    PrincipalCurvatures { kappa1, kappa2 }
}

/// Per-pixel curvature with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    width: usize,
    height: usize,
    k: Vec<f64>,
    kappa1: Vec<f64>,
    kappa2: Vec<f64>,
    valid: Vec<bool>,
}

/// One pixel of a [`CurvatureField`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    pub k: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl CurvatureField {
    pub fn from_samples(width: usize, height: usize, samples: &[Option<CurvatureSample>]) -> Self {
        assert_eq!(samples.len(), width * height, "sample count must match the grid");
        let pick = |f: fn(&CurvatureSample) -> f64| -> Vec<f64> {
            samples.iter().map(|s| s.as_ref().map_or(0.0, f)).collect()
        };
        CurvatureField {
            width,
            height,
            k: pick(|s| s.k),
            kappa1: pick(|s| s.kappa1),
            kappa2: pick(|s| s.kappa2),
            valid: samples.iter().map(Option::is_some).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Gaussian curvature per pixel; invalid pixels hold `0.0`.
    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn kappa1(&self) -> &[f64] {
        &self.kappa1
    }

    pub fn kappa2(&self) -> &[f64] {
        &self.kappa2
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, x: usize, y: usize) -> Option<CurvatureSample> {
        let i = y * self.width + x;
        (x < self.width && y < self.height && self.valid[i]).then(|| CurvatureSample {
            k: self.k[i],
            kappa1: self.kappa1[i],
            kappa2: self.kappa2[i],
        })
    }

    /// Valid K samples, row-major.
    pub fn valid_k(&self) -> Vec<f64> {
        self.k
            .iter()
            .zip(&self.valid)
            .filter_map(|(&k, &ok)| ok.then_some(k))
            .collect()
    }

    /// Valid K samples where `mask` is also set.
    pub fn k_where(&self, mask: &[bool]) -> Vec<f64> {
        (0..self.k.len())
            .filter(|&i| self.valid[i] && mask[i])
            .map(|i| self.k[i])
            .collect()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn k_grid(&self) -> ScalarGrid {
        self.grid_of(&self.k)
    }

    pub fn kappa1_grid(&self) -> ScalarGrid {
        self.grid_of(&self.kappa1)
    }

    pub fn kappa2_grid(&self) -> ScalarGrid {
        self.grid_of(&self.kappa2)
    }

    fn grid_of(&self, values: &[f64]) -> ScalarGrid {
        ScalarGrid::from_parts(self.width, self.height, values.to_vec(), self.valid.clone())
            .expect("field buffers share one shape")
    }
}

/// Curvature at one pixel, or `None` where the stencil is incomplete or the
/// surface is degenerate.
pub fn curvature_at(s: &SurfaceGrid, u: usize, v: usize) -> Option<CurvatureSample> {
    let forms = fundamental_forms(&partial_derivatives(s, u, v)?)?;
    let k = gaussian_curvature(&forms)?;
    let h = mean_curvature(&forms)?;
    if !(k.is_finite() && h.is_finite()) {
        return None;
    }
    let pc = principal_from_mean_gaussian(h, k);
    Some(CurvatureSample {
        k,
        kappa1: pc.kappa1,
        kappa2: pc.kappa2,
    })
}

/// Curvature of every pixel. The one-pixel border and every pixel with an
/// invalid neighbour are invalid; values are never clamped.
pub fn curvature_field(s: &SurfaceGrid) -> CurvatureField {
    let (w, h) = (s.width(), s.height());
    let mut samples: Vec<Option<CurvatureSample>> = vec![None; w * h];
    par::for_each_row(&mut samples, w, |v, row| {
        for (u, out) in row.iter_mut().enumerate() {
            *out = curvature_at(s, u, v);
        }
    });
    CurvatureField::from_samples(w, h, &samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: usize, h: usize, f: impl Fn(f64, f64) -> Vector3<f64>) -> SurfaceGrid {
        SurfaceGrid::from_fn(w, h, |u, v| Some(f(u, v)))
    }

    #[test]
    fn linear_surface_has_zero_second_derivatives() {
        let s = grid(5, 5, |u, v| Vector3::new(0.3 * u, -0.7 * v, 1.5 * u + 0.25 * v));
        let d = partial_derivatives(&s, 2, 2).unwrap();
        assert!(d.zuu.norm() < 1e-15);
        assert!(d.zuv.norm() < 1e-15);
        assert!(d.zvv.norm() < 1e-15);
        assert!((d.zu - Vector3::new(0.3, 0.0, 1.5)).norm() < 1e-15);
    }

    #[test]
    fn second_difference_is_exact_on_quadratics() {
        let s = grid(5, 5, |u, v| Vector3::new(u, v, u * u));
        let d = partial_derivatives(&s, 2, 3).unwrap();
        assert_eq!(d.zuu.z, 2.0);
        assert_eq!(d.zu.z, 4.0);
    }

    #[test]
    fn incomplete_stencil_is_rejected() {
        let mut s = grid(5, 5, |u, v| Vector3::new(u, v, 0.0));
        assert!(partial_derivatives(&s, 0, 2).is_none());
        assert!(partial_derivatives(&s, 2, 4).is_none());
        s = SurfaceGrid::from_fn(5, 5, |u, v| (!(u == 3.0 && v == 3.0)).then(|| Vector3::new(u, v, 0.0)));
        assert!(partial_derivatives(&s, 2, 2).is_none());
        assert!(partial_derivatives(&s, 1, 1).is_some());
    }

    #[test]
    fn flat_orthonormal_plane() {
        let s = grid(3, 3, |u, v| Vector3::new(u, v, 2.0));
        let f = fundamental_forms(&partial_derivatives(&s, 1, 1).unwrap()).unwrap();
        assert_eq!((f.e, f.f, f.g, f.l, f.m, f.n), (1.0, 0.0, 1.0, 0.0, 0.0, 0.0));
        assert_eq!(gaussian_curvature(&f), Some(0.0));
        let pc = principal_curvatures(&f).unwrap();
        assert!(pc.kappa1.abs() < 1e-6 && pc.kappa2.abs() < 1e-6);
    }

    #[test]
    fn degenerate_tangent_plane_is_invalid() {
        let s = grid(3, 3, |u, v| Vector3::new(u + v, u + v, 0.0));
        let d = partial_derivatives(&s, 1, 1).unwrap();
        assert!(fundamental_forms(&d).is_none());
        assert!(curvature_at(&s, 1, 1).is_none());
    }

    #[test]
    fn unit_sphere_near_pole() {
        let h = 1e-3;
        let s = grid(5, 5, |u, v| {
            let (x, y) = ((u - 2.0) * h, (v - 2.0) * h);
            Vector3::new(x, y, -(1.0 - x * x - y * y).sqrt())
        });
        let f = fundamental_forms(&partial_derivatives(&s, 2, 2).unwrap()).unwrap();
        assert!(f.l * f.n - f.m * f.m > 0.0);
        assert!((f.normal.norm() - 1.0).abs() < 1e-12);
        let k = gaussian_curvature(&f).unwrap();
        assert!((k - 1.0).abs() < 1e-4, "K = {k}");
        let pc = principal_curvatures(&f).unwrap();
        assert!((pc.kappa1 - 1.0).abs() < 1e-3 && (pc.kappa2 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn swapping_axes_flips_orientation_only() {
        let f = |x: f64, y: f64| 0.1 * x * x + 0.05 * x * y - 0.2 * y * y;
        let s = grid(5, 5, |u, v| Vector3::new(u, v, f(u, v)));
        let t = grid(5, 5, |u, v| Vector3::new(v, u, f(v, u)));
        let a = fundamental_forms(&partial_derivatives(&s, 2, 1).unwrap()).unwrap();
        let b = fundamental_forms(&partial_derivatives(&t, 1, 2).unwrap()).unwrap();
        assert!((a.normal + b.normal).norm() < 1e-15);
        assert!((a.l + b.n).abs() < 1e-15 && (a.n + b.l).abs() < 1e-15 && (a.m + b.m).abs() < 1e-15);
        assert!((gaussian_curvature(&a).unwrap() - gaussian_curvature(&b).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn saddle_has_negative_curvature() {
        let s = grid(5, 5, |u, v| {
            let (x, y) = ((u - 2.0) * 1e-3, (v - 2.0) * 1e-3);
            Vector3::new(x, y, x * y)
        });
        let k = curvature_at(&s, 2, 2).unwrap().k;
        assert!((k + 1.0).abs() < 1e-5, "K = {k}");
    }

    #[test]
    fn principal_curvatures_reproduce_product() {
        for (h, k) in [(0.5, 0.0), (-2.0, 3.0), (1.0, -4.0), (0.0, 0.0), (3.0, 9.0), (1e3, 1e-9)] {
            let pc = principal_from_mean_gaussian(h, k);
            assert!(pc.kappa1 >= pc.kappa2);
            assert!((pc.kappa1 * pc.kappa2 - k).abs() <= 1e-12 * k.abs().max(1.0));
        }
    }

    #[test]
    fn all_invalid_input_gives_all_invalid_output() {
        let s = SurfaceGrid::from_fn(6, 4, |_, _| None);
        let field = curvature_field(&s);
        assert_eq!(field.valid_count(), 0);
    }

    #[test]
    fn border_is_invalid() {
        let s = grid(6, 5, |u, v| Vector3::new(u, v, 0.01 * u * v));
        let field = curvature_field(&s);
        for v in 0..5 {
            for u in 0..6 {
                let border = u == 0 || v == 0 || u == 5 || v == 4;
                assert_eq!(field.get(u, v).is_some(), !border);
            }
        }
    }
}
