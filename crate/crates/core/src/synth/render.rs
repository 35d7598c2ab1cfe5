//! Exact ray casting of scene primitives.

use nalgebra::{Matrix3, Vector3};

use super::{Camera, Primitive, SceneSpec};
use crate::curvature::{CurvatureField, CurvatureSample};
use crate::depth_io::{depth_to_disparity, DepthGrid, DisparityGrid};
use crate::error::Result;
use crate::par;

/// Label of pixels whose ray hits nothing.
pub const NO_HIT: u32 = u32::MAX;

const T_MIN: f64 = 1e-9;

/// Primitive with everything the intersection routines need precomputed.
enum Prepared {
    Plane {
        point: Vector3<f64>,
        normal: Vector3<f64>,
    },
    Box {
        center: Vector3<f64>,
        half: Vector3<f64>,
        // world -> box frame
        to_local: Matrix3<f64>,
    },
    Cylinder {
        center: Vector3<f64>,
        axis: Vector3<f64>,
        radius: f64,
        half_height: f64,
    },
    Sphere {
        center: Vector3<f64>,
        radius: f64,
    },
}

impl Prepared {
    fn new(p: &Primitive) -> Self {
        match *p {
            Primitive::Plane { point, normal } => Prepared::Plane {
                point: point.into(),
                normal: Vector3::from(normal).normalize(),
            },
            Primitive::Box {
                center,
                half_extents,
                yaw_deg,
            } => {
                let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::y_axis(), yaw_deg.to_radians());
                Prepared::Box {
                    center: center.into(),
                    half: half_extents.into(),
                    to_local: rot.matrix().transpose(),
                }
            }
            Primitive::Cylinder {
                center,
                axis,
                radius,
                half_height,
            } => Prepared::Cylinder {
                center: center.into(),
                axis: Vector3::from(axis).normalize(),
                radius,
                half_height,
            },
            Primitive::Sphere { center, radius } => Prepared::Sphere {
                center: center.into(),
                radius,
            },
        }
    }

    /// Nearest intersection `(t, face)` with `t > T_MIN`, where the hit point
    /// is `origin + t * dir`.
    fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, u32)> {
        match self {
            Prepared::Plane { point, normal } => {
                let denom = dir.dot(normal);
                if denom == 0.0 {
                    return None;
                }
                let t = (point - origin).dot(normal) / denom;
                (t > T_MIN).then_some((t, 0))
            }
            Prepared::Sphere { center, radius } => {
                let oc = origin - center;
                let a = dir.dot(dir);
                let b = oc.dot(dir);
                let c = oc.dot(&oc) - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let near = (-b - sq) / a;
                let far = (-b + sq) / a;
                if near > T_MIN {
                    Some((near, 0))
                } else if far > T_MIN {
                    Some((far, 0))
                } else {
                    None
                }
            }
            Prepared::Box { center, half, to_local } => {
                let o = to_local * (origin - center);
                let d = to_local * dir;
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                let (mut near_face, mut far_face) = (0u32, 0u32);
                for axis in 0..3 {
                    if d[axis] == 0.0 {
                        if o[axis].abs() > half[axis] {
                            return None;
                        }
                        continue;
                    }
                    let t1 = (-half[axis] - o[axis]) / d[axis];
                    let t2 = (half[axis] - o[axis]) / d[axis];
                    // faces: 2 * axis for the negative side, 2 * axis + 1 for the positive
                    let (lo, hi, lo_face, hi_face) = if t1 < t2 {
                        (t1, t2, 2 * axis as u32, 2 * axis as u32 + 1)
                    } else {
                        (t2, t1, 2 * axis as u32 + 1, 2 * axis as u32)
                    };
                    if lo > t_near {
                        t_near = lo;
                        near_face = lo_face;
                    }
                    if hi < t_far {
                        t_far = hi;
                        far_face = hi_face;
                    }
                }
                if t_near > t_far {
                    None
                } else if t_near > T_MIN {
                    Some((t_near, near_face))
                } else if t_far > T_MIN {
                    Some((t_far, far_face))
                } else {
                    None
                }
            }
            Prepared::Cylinder {
                center,
                axis,
                radius,
                half_height,
            } => {
                let w = origin - center;
                let (wa, da) = (w.dot(axis), dir.dot(axis));
                let w_perp = w - axis * wa;
                let d_perp = dir - axis * da;
                let mut best: Option<(f64, u32)> = None;
                let mut consider = |t: f64, face: u32| {
                    if t > T_MIN && best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, face));
                    }
                };
                // side: |w_perp + t d_perp| = r
                let a = d_perp.dot(&d_perp);
                if a > 0.0 {
                    let b = w_perp.dot(&d_perp);
                    let c = w_perp.dot(&w_perp) - radius * radius;
                    let disc = b * b - a * c;
                    if disc >= 0.0 {
                        let sq = disc.sqrt();
                        for t in [(-b - sq) / a, (-b + sq) / a] {
                            if (wa + t * da).abs() <= *half_height {
                                consider(t, 0);
                            }
                        }
                    }
                }
                // caps at +-half_height along the axis
                if da != 0.0 {
                    for (face, level) in [(1u32, *half_height), (2u32, -*half_height)] {
                        let t = (level - wa) / da;
                        let radial = w_perp + d_perp * t;
                        if radial.dot(&radial) <= radius * radius {
                            consider(t, face);
                        }
                    }
                }
                best
            }
        }
    }
}

/// Depth map plus the surface label of every pixel.
#[derive(Debug, Clone)]
pub struct Rendering {
    pub depth: DepthGrid,
    /// `primitive_index * 8 + face`, or [`NO_HIT`].
    pub labels: Vec<u32>,
}

impl Rendering {
    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }

    pub fn primitive_at(&self, x: usize, y: usize) -> Option<usize> {
        let l = self.labels[y * self.width() + x];
        (l != NO_HIT).then_some((l / 8) as usize)
    }

    /// Pixels whose whole `(2 * margin + 1)^2` neighbourhood lies inside the
    /// image and carries the pixel's own label (same primitive and face).
    pub fn interior_mask(&self, margin: usize) -> Vec<bool> {
        uniform_label_mask(&self.labels, self.width(), self.height(), margin)
    }

    /// Interior pixels of one primitive, `margin` pixels away from any other
    /// surface or face.
    pub fn primitive_interior(&self, primitive: usize, margin: usize) -> Vec<bool> {
        let mut mask = self.interior_mask(margin);
        for (m, &l) in mask.iter_mut().zip(&self.labels) {
            *m = *m && l != NO_HIT && (l / 8) as usize == primitive;
        }
        mask
    }
}

/// Label-uniformity erosion via horizontal then vertical run lengths.
fn uniform_label_mask(labels: &[u32], w: usize, h: usize, margin: usize) -> Vec<bool> {
    let mut horiz = vec![false; w * h];
    par::for_each_row(&mut horiz, w, |y, out| {
        let row = &labels[y * w..(y + 1) * w];
        let mut left = vec![0usize; w];
        for x in 0..w {
            left[x] = if x > 0 && row[x - 1] == row[x] { left[x - 1] + 1 } else { 0 };
        }
        let mut right = 0usize;
        for x in (0..w).rev() {
            right = if x + 1 < w && row[x + 1] == row[x] { right + 1 } else { 0 };
            out[x] = row[x] != NO_HIT && left[x] >= margin && right >= margin;
        }
    });
    let mut out = vec![false; w * h];
    for x in 0..w {
        let same = |y0: usize, y1: usize| horiz[y0 * w + x] && horiz[y1 * w + x] && labels[y0 * w + x] == labels[y1 * w + x];
        let mut up = vec![0usize; h];
        for y in 1..h {
            up[y] = if same(y - 1, y) { up[y - 1] + 1 } else { 0 };
        }
        let mut down = 0usize;
        for y in (0..h).rev() {
            down = if y + 1 < h && same(y + 1, y) { down + 1 } else { 0 };
            out[y * w + x] = horiz[y * w + x] && up[y] >= margin && down >= margin;
        }
    }
    out
}

/// Casts one ray per pixel centre from `camera` and records the nearest hit.
pub fn render(scene: &SceneSpec, camera: Camera) -> Rendering {
    let rig = &scene.rig;
    let k = &rig.intrinsics;
    let pose = rig.pose(camera);
    let rot = *pose.rotation().matrix();
    let origin = pose.origin();
    let prepared: Vec<Prepared> = scene.primitives.iter().map(Prepared::new).collect();
    let (w, h) = (rig.width, rig.height);

    let mut hits: Vec<(f64, u32)> = vec![(0.0, NO_HIT); w * h];
    par::for_each_row(&mut hits, w, |y, row| {
        let dy = (y as f64 - k.cy) / k.fy;
        for (x, out) in row.iter_mut().enumerate() {
            // camera-frame direction with unit Z, so the ray parameter is z-depth
            let cam_dir = Vector3::new((x as f64 - k.cx) / k.fx, dy, 1.0);
            let dir = rot * cam_dir;
            let mut best = (f64::INFINITY, NO_HIT);
            for (i, p) in prepared.iter().enumerate() {
                if let Some((t, face)) = p.intersect(&origin, &dir) {
                    if t < best.0 {
                        best = (t, i as u32 * 8 + face);
                    }
                }
            }
            *out = if best.1 == NO_HIT { (0.0, NO_HIT) } else { best };
        }
    });
    let samples = hits.iter().map(|&(t, l)| (l != NO_HIT).then_some(t)).collect();
    let depth = DepthGrid::from_options(w, h, samples).expect("buffer matches the rig");
    let labels = hits.into_iter().map(|(_, l)| l).collect();
    Rendering { depth, labels }
}

/// Ground-truth z-depth seen from `camera`; pixels that hit nothing are
/// invalid.
pub fn render_depth(scene: &SceneSpec, camera: Camera) -> DepthGrid {
    render(scene, camera).depth
}

/// Left-referenced disparity `fx * b / Z` and the left ground-truth depth.
pub fn render_disparity_pair(scene: &SceneSpec) -> Result<(DisparityGrid, DepthGrid)> {
    scene.validate()?;
    let depth = render_depth(scene, Camera::Left);
    let disparity = depth_to_disparity(&depth, &scene.rig.intrinsics)?;
    Ok((disparity, depth))
}

/// Analytic curvature of the surface hit by each pixel: `1/r^2` on spheres,
/// zero on planes, box faces and cylinder walls and caps. Principal
/// curvatures follow the estimator's orientation (surfaces bulging towards
/// the camera are positive).
///
/// Pixels on or next to a crease, a silhouette or the image border are
/// invalid, as is every pixel that hits nothing.
pub fn analytic_curvature(scene: &SceneSpec, camera: Camera) -> CurvatureField {
    let r = render(scene, camera);
    curvature_from_rendering(scene, &r)
}

pub(crate) fn curvature_from_rendering(scene: &SceneSpec, r: &Rendering) -> CurvatureField {
    let mask = r.interior_mask(1);
    let samples: Vec<Option<CurvatureSample>> = r
        .labels
        .iter()
        .zip(&mask)
        .map(|(&label, &ok)| {
            if !ok {
                return None;
            }
            let face = label % 8;
            Some(match scene.primitives[(label / 8) as usize] {
                Primitive::Sphere { radius, .. } => CurvatureSample {
                    k: 1.0 / (radius * radius),
                    kappa1: 1.0 / radius,
                    kappa2: 1.0 / radius,
                },
                Primitive::Cylinder { radius, .. } if face == 0 => CurvatureSample {
                    k: 0.0,
                    kappa1: 1.0 / radius,
                    kappa2: 0.0,
                },
                _ => CurvatureSample {
                    k: 0.0,
                    kappa1: 0.0,
                    kappa2: 0.0,
                },
            })
        })
        .collect();
    CurvatureField::from_samples(r.width(), r.height(), &samples)
}
