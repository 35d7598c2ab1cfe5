//! Analytic synthetic scenes with known Gaussian curvature.
//!
//! Scenes are built from infinite planes, yaw-rotated boxes, capped
//! cylinders and spheres, viewed by a rectified stereo rig. Depth maps are
//! produced by exact ray casting and store camera-frame Z (not ray length),
//! so every per-pixel value is an analytic oracle for the estimator.

mod render;
mod scene_file;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

pub use self::render::{analytic_curvature, render, render_depth, render_disparity_pair, Rendering, NO_HIT};
pub use self::scene_file::{format_scene, parse_scene, read_scene, write_scene, SCENE_HEADER};

use crate::depth_io::CameraIntrinsics;
use crate::error::{Error, Result};

/// Rigid pose of a camera in the world: `world = R * cam + position`, with
/// `R = R_y(yaw) R_x(pitch) R_z(roll)`. Camera axes: X right, Y down, Z
/// forward.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: [f64; 3],
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

impl Pose {
    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vector3::y_axis(), self.yaw_deg.to_radians())
            * Rotation3::from_axis_angle(&Vector3::x_axis(), self.pitch_deg.to_radians())
            * Rotation3::from_axis_angle(&Vector3::z_axis(), self.roll_deg.to_radians())
    }

    pub fn origin(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Camera {
    Left,
    Right,
}

/// Rectified stereo rig: two identical pinhole cameras, the right one offset
/// by the baseline along the left camera's X axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StereoRig {
    pub intrinsics: CameraIntrinsics,
    pub width: usize,
    pub height: usize,
    /// Sensor size (height, width) in millimeters; metadata only.
    pub sensor_mm: [f64; 2],
    pub left: Pose,
}

impl StereoRig {
    /// Middlebury-like rig: 2000x3000 px on a 14.8x22.2 mm sensor, 35 mm
    /// lens (4729.73 px), 200 mm baseline, principal point at the image
    /// centre.
    pub fn middlebury_like() -> Self {
        let (width, height) = (3000, 2000);
        StereoRig {
            intrinsics: CameraIntrinsics {
                fx: 4729.73,
                fy: 4729.73,
                cx: (width as f64 - 1.0) / 2.0,
                cy: (height as f64 - 1.0) / 2.0,
                baseline_m: 0.2,
                doffs_px: 0.0,
            },
            width,
            height,
            sensor_mm: [14.8, 22.2],
            left: Pose::default(),
        }
    }

    /// Same field of view at `1/factor` of the resolution.
    pub fn downscaled(&self, factor: usize) -> Self {
        let f = factor.max(1) as f64;
        let (width, height) = (self.width / factor.max(1), self.height / factor.max(1));
        StereoRig {
            intrinsics: CameraIntrinsics {
                fx: self.intrinsics.fx / f,
                fy: self.intrinsics.fy / f,
                cx: (width as f64 - 1.0) / 2.0,
                cy: (height as f64 - 1.0) / 2.0,
                ..self.intrinsics
            },
            width,
            height,
            ..*self
        }
    }

    pub fn pixel_size_mm(&self) -> f64 {
        self.sensor_mm[1] / self.width as f64
    }

    pub fn focal_length_mm(&self) -> f64 {
        self.intrinsics.fx * self.pixel_size_mm()
    }

    pub fn right_pose(&self) -> Pose {
        let offset = self.left.rotation() * Vector3::new(self.intrinsics.baseline_m, 0.0, 0.0);
        Pose {
            position: (self.left.origin() + offset).into(),
            ..self.left
        }
    }

    pub fn pose(&self, camera: Camera) -> Pose {
        match camera {
            Camera::Left => self.left,
            Camera::Right => self.right_pose(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        if self.width < 3 || self.height < 3 {
            return Err(Error::param(format!("image {}x{} is too small", self.width, self.height)));
        }
        Ok(())
    }
}

/// Scene geometry. Positions are world coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Primitive {
    /// Infinite plane through `point`.
    Plane { point: [f64; 3], normal: [f64; 3] },
    /// Box rotated by `yaw_deg` about the vertical (Y) axis.
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
        yaw_deg: f64,
    },
    /// Capped cylinder of length `2 * half_height` along `axis`.
    Cylinder {
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        half_height: f64,
    },
    Sphere { center: [f64; 3], radius: f64 },
}

impl Primitive {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Primitive::Plane { .. } => "plane",
            Primitive::Box { .. } => "box",
            Primitive::Cylinder { .. } => "cylinder",
            Primitive::Sphere { .. } => "sphere",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match *self {
            Primitive::Plane { point, normal } => {
                finite(&point) && finite(&normal) && Vector3::from(normal).norm() > 0.0
            }
            Primitive::Box {
                center,
                half_extents,
                yaw_deg,
            } => finite(&center) && yaw_deg.is_finite() && half_extents.iter().all(|&h| h > 0.0 && h.is_finite()),
            Primitive::Cylinder {
                center,
                axis,
                radius,
                half_height,
            } => {
                finite(&center)
                    && finite(&axis)
                    && Vector3::from(axis).norm() > 0.0
                    && radius > 0.0
                    && half_height > 0.0
                    && radius.is_finite()
                    && half_height.is_finite()
            }
            Primitive::Sphere { center, radius } => finite(&center) && radius > 0.0 && radius.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("degenerate {} primitive", self.kind_name())))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub name: String,
    pub rig: StereoRig,
    /// Nearest hit wins where primitives overlap.
    pub primitives: Vec<Primitive>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        self.rig.validate()?;
        if self.primitives.is_empty() {
            return Err(Error::param(format!("scene `{}` has no primitives", self.name)));
        }
        self.primitives.iter().try_for_each(Primitive::validate)
    }

    /// Same scene seen through another rig.
    pub fn with_rig(&self, rig: StereoRig) -> Self {
        SceneSpec {
            rig,
            ..self.clone()
        }
    }
}

const BUILTIN_FILES: [(&str, &str); 5] = [
    ("Box_Rotation_45", include_str!("../../scenes/box_rotation_45.scene")),
    ("Box_Rotation_90", include_str!("../../scenes/box_rotation_90.scene")),
    ("Cylinder", include_str!("../../scenes/cylinder.scene")),
    ("Sphere", include_str!("../../scenes/sphere.scene")),
    ("MainScene", include_str!("../../scenes/main_scene.scene")),
];

const EXTRA_FILES: [(&str, &str); 2] = [
    ("Plane", include_str!("../../scenes/plane.scene")),
    ("SlantedPlane", include_str!("../../scenes/slanted_plane.scene")),
];

/// The five reference scenes: `Box_Rotation_45`, `Box_Rotation_90`,
/// `Cylinder`, `Sphere` and `MainScene`.
pub fn builtin_scenes() -> Vec<SceneSpec> {
    BUILTIN_FILES
        .iter()
        .map(|(_, text)| parse_scene(text).expect("built-in scene files are well-formed"))
        .collect()
}

/// Auxiliary scenes: `Plane` (background only) and `SlantedPlane` (one
/// obliquely viewed plane filling the frame).
pub fn extra_scenes() -> Vec<SceneSpec> {
    EXTRA_FILES
        .iter()
        .map(|(_, text)| parse_scene(text).expect("built-in scene files are well-formed"))
        .collect()
}

/// Case-insensitive lookup among built-in and auxiliary scenes.
pub fn scene_by_name(name: &str) -> Result<SceneSpec> {
    BUILTIN_FILES
        .iter()
        .chain(EXTRA_FILES.iter())
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, text)| parse_scene(text).expect("built-in scene files are well-formed"))
        .ok_or_else(|| Error::UnknownScene(name.to_string()))
}

pub fn scene_names() -> Vec<&'static str> {
    BUILTIN_FILES.iter().chain(EXTRA_FILES.iter()).map(|(n, _)| *n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rig_matches_reported_optics() {
        let rig = StereoRig::middlebury_like();
        assert!((rig.pixel_size_mm() - 0.0074).abs() < 1e-12);
        assert!((rig.focal_length_mm() - 35.0).abs() < 1e-2);
        assert_eq!((rig.height, rig.width), (2000, 3000));
        assert_eq!(rig.sensor_mm, [14.8, 22.2]);
    }

    #[test]
    fn right_camera_is_shifted_along_x() {
        let rig = StereoRig::middlebury_like();
        let r = rig.right_pose();
        assert_eq!(r.position, [0.2, 0.0, 0.0]);
        assert_eq!(r.yaw_deg, 0.0);
    }

    #[test]
    fn five_builtin_scenes() {
        let scenes = builtin_scenes();
        let names: Vec<&str> = scenes.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["Box_Rotation_45", "Box_Rotation_90", "Cylinder", "Sphere", "MainScene"]);
        for s in &scenes {
            s.validate().unwrap();
            assert_eq!(s.rig, StereoRig::middlebury_like());
        }
        let main = scene_by_name("mainscene").unwrap();
        let radii: Vec<f64> = main
            .primitives
            .iter()
            .filter_map(|p| match p {
                Primitive::Sphere { radius, .. } => Some(*radius),
                _ => None,
            })
            .collect();
        assert_eq!(radii, [0.25, 0.125]);
        assert!(matches!(scene_by_name("nope"), Err(Error::UnknownScene(_))));
    }

    #[test]
    fn degenerate_primitives_are_rejected() {
        assert!(Primitive::Sphere {
            center: [0.0; 3],
            radius: 0.0
        }
        .validate()
        .is_err());
        assert!(Primitive::Plane {
            point: [0.0; 3],
            normal: [0.0; 3]
        }
        .validate()
        .is_err());
    }
}
