//! Text format for scene descriptions.
//!
//! ```text
//! curvelens-scene v1
//! name Sphere
//! image 2000 3000                         # height width, px
//! sensor_mm 14.8 22.2                     # height width
//! intrinsics 4729.73 4729.73 1499.5 999.5 # fx fy cx cy, px
//! baseline_m 0.2
//! doffs_px 0
//! camera 0 0 0 0 0 0                      # left camera: x y z (m), yaw pitch roll (deg)
//! plane px py pz nx ny nz
//! box cx cy cz hx hy hz yaw_deg
//! cylinder cx cy cz ax ay az radius half_height
//! sphere cx cy cz radius
//! ```
//!
//! The header line is mandatory and must come first. `#` starts a comment.
//! Every rig line is required exactly once; primitives are listed in order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Pose, Primitive, SceneSpec, StereoRig};
use crate::depth_io::CameraIntrinsics;
use crate::error::{Error, Result};

pub const SCENE_HEADER: &str = "curvelens-scene v1";

pub fn read_scene(path: impl AsRef<Path>) -> Result<SceneSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene(&text)
}

pub fn write_scene(scene: &SceneSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_scene(scene)).map_err(|e| Error::io(path, e))
}

#[derive(Default)]
struct RigFields {
    image: Option<[f64; 2]>,
    sensor: Option<[f64; 2]>,
    intrinsics: Option<[f64; 4]>,
    baseline: Option<f64>,
    doffs: Option<f64>,
    camera: Option<[f64; 6]>,
}

fn numbers<const N: usize>(args: &[&str], line: usize, key: &str) -> Result<[f64; N]> {
    if args.len() != N {
        return Err(Error::SceneSyntax {
            line,
            message: format!("`{key}` takes {N} numbers, got {}", args.len()),
        });
    }
    let mut out = [0.0; N];
    for (o, a) in out.iter_mut().zip(args) {
        *o = a.parse().map_err(|_| Error::SceneSyntax {
            line,
            message: format!("`{a}` is not a number"),
        })?;
    }
    Ok(out)
}

fn set_once<T>(slot: &mut Option<T>, value: T, line: usize, key: &str) -> Result<()> {
    if slot.replace(value).is_some() {
        return Err(Error::SceneSyntax {
            line,
            message: format!("`{key}` given twice"),
        });
    }
    Ok(())
}

pub fn parse_scene(text: &str) -> Result<SceneSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, SCENE_HEADER)) => {}
        Some((line, other)) => {
            return Err(Error::SceneSyntax {
                line,
                message: format!("expected `{SCENE_HEADER}`, found `{other}`"),
            })
        }
        None => {
            return Err(Error::SceneSyntax {
                line: 1,
                message: "empty scene file".into(),
            })
        }
    }

    let mut name = None;
    let mut rig = RigFields::default();
    let mut primitives = Vec::new();
    for (line, content) in lines {
        let mut parts = content.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        match key {
            "name" => {
                if args.is_empty() {
                    return Err(Error::SceneSyntax {
                        line,
                        message: "`name` needs a value".into(),
                    });
                }
                set_once(&mut name, args.join(" "), line, key)?;
            }
            "image" => set_once(&mut rig.image, numbers::<2>(&args, line, key)?, line, key)?,
            "sensor_mm" => set_once(&mut rig.sensor, numbers::<2>(&args, line, key)?, line, key)?,
            "intrinsics" => set_once(&mut rig.intrinsics, numbers::<4>(&args, line, key)?, line, key)?,
            "baseline_m" => set_once(&mut rig.baseline, numbers::<1>(&args, line, key)?[0], line, key)?,
            "doffs_px" => set_once(&mut rig.doffs, numbers::<1>(&args, line, key)?[0], line, key)?,
            "camera" => set_once(&mut rig.camera, numbers::<6>(&args, line, key)?, line, key)?,
            "plane" => {
                let v = numbers::<6>(&args, line, key)?;
                primitives.push(Primitive::Plane {
                    point: [v[0], v[1], v[2]],
                    normal: [v[3], v[4], v[5]],
                });
            }
            "box" => {
                let v = numbers::<7>(&args, line, key)?;
                primitives.push(Primitive::Box {
                    center: [v[0], v[1], v[2]],
                    half_extents: [v[3], v[4], v[5]],
                    yaw_deg: v[6],
                });
            }
            "cylinder" => {
                let v = numbers::<8>(&args, line, key)?;
                primitives.push(Primitive::Cylinder {
                    center: [v[0], v[1], v[2]],
                    axis: [v[3], v[4], v[5]],
                    radius: v[6],
                    half_height: v[7],
                });
            }
            "sphere" => {
                let v = numbers::<4>(&args, line, key)?;
                primitives.push(Primitive::Sphere {
                    center: [v[0], v[1], v[2]],
                    radius: v[3],
                });
            }
            other => {
                return Err(Error::SceneSyntax {
                    line,
                    message: format!("unknown record `{other}`"),
                })
            }
        }
        if let Some(p) = primitives.last() {
            p.validate().map_err(|e| Error::SceneSyntax {
                line,
                message: e.to_string(),
            })?;
        }
    }

    let missing = |what: &str| Error::SceneSyntax {
        line: 0,
        message: format!("missing `{what}` record"),
    };
    let image = rig.image.ok_or_else(|| missing("image"))?;
    let sensor = rig.sensor.ok_or_else(|| missing("sensor_mm"))?;
    let k = rig.intrinsics.ok_or_else(|| missing("intrinsics"))?;
    let camera = rig.camera.ok_or_else(|| missing("camera"))?;
    let as_size = |v: f64| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::SceneSyntax {
                line: 0,
                message: format!("image size must be a positive integer, got {v}"),
            })
        }
    };
    let scene = SceneSpec {
        name: name.ok_or_else(|| missing("name"))?,
        rig: StereoRig {
            intrinsics: CameraIntrinsics::new(
                k[0],
                k[1],
                k[2],
                k[3],
                rig.baseline.ok_or_else(|| missing("baseline_m"))?,
                rig.doffs.ok_or_else(|| missing("doffs_px"))?,
            )?,
            height: as_size(image[0])?,
            width: as_size(image[1])?,
            sensor_mm: sensor,
            left: Pose {
                position: [camera[0], camera[1], camera[2]],
                yaw_deg: camera[3],
                pitch_deg: camera[4],
                roll_deg: camera[5],
            },
        },
        primitives,
    };
    scene.validate()?;
    Ok(scene)
}

/// Renders a scene in the format [`parse_scene`] reads; numbers use the
/// shortest representation that parses back to the same value.
pub fn format_scene(scene: &SceneSpec) -> String {
    let r = &scene.rig;
    let k = &r.intrinsics;
    let p = &r.left;
    let mut out = format!("{SCENE_HEADER}\nname {}\n", scene.name);
    let _ = writeln!(out, "image {} {}", r.height, r.width);
    let _ = writeln!(out, "sensor_mm {} {}", r.sensor_mm[0], r.sensor_mm[1]);
    let _ = writeln!(out, "intrinsics {} {} {} {}", k.fx, k.fy, k.cx, k.cy);
    let _ = writeln!(out, "baseline_m {}", k.baseline_m);
    let _ = writeln!(out, "doffs_px {}", k.doffs_px);
    let _ = writeln!(
        out,
        "camera {} {} {} {} {} {}",
        p.position[0], p.position[1], p.position[2], p.yaw_deg, p.pitch_deg, p.roll_deg
    );
    for prim in &scene.primitives {
        let _ = match *prim {
            Primitive::Plane { point: c, normal: n } => {
                writeln!(out, "plane {} {} {} {} {} {}", c[0], c[1], c[2], n[0], n[1], n[2])
            }
            Primitive::Box {
                center: c,
                half_extents: h,
                yaw_deg,
            } => writeln!(out, "box {} {} {} {} {} {} {}", c[0], c[1], c[2], h[0], h[1], h[2], yaw_deg),
            Primitive::Cylinder {
                center: c,
                axis: a,
                radius,
                half_height,
            } => writeln!(
                out,
                "cylinder {} {} {} {} {} {} {} {}",
                c[0], c[1], c[2], a[0], a[1], a[2], radius, half_height
            ),
            Primitive::Sphere { center: c, radius } => {
                writeln!(out, "sphere {} {} {} {}", c[0], c[1], c[2], radius)
            }
        };
    }
    out
}
