//! Command implementations behind the `curvelens` binary.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use curvelens::depth_io::{disparity_to_depth, read_calib, read_pfm, Depth, Disparity};
use curvelens::projection::smooth_depth_image_space;
use curvelens::synth::{read_scene, scene_by_name, SceneSpec};
use curvelens::{backproject, curvature_field, smooth_surface, CameraIntrinsics, CurvatureField, DepthGrid};
use serde::Serialize;

pub mod config;
pub mod curvature_cmd;
pub mod eval_cmd;
pub mod raster;
pub mod synth_cmd;

pub use config::{Aggregation, HistogramChoice, InputKind, RunConfig};

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Reads intrinsics from a Middlebury `calib.txt` or from the JSON sidecar
/// written by `curvelens synth`.
pub fn load_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let doc: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let rig = doc
            .pointer("/scene/rig/intrinsics")
            .with_context(|| format!("{} has no scene.rig.intrinsics", path.display()))?;
        let cam: CameraIntrinsics = serde_json::from_value(rig.clone())?;
        cam.validate()?;
        return Ok(cam);
    }
    read_calib(path).with_context(|| format!("loading calibration {}", path.display()))
}

/// Loads a depth or disparity PFM as metric depth.
pub fn load_depth(path: &Path, kind: InputKind, cam: &CameraIntrinsics) -> Result<DepthGrid> {
    let ctx = || format!("reading {}", path.display());
    Ok(match kind {
        InputKind::Depth => read_pfm::<Depth>(path).with_context(ctx)?,
        InputKind::Disparity => disparity_to_depth(&read_pfm::<Disparity>(path).with_context(ctx)?, cam)?,
    })
}

/// A built-in scene name or a path to a scene file.
pub fn resolve_scene(name: &str) -> Result<SceneSpec> {
    let path = Path::new(name);
    if path.is_file() {
        return read_scene(path).with_context(|| format!("loading scene file {name}"));
    }
    scene_by_name(name).with_context(|| format!("available scenes: {}", curvelens::synth::scene_names().join(", ")))
}

/// Back-projection, optional smoothing and curvature for one depth map.
pub fn estimate_field(depth: &DepthGrid, cam: &CameraIntrinsics, config: &RunConfig) -> Result<CurvatureField> {
    let params = config.smoothing()?;
    let surface = if config.smooth_depth_diagnostic {
        backproject(&smooth_depth_image_space(depth, &params)?, cam)
    } else {
        smooth_surface(&backproject(depth, cam), &params)?
    };
    Ok(curvature_field(&surface))
}

/// Caps the global rayon pool at `CURVELENS_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("CURVELENS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("CURVELENS_THREADS must be a positive integer, got `{value}`"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}
