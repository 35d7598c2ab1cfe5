//! `curvelens synth`: ground-truth maps for a synthetic scene.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use curvelens::depth_io::{write_pfm, Endianness};
use curvelens::synth::{analytic_curvature, render_disparity_pair, Camera, SceneSpec};
use serde::Serialize;

use crate::{resolve_scene, write_json, RunConfig};

pub const DEPTH_FILE: &str = "depth.pfm";
pub const DISPARITY_FILE: &str = "disparity.pfm";
pub const CURVATURE_FILE: &str = "curvature.pfm";
pub const SIDECAR_FILE: &str = "scene.json";

#[derive(Debug, Clone, Serialize)]
pub struct SceneSidecar {
    pub config: RunConfig,
    pub scene: SceneSpec,
    pub focal_length_mm: f64,
    pub pixel_size_mm: f64,
    pub n_valid_depth: usize,
    pub n_valid_curvature: usize,
}

pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let name = config.scene.as_deref().context("--scene is required")?;
    let mut scene = resolve_scene(name)?;
    if config.downscale > 1 {
        scene = scene.with_rig(scene.rig.downscaled(config.downscale));
    }
    let (disparity, depth) = render_disparity_pair(&scene)?;
    let curvature = analytic_curvature(&scene, Camera::Left);

    let out = &config.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let files: Vec<PathBuf> = [DEPTH_FILE, DISPARITY_FILE, CURVATURE_FILE, SIDECAR_FILE]
        .iter()
        .map(|f| out.join(f))
        .collect();
    write_pfm(&depth, &files[0], Endianness::Little)?;
    write_pfm(&disparity, &files[1], Endianness::Little)?;
    write_pfm(&curvature.k_grid(), &files[2], Endianness::Little)?;
    let sidecar = SceneSidecar {
        config: config.clone(),
        focal_length_mm: scene.rig.focal_length_mm(),
        pixel_size_mm: scene.rig.pixel_size_mm(),
        n_valid_depth: depth.valid_count(),
        n_valid_curvature: curvature.valid_count(),
        scene,
    };
    write_json(&files[3], &sidecar)?;
    Ok(files)
}
