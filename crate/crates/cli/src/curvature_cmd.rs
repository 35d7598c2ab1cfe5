//! `curvelens curvature`: one depth map in, curvature maps and statistics out.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use curvelens::depth_io::{write_pfm, Endianness};
use curvelens::metrics::sparsity_report;
use curvelens::synth::{render_depth, Camera};
use curvelens::{CameraIntrinsics, CurvatureField, CurvatureHistogram, DepthGrid, SparsityReport};
use serde::Serialize;

use crate::{estimate_field, load_depth, load_intrinsics, raster, resolve_scene, write_json, RunConfig};

pub const K_FILE: &str = "K.pfm";
pub const KAPPA1_FILE: &str = "kappa1.pfm";
pub const KAPPA2_FILE: &str = "kappa2.pfm";
pub const PNG_FILE: &str = "K_window.png";
pub const REPORT_FILE: &str = "report.json";
pub const HISTOGRAM_FILE: &str = "histogram.csv";

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub config: RunConfig,
    pub width: usize,
    pub height: usize,
    pub n_valid_depth: usize,
    pub n_valid_k: usize,
    pub sparsity: SparsityReport,
    pub histogram: CurvatureHistogram,
}

#[derive(Debug)]
pub struct CurvatureRun {
    pub field: CurvatureField,
    pub report: CurvatureReport,
    pub files: Vec<PathBuf>,
}

/// Depth and intrinsics from `--scene` or from `--input` plus `--calib`.
pub fn load_source(config: &RunConfig) -> Result<(DepthGrid, CameraIntrinsics)> {
    match (&config.scene, &config.input) {
        (Some(_), Some(_)) => bail!("--scene and --input are mutually exclusive"),
        (Some(name), None) => {
            let mut scene = resolve_scene(name)?;
            if config.downscale > 1 {
                scene = scene.with_rig(scene.rig.downscaled(config.downscale));
            }
            scene.validate()?;
            Ok((render_depth(&scene, Camera::Left), scene.rig.intrinsics))
        }
        (None, Some(input)) => {
            let calib = config.calib.as_ref().context("--calib is required with --input")?;
            let cam = load_intrinsics(calib)?;
            Ok((load_depth(input, config.input_kind, &cam)?, cam))
        }
        (None, None) => bail!("one of --input or --scene is required"),
    }
}

pub fn run(config: &RunConfig) -> Result<CurvatureRun> {
    config.validate()?;
    let (depth, cam) = load_source(config)?;
    let field = estimate_field(&depth, &cam, config)?;
    let k = field.valid_k();
    let (sparsity, histogram) = sparsity_report(&k, &config.sparsity()).context("no valid curvature samples")?;
    let report = CurvatureReport {
        config: config.clone(),
        width: depth.width(),
        height: depth.height(),
        n_valid_depth: depth.valid_count(),
        n_valid_k: k.len(),
        sparsity,
        histogram,
    };

    let out = &config.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let files: Vec<PathBuf> = [K_FILE, KAPPA1_FILE, KAPPA2_FILE, PNG_FILE, REPORT_FILE, HISTOGRAM_FILE]
        .iter()
        .map(|f| out.join(f))
        .collect();
    write_pfm(&field.k_grid(), &files[0], Endianness::Little)?;
    write_pfm(&field.kappa1_grid(), &files[1], Endianness::Little)?;
    write_pfm(&field.kappa2_grid(), &files[2], Endianness::Little)?;
    raster::write_curvature_png(&field, config.window, &files[3])?;
    write_json(&files[4], &report)?;
    fs::write(&files[5], report.histogram.to_csv()).with_context(|| format!("writing {}", files[5].display()))?;
    Ok(CurvatureRun { field, report, files })
}
