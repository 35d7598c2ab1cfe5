#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use curvelens::depth_io::{write_calib, write_pfm, Calibration, DisparityGrid, Endianness};
use curvelens::synth::{render_disparity_pair, scene_by_name, StereoRig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_curvelens"))
}

pub fn curvelens(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Ground-truth disparity of a built-in scene plus its calibration.
pub fn scene_disparity(name: &str, downscale: usize) -> (DisparityGrid, Calibration) {
    let scene = scene_by_name(name).unwrap().with_rig(StereoRig::middlebury_like().downscaled(downscale));
    let (disp, _) = render_disparity_pair(&scene).unwrap();
    let calib = Calibration {
        intrinsics: scene.rig.intrinsics,
        width: scene.rig.width,
        height: scene.rig.height,
        ndisp: None,
    };
    (disp, calib)
}

pub fn add_noise(disp: &DisparityGrid, sigma_px: f64, seed: u64) -> DisparityGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma_px).unwrap();
    let (w, h, values, valid) = disp.clone().into_parts();
    let samples = values
        .iter()
        .zip(&valid)
        .map(|(&d, &ok)| ok.then(|| (d + normal.sample(&mut rng)).max(0.0)))
        .collect();
    DisparityGrid::from_options(w, h, samples).unwrap()
}

/// Writes `root/gt`, `root/calib` and, when `noise_px` is set, a `noisy`
/// method holding the ground truth plus Gaussian disparity noise.
pub fn build_dataset(root: &Path, scenes: &[&str], downscale: usize, noise_px: Option<f64>) {
    for dir in ["gt", "calib"] {
        fs::create_dir_all(root.join(dir)).unwrap();
    }
    if noise_px.is_some() {
        fs::create_dir_all(root.join("noisy")).unwrap();
    }
    for (i, name) in scenes.iter().enumerate() {
        let (disp, calib) = scene_disparity(name, downscale);
        write_pfm(&disp, root.join("gt").join(format!("{name}.pfm")), Endianness::Little).unwrap();
        write_calib(&calib, root.join("calib").join(format!("{name}.txt"))).unwrap();
        if let Some(sigma) = noise_px {
            let noisy = add_noise(&disp, sigma, 100 + i as u64);
            write_pfm(&noisy, root.join("noisy").join(format!("{name}.pfm")), Endianness::Little).unwrap();
        }
    }
}

/// Contents of every file under `dir`, sorted by path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let bytes = fs::read(&p).unwrap();
                out.push((p, bytes));
            }
        }
    }
    out.sort();
    out
}
