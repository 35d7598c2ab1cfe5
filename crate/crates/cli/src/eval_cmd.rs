//! `curvelens eval`: accuracy and curvature statistics for every method in a
//! dataset directory.
//!
//! Layout: `gt/<scene>.pfm` and `calib/<scene>.txt`, plus one directory of
//! `<scene>.pfm` disparity maps per method. The `gt` directory is evaluated
//! as a method too.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use curvelens::depth_io::{disparity_to_depth, read_calibration, read_pfm, Disparity, DisparityGrid};
use curvelens::metrics::{sparsity_report, sparsity_report_of_kept, trim_top_abs};
use curvelens::stereo_eval::{compare_depth, compare_disparity, pool_accuracy, rank_report, AccuracyReport, RankEntry, RankTable};
use curvelens::{CameraIntrinsics, CurvatureHistogram, SparsityReport};
use serde::Serialize;

use crate::{estimate_field, write_json, Aggregation, RunConfig};

pub const GT_DIR: &str = "gt";
pub const CALIB_DIR: &str = "calib";

#[derive(Debug, Clone, Serialize)]
pub struct ImageReport {
    pub method: String,
    pub scene: String,
    pub accuracy: AccuracyReport,
    pub sparsity: SparsityReport,
    pub n_valid_k: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub aggregation: Aggregation,
    pub accuracy: AccuracyReport,
    pub sparsity: SparsityReport,
    pub histogram: CurvatureHistogram,
}

#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub images: Vec<ImageReport>,
    pub methods: Vec<MethodSummary>,
    pub table: RankTable,
}

#[derive(Serialize)]
struct WithConfig<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: &'a T,
}

struct Scene {
    name: String,
    cam: CameraIntrinsics,
    gt: DisparityGrid,
}

fn pfm_stems(dir: &Path) -> Result<BTreeSet<String>> {
    let mut stems = BTreeSet::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pfm")) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.insert(stem.to_string());
            }
        }
    }
    Ok(stems)
}

fn load_scenes(root: &Path) -> Result<Vec<Scene>> {
    let gt_dir = root.join(GT_DIR);
    if !gt_dir.is_dir() {
        bail!("missing ground truth directory {}", gt_dir.display());
    }
    let names = pfm_stems(&gt_dir)?;
    if names.is_empty() {
        bail!("{} holds no .pfm files", gt_dir.display());
    }
    names
        .into_iter()
        .map(|name| {
            let calib_path = root.join(CALIB_DIR).join(format!("{name}.txt"));
            let calib = read_calibration(&calib_path).with_context(|| format!("calibration for scene `{name}`"))?;
            let gt_path = gt_dir.join(format!("{name}.pfm"));
            let gt = read_pfm::<Disparity>(&gt_path).with_context(|| format!("reading {}", gt_path.display()))?;
            if (gt.width(), gt.height()) != (calib.width, calib.height) {
                bail!(
                    "scene `{name}`: ground truth is {}x{} but calib.txt says {}x{}",
                    gt.width(),
                    gt.height(),
                    calib.width,
                    calib.height
                );
            }
            Ok(Scene {
                name,
                cam: calib.intrinsics,
                gt,
            })
        })
        .collect()
}

fn method_dirs(root: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(root).with_context(|| format!("listing {}", root.display()))? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
            continue;
        };
        if path.is_dir() && name != CALIB_DIR && !name.starts_with('.') {
            out.push((name, path));
        }
    }
    out.sort();
    Ok(out)
}

/// Everything measured on one image, plus the curvature samples needed for
/// pooling.
struct ImageResult {
    report: ImageReport,
    pooled_k: Vec<f64>,
    n_total: usize,
    n_trimmed: usize,
}

fn evaluate_image(method: &str, dir: &Path, scene: &Scene, config: &RunConfig) -> Result<ImageResult> {
    let path = dir.join(format!("{}.pfm", scene.name));
    let est = read_pfm::<Disparity>(&path).with_context(|| format!("reading {}", path.display()))?;
    let ctx = || format!("{method}/{}", scene.name);
    let mut accuracy = compare_disparity(&est, &scene.gt, &config.taus, config.mask).with_context(ctx)?;
    let est_depth = disparity_to_depth(&est, &scene.cam)?;
    let gt_depth = disparity_to_depth(&scene.gt, &scene.cam)?;
    accuracy.depth_avg_err_cm = Some(compare_depth(&est_depth, &gt_depth, config.mask).with_context(ctx)?);

    let k = estimate_field(&est_depth, &scene.cam, config)?.valid_k();
    let cfg = config.sparsity();
    let (sparsity, _) = sparsity_report(&k, &cfg).with_context(ctx)?;
    let n_total = k.len();
    let (pooled_k, n_trimmed) = match config.aggregation {
        Aggregation::Aggregate => (k, 0),
        Aggregation::PerImage => {
            let t = trim_top_abs(&k, config.trim_fraction)?;
            (t.kept, t.n_removed)
        }
    };
    Ok(ImageResult {
        report: ImageReport {
            method: method.to_string(),
            scene: scene.name.clone(),
            accuracy,
            n_valid_k: n_total,
            sparsity,
        },
        pooled_k,
        n_total,
        n_trimmed,
    })
}

fn map_jobs<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

fn summarize(method: &str, results: Vec<ImageResult>, config: &RunConfig) -> Result<MethodSummary> {
    let accuracy = pool_accuracy(&results.iter().map(|r| r.report.accuracy.clone()).collect::<Vec<_>>())?;
    let n_total = results.iter().map(|r| r.n_total).sum();
    let n_trimmed = results.iter().map(|r| r.n_trimmed).sum();
    let pooled: Vec<f64> = results.into_iter().flat_map(|r| r.pooled_k).collect();
    let cfg = config.sparsity();
    let (sparsity, histogram) = match config.aggregation {
        Aggregation::Aggregate => sparsity_report(&pooled, &cfg)?,
        Aggregation::PerImage => sparsity_report_of_kept(&pooled, n_total, n_trimmed, &cfg)?,
    };
    Ok(MethodSummary {
        method: method.to_string(),
        aggregation: config.aggregation,
        accuracy,
        sparsity,
        histogram,
    })
}

/// Evaluates every method and scene, writing all reports under `config.out`.
pub fn run(config: &RunConfig) -> Result<EvalOutput> {
    config.validate()?;
    let root = config.dataset.as_deref().context("--dataset is required")?;
    let scenes = load_scenes(root)?;
    let methods = method_dirs(root)?;

    let mut images = Vec::new();
    let mut summaries = Vec::new();
    for (method, dir) in &methods {
        let have = pfm_stems(dir)?;
        if let Some(extra) = have.iter().find(|s| !scenes.iter().any(|sc| &sc.name == *s)) {
            bail!("method `{method}` has {extra}.pfm but there is no ground truth for it");
        }
        if let Some(missing) = scenes.iter().find(|sc| !have.contains(&sc.name)) {
            bail!("method `{method}` lacks {}.pfm", missing.name);
        }
        let results = map_jobs(scenes.len(), |i| evaluate_image(method, dir, &scenes[i], config))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        images.extend(results.iter().map(|r| r.report.clone()));
        summaries.push(summarize(method, results, config)?);
    }

    let entries: Vec<RankEntry> = summaries
        .iter()
        .map(|s| RankEntry {
            name: s.method.clone(),
            accuracy: Some(s.accuracy.clone()),
            sparsity: s.sparsity.clone(),
        })
        .collect();
    let table = rank_report(&entries)?;
    let output = EvalOutput {
        images,
        methods: summaries,
        table,
    };
    write_outputs(&output, config)?;
    Ok(output)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn per_image_csv(images: &[ImageReport], taus: &[f64]) -> String {
    let mut out = String::from("method,scene,n_valid_k,lgc_percent,entropy_bits,k_median,k_abs_median,k_abs_max,avg_err_px,rms_px");
    for t in taus {
        let _ = write!(out, ",bad_{t}");
    }
    out.push_str(",depth_avg_err_cm,n_evaluated\n");
    for r in images {
        let (s, a) = (&r.sparsity, &r.accuracy);
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.method, r.scene, r.n_valid_k, s.lgc_percent, s.entropy_bits, s.k_median, s.k_abs_median, s.k_abs_max, a.avg_err_px, a.rms_px
        );
        for t in taus {
            let _ = write!(out, ",{}", opt(a.bad_percent(*t)));
        }
        let _ = writeln!(out, ",{},{}", opt(a.depth_avg_err_cm), a.n_evaluated);
    }
    out
}

fn write_outputs(output: &EvalOutput, config: &RunConfig) -> Result<()> {
    let out = &config.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    config.write_sidecar(out)?;
    for summary in &output.methods {
        let dir = out.join(&summary.method);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for image in output.images.iter().filter(|i| i.method == summary.method) {
            let body = WithConfig { config, body: image };
            write_json(&dir.join(format!("{}.json", image.scene)), &body)?;
        }
        write_json(&dir.join("summary.json"), &WithConfig { config, body: summary })?;
        write_file(&dir.join("histogram.csv"), &summary.histogram.to_csv())?;
    }
    write_file(&out.join("per_image.csv"), &per_image_csv(&output.images, &config.taus))?;
    write_file(&out.join("ranking.txt"), &output.table.to_text())?;
    write_file(&out.join("ranking.html"), &output.table.to_html())?;
    write_file(&out.join("ranking.csv"), &output.table.to_csv())?;
    write_json(&out.join("ranking.json"), &WithConfig { config, body: &output.table })?;
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
