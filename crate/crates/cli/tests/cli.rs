mod common;

use std::fs;
use std::time::Instant;

use common::{build_dataset, curvelens, path_str, snapshot};
use curvelens::depth_io::{read_pfm, Depth, Disparity, Scalar};
use curvelens::synth::{format_scene, render, scene_by_name, Camera, StereoRig};
use curvelens_cli::{curvature_cmd, eval_cmd, Aggregation, RunConfig};
use serde_json::Value;
use tempfile::tempdir;

fn json(path: &std::path::Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_calibration_file_fails_with_its_name() {
    let tmp = tempdir().unwrap();
    let input = tmp.path().join("d.pfm");
    fs::write(&input, b"Pf\n1 1\n-1.0\n\0\0\x80\x3f").unwrap();
    let out = curvelens(&["curvature", "--input", path_str(&input), "--calib", "/nonexistent/calib.txt", "--out", path_str(&tmp.path().join("o"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/calib.txt"));
}

#[test]
fn missing_calibration_key_is_named() {
    let tmp = tempdir().unwrap();
    let input = tmp.path().join("d.pfm");
    fs::write(&input, b"Pf\n1 1\n-1.0\n\0\0\x80\x3f").unwrap();
    let calib = tmp.path().join("calib.txt");
    fs::write(&calib, "cam0=[100 0 0; 0 100 0; 0 0 1]\nbaseline=100\nwidth=1\nheight=1\n").unwrap();
    let out = curvelens(&["curvature", "--input", path_str(&input), "--calib", path_str(&calib), "--out", path_str(&tmp.path().join("o"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("doffs"));
}

#[test]
fn input_requires_calibration() {
    let tmp = tempdir().unwrap();
    let out = curvelens(&["curvature", "--input", "x.pfm", "--out", path_str(tmp.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--calib"));
}

#[test]
fn unknown_scene_fails() {
    let tmp = tempdir().unwrap();
    let out = curvelens(&["synth", "--scene", "Teapot", "--out", path_str(tmp.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Teapot"));
}

#[test]
fn synth_writes_four_consistent_files() {
    let tmp = tempdir().unwrap();
    let out_dir = tmp.path().join("s");
    let out = curvelens(&["synth", "--scene", "MainScene", "--downscale", "10", "--out", path_str(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_dir(&out_dir).unwrap().count(), 4);
    let depth = read_pfm::<Depth>(out_dir.join("depth.pfm")).unwrap();
    let disp = read_pfm::<Disparity>(out_dir.join("disparity.pfm")).unwrap();
    let k = read_pfm::<Scalar>(out_dir.join("curvature.pfm")).unwrap();
    assert_eq!((depth.width(), depth.height()), (300, 200));
    assert_eq!((disp.width(), k.height()), (300, 200));
    let sidecar = json(&out_dir.join("scene.json"));
    assert_eq!(sidecar["config"]["scene"], "MainScene");
    assert_eq!(sidecar["scene"]["rig"]["width"], 300);
    let mut ks: Vec<f64> = k.valid_values().filter(|&v| v != 0.0).collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    assert_eq!(ks, vec![16.0, 64.0]);
}

#[test]
fn synth_accepts_scene_files() {
    let tmp = tempdir().unwrap();
    let mut scene = scene_by_name("Cylinder").unwrap().with_rig(StereoRig::middlebury_like().downscaled(20));
    scene.name = "custom".into();
    let spec = tmp.path().join("custom.scene");
    fs::write(&spec, format_scene(&scene)).unwrap();
    let out_dir = tmp.path().join("s");
    let out = curvelens(&["synth", "--scene", path_str(&spec), "--out", path_str(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let depth = read_pfm::<Depth>(out_dir.join("depth.pfm")).unwrap();
    assert_eq!((depth.width(), depth.height()), (150, 100));
    assert_eq!(json(&out_dir.join("scene.json"))["scene"]["name"], "custom");
}

#[test]
fn synth_then_curvature_through_files() {
    let tmp = tempdir().unwrap();
    let syn = tmp.path().join("syn");
    assert!(curvelens(&["synth", "--scene", "Sphere", "--downscale", "4", "--out", path_str(&syn)]).status.success());
    let cur = tmp.path().join("cur");
    let out = curvelens(&[
        "curvature",
        "--input",
        path_str(&syn.join("disparity.pfm")),
        "--calib",
        path_str(&syn.join("scene.json")),
        "--out",
        path_str(&cur),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&cur.join("report.json"));
    assert!(report["sparsity"]["lgc_percent"].as_f64().unwrap() > 99.0);
    assert_eq!(report["config"]["histogram"]["preset"], "fig4");
    for f in ["K.pfm", "kappa1.pfm", "kappa2.pfm", "K_window.png", "histogram.csv"] {
        assert!(cur.join(f).is_file(), "{f}");
    }
    assert_eq!(fs::read_to_string(cur.join("histogram.csv")).unwrap().lines().count(), 31);
}

#[test]
fn sphere_window_tracks_sphere_pixel_fraction() {
    let scene = scene_by_name("Sphere").unwrap().with_rig(StereoRig::middlebury_like().downscaled(4));
    let tmp = tempdir().unwrap();
    let mut config = RunConfig::new("curvature", tmp.path().join("a"), "fig4");
    config.scene = Some("Sphere".into());
    config.downscale = 4;
    let wide = curvature_cmd::run(&config).unwrap();
    assert!(wide.report.sparsity.lgc_percent > 99.9);

    // every sphere sample carries K = 16 > 10, so without trimming the LGC
    // loses roughly the sphere's share of valid samples
    config.window = 10.0;
    config.trim_fraction = 0.0;
    config.out = tmp.path().join("b");
    let narrow = curvature_cmd::run(&config).unwrap();
    let r = render(&scene, Camera::Left);
    let sphere = r.labels.iter().filter(|&&l| l != curvelens::synth::NO_HIT && l / 8 == 2).count();
    let share = 100.0 * sphere as f64 / r.labels.len() as f64;
    let drop = 100.0 - narrow.report.sparsity.lgc_percent;
    println!("sphere share {share:.2}%, LGC drop {drop:.2}");
    assert!((drop - share).abs() < 0.5);

    // with the default 20% trim the whole sphere falls in the discarded tail
    config.trim_fraction = 0.2;
    config.out = tmp.path().join("c");
    assert_eq!(curvature_cmd::run(&config).unwrap().report.sparsity.lgc_percent, 100.0);
}

#[test]
fn runs_are_bit_identical() {
    let tmp = tempdir().unwrap();
    let out = tmp.path().join("o");
    let args = ["curvature", "--scene", "MainScene", "--downscale", "8", "--sigma", "1.5", "--out", path_str(&out)];
    assert!(curvelens(&args).status.success());
    let first = snapshot(&out);
    assert!(curvelens(&args).status.success());
    assert_eq!(first, snapshot(&out));
}

#[test]
fn self_evaluation_is_exact() {
    let tmp = tempdir().unwrap();
    let data = tmp.path().join("data");
    build_dataset(&data, &["Sphere"], 8, None);
    let mut config = RunConfig::new("eval", tmp.path().join("eval"), "fig6");
    config.dataset = Some(data.clone());
    let out = eval_cmd::run(&config).unwrap();
    assert_eq!(out.methods.len(), 1);
    let gt = &out.methods[0];
    assert_eq!(gt.accuracy.avg_err_px, 0.0);
    assert_eq!(gt.accuracy.rms_px, 0.0);
    assert_eq!(gt.histogram.counts.len(), 50);

    let mut single = RunConfig::new("curvature", tmp.path().join("cur"), "fig6");
    single.input = Some(data.join("gt/Sphere.pfm"));
    single.calib = Some(data.join("calib/Sphere.txt"));
    let run = curvature_cmd::run(&single).unwrap();
    assert_eq!(run.report.sparsity, gt.sparsity);
    for f in ["run.json", "per_image.csv", "ranking.txt", "ranking.html", "ranking.csv", "ranking.json", "gt/Sphere.json", "gt/summary.json", "gt/histogram.csv"] {
        assert!(config.out.join(f).is_file(), "{f}");
    }
}

#[test]
fn noisy_method_ranks_below_ground_truth() {
    let tmp = tempdir().unwrap();
    let data = tmp.path().join("data");
    build_dataset(&data, &["Box_Rotation_45", "Sphere"], 8, Some(0.5));
    let eval_dir = tmp.path().join("eval");
    let out = curvelens(&["eval", "--dataset", path_str(&data), "--out", path_str(&eval_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ranking = json(&eval_dir.join("ranking.json"));
    let rows = ranking["rows"].as_array().unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r["entry"]["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["gt", "noisy"]);
    let err = |i: usize| rows[i]["entry"]["accuracy"]["avg_err_px"].as_f64().unwrap();
    assert!(err(1) > err(0));
    assert_eq!(ranking["config"]["histogram"]["preset"], "fig6");
    let csv = fs::read_to_string(eval_dir.join("per_image.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("method,scene,"));
}

#[test]
fn trimming_modes_both_run() {
    let tmp = tempdir().unwrap();
    let data = tmp.path().join("data");
    build_dataset(&data, &["Sphere", "Cylinder"], 10, Some(0.3));
    let mut config = RunConfig::new("eval", tmp.path().join("a"), "fig6");
    config.dataset = Some(data);
    let agg = eval_cmd::run(&config).unwrap();
    config.aggregation = Aggregation::PerImage;
    config.out = tmp.path().join("b");
    let per = eval_cmd::run(&config).unwrap();
    for (a, p) in agg.methods.iter().zip(&per.methods) {
        assert_eq!(a.sparsity.n_total, p.sparsity.n_total);
        assert_eq!(a.accuracy, p.accuracy);
    }
}

#[test]
fn eval_rejects_missing_ground_truth_and_mixed_sizes() {
    let tmp = tempdir().unwrap();
    let data = tmp.path().join("data");
    build_dataset(&data, &["Sphere"], 10, Some(0.3));
    fs::copy(data.join("noisy/Sphere.pfm"), data.join("noisy/Other.pfm")).unwrap();
    let out = curvelens(&["eval", "--dataset", path_str(&data), "--out", path_str(&tmp.path().join("e"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no ground truth"));

    fs::remove_file(data.join("noisy/Other.pfm")).unwrap();
    let (small, _) = common::scene_disparity("Sphere", 20);
    curvelens::depth_io::write_pfm(&small, data.join("noisy/Sphere.pfm"), curvelens::depth_io::Endianness::Little).unwrap();
    let out = curvelens(&["eval", "--dataset", path_str(&data), "--out", path_str(&tmp.path().join("e"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimensions differ"));
}

#[test]
fn thread_cap_is_validated() {
    let tmp = tempdir().unwrap();
    let run = |threads: &str| {
        std::process::Command::new(common::bin())
            .env("CURVELENS_THREADS", threads)
            .args(["synth", "--scene", "Sphere", "--downscale", "20", "--out", path_str(tmp.path())])
            .output()
            .unwrap()
    };
    assert!(run("1").status.success());
    let bad = run("zero");
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("CURVELENS_THREADS"));
}

#[test]
fn batch_evaluation_is_parallel() {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    if threads < 4 || !curvelens::is_parallel() {
        println!("skipped: {threads} hardware threads");
        return;
    }
    let tmp = tempdir().unwrap();
    let scenes = ["Sphere", "Cylinder", "Box_Rotation_45", "Box_Rotation_90"];
    let data = tmp.path().join("data");
    build_dataset(&data, &scenes, 2, None);
    let mut config = RunConfig::new("eval", tmp.path().join("a"), "fig6");
    config.dataset = Some(data.clone());
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single_data = tmp.path().join("single");
    build_dataset(&single_data, &scenes[..1], 2, None);
    let mut single = config.clone();
    single.dataset = Some(single_data);
    single.out = tmp.path().join("b");
    let t = Instant::now();
    one.install(|| eval_cmd::run(&single)).unwrap();
    let single_time = t.elapsed().as_secs_f64();
    let t = Instant::now();
    eval_cmd::run(&config).unwrap();
    let batch = t.elapsed().as_secs_f64();
    println!("single {single_time:.3}s, batch of {} {batch:.3}s", scenes.len());
    assert!(batch < 0.7 * scenes.len() as f64 * single_time);
}
