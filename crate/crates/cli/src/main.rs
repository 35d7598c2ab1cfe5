use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use curvelens::stereo_eval::MaskMode;
use curvelens_cli::config::parse_range;
use curvelens_cli::{curvature_cmd, eval_cmd, synth_cmd, Aggregation, HistogramChoice, InputKind, RunConfig};

// Writes to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "curvelens", version, about = "Gaussian curvature statistics for depth and disparity maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate per-pixel curvature of one map and report its sparsity.
    Curvature(CurvatureArgs),
    /// Render ground-truth depth, disparity and curvature of a synthetic scene.
    Synth(SynthArgs),
    /// Score every method in a dataset directory against its ground truth.
    Eval(EvalArgs),
    /// List the built-in scenes.
    Scenes,
}

#[derive(Args)]
struct MetricArgs {
    /// Gaussian smoothing of the X, Y, Z components, in pixels (0 = off).
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Fraction of largest-|K| samples discarded before statistics.
    #[arg(long, default_value_t = 0.2)]
    trim: f64,
    /// LGC window W in m^-2.
    #[arg(long, default_value_t = 1000.0)]
    window: f64,
    /// Histogram preset: fig4 (30 bins, +-2500) or fig6 (50 bins, +-4000).
    #[arg(long)]
    preset: Option<String>,
    /// Number of histogram bins; overrides the preset.
    #[arg(long)]
    bins: Option<usize>,
    /// Histogram range LO,HI in m^-2; overrides the preset.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    range: Option<(f64, f64)>,
    /// Weight of the sqrt|K| loss, in meters.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Args)]
struct CurvatureArgs {
    /// Disparity or depth map (PFM).
    #[arg(long, conflicts_with = "scene")]
    input: Option<PathBuf>,
    /// What the input holds.
    #[arg(long, default_value = "disparity")]
    input_kind: InputKind,
    /// Middlebury calib.txt, or the scene.json written by `synth`.
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Built-in scene name or scene file, rendered in place of --input.
    #[arg(long)]
    scene: Option<String>,
    /// Integer downscale of the scene rig.
    #[arg(long, default_value_t = 1)]
    downscale: usize,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Diagnostic only: smooth the raw depth map instead of the 3D points.
    #[arg(long)]
    smooth_depth_diagnostic: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Built-in scene name or scene file.
    #[arg(long)]
    scene: String,
    /// Integer downscale of the scene rig.
    #[arg(long, default_value_t = 1)]
    downscale: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset root holding gt/, calib/ and one directory per method.
    #[arg(long, visible_alias = "input")]
    dataset: PathBuf,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Pixels entering accuracy metrics: valid in gt, or in both maps.
    #[arg(long, default_value = "both", value_parser = parse_mask)]
    mask: MaskMode,
    /// Trim the pooled samples of each method once (default).
    #[arg(long, conflicts_with = "per_image")]
    aggregate: bool,
    /// Trim each image separately before pooling.
    #[arg(long)]
    per_image: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_mask(s: &str) -> Result<MaskMode, String> {
    s.parse().map_err(|e: curvelens::Error| e.to_string())
}

impl MetricArgs {
    fn apply(&self, config: &mut RunConfig, default_preset: &str) -> Result<()> {
        config.sigma = self.sigma;
        config.trim_fraction = self.trim;
        config.window = self.window;
        config.alpha = self.alpha;
        config.histogram = HistogramChoice::resolve(default_preset, self.preset.as_deref(), self.bins, self.range)?;
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Curvature(a) => {
            let mut config = RunConfig::new("curvature", a.out, "fig4");
            a.metrics.apply(&mut config, "fig4")?;
            config.input = a.input;
            config.input_kind = a.input_kind;
            config.calib = a.calib;
            config.scene = a.scene;
            config.downscale = a.downscale;
            config.smooth_depth_diagnostic = a.smooth_depth_diagnostic;
            let run = curvature_cmd::run(&config)?;
            let s = &run.report.sparsity;
            say!(
                "LGC {:.2}% (W = {}), entropy {:.3} bits, median K {:.4}, {} valid samples",
                s.lgc_percent, s.window_w, s.entropy_bits, s.k_median, run.report.n_valid_k
            );
            for f in &run.files {
                say!("wrote {}", f.display());
            }
        }
        Command::Synth(a) => {
            let mut config = RunConfig::new("synth", a.out, "fig4");
            config.scene = Some(a.scene);
            config.downscale = a.downscale;
            for f in synth_cmd::run(&config)? {
                say!("wrote {}", f.display());
            }
        }
        Command::Eval(a) => {
            let mut config = RunConfig::new("eval", a.out, "fig6");
            a.metrics.apply(&mut config, "fig6")?;
            config.dataset = Some(a.dataset);
            config.mask = a.mask;
            config.aggregation = if a.per_image { Aggregation::PerImage } else { Aggregation::Aggregate };
            let out = eval_cmd::run(&config)?;
            let _ = write!(std::io::stdout().lock(), "{}", out.table.to_text());
            say!("wrote reports to {}", config.out.display());
        }
        Command::Scenes => {
            for name in curvelens::synth::scene_names() {
                say!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = curvelens_cli::configure_threads().and_then(|()| run(cli)) {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
