//! Parameters shared by every command, echoed into each report.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use curvelens::metrics::{SparsityConfig, DEFAULT_TRIM, DEFAULT_WINDOW};
use curvelens::stereo_eval::{MaskMode, DEFAULT_TAUS};
use curvelens::{HistogramSpec, SmoothingParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Disparity,
    Depth,
}

impl FromStr for InputKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "disparity" => Ok(InputKind::Disparity),
            "depth" => Ok(InputKind::Depth),
            other => Err(format!("unknown input kind `{other}` (expected disparity or depth)")),
        }
    }
}

/// Where trimming happens when several images are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Trim the pooled samples once.
    Aggregate,
    /// Trim each image, then pool the survivors.
    PerImage,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Aggregate => "aggregate",
            Aggregation::PerImage => "per-image",
        })
    }
}

/// Histogram binning: a named preset or explicit range and bin count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramChoice {
    pub preset: Option<String>,
    pub spec: HistogramSpec,
}

impl HistogramChoice {
    pub fn preset(name: &str) -> Result<Self> {
        let spec = HistogramSpec::preset(name).with_context(|| format!("unknown histogram preset `{name}` (expected fig4 or fig6)"))?;
        Ok(HistogramChoice {
            preset: Some(name.to_ascii_lowercase()),
            spec,
        })
    }

    /// Resolves `--preset`, `--bins` and `--range`. Explicit values override
    /// the corresponding part of the preset.
    pub fn resolve(default_preset: &str, preset: Option<&str>, bins: Option<usize>, range: Option<(f64, f64)>) -> Result<Self> {
        let mut choice = Self::preset(preset.unwrap_or(default_preset))?;
        if bins.is_some() || range.is_some() {
            let (lo, hi) = range.unwrap_or((choice.spec.lo, choice.spec.hi));
            choice = HistogramChoice {
                preset: None,
                spec: HistogramSpec::new(lo, hi, bins.unwrap_or(choice.spec.bins))?,
            };
        }
        Ok(choice)
    }
}

/// Parses `lo,hi` (also accepts `lo:hi`).
pub fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once([',', ':'])
        .ok_or_else(|| format!("range `{s}` must look like LO,HI"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad range bound `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad range bound `{b}`"))?;
    Ok((lo, hi))
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub input: Option<PathBuf>,
    pub input_kind: InputKind,
    pub calib: Option<PathBuf>,
    pub scene: Option<String>,
    pub dataset: Option<PathBuf>,
    /// Gaussian sigma in grid (pixel) units; 0 disables smoothing.
    pub sigma: f64,
    pub trim_fraction: f64,
    pub window: f64,
    pub histogram: HistogramChoice,
    pub aggregation: Aggregation,
    pub mask: MaskMode,
    pub taus: Vec<f64>,
    pub alpha: f64,
    pub downscale: usize,
    pub smooth_depth_diagnostic: bool,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(command: &str, out: impl Into<PathBuf>, default_preset: &str) -> Self {
        RunConfig {
            command: command.to_string(),
            input: None,
            input_kind: InputKind::Disparity,
            calib: None,
            scene: None,
            dataset: None,
            sigma: 0.0,
            trim_fraction: DEFAULT_TRIM,
            window: DEFAULT_WINDOW,
            histogram: HistogramChoice::preset(default_preset).expect("built-in preset"),
            aggregation: Aggregation::Aggregate,
            mask: MaskMode::default(),
            taus: DEFAULT_TAUS.to_vec(),
            alpha: 1.0,
            downscale: 1,
            smooth_depth_diagnostic: false,
            out: out.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.trim_fraction) {
            bail!("--trim must lie in [0, 1), got {}", self.trim_fraction);
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            bail!("--window must be positive, got {}", self.window);
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            bail!("--alpha must be positive, got {}", self.alpha);
        }
        if self.downscale == 0 {
            bail!("--downscale must be at least 1");
        }
        if self.taus.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            bail!("bad-pixel thresholds must be non-negative");
        }
        self.histogram.spec.validate()?;
        self.smoothing()?;
        Ok(())
    }

    pub fn smoothing(&self) -> Result<SmoothingParams> {
        Ok(SmoothingParams::new(self.sigma)?)
    }

    pub fn sparsity(&self) -> SparsityConfig {
        SparsityConfig {
            window: self.window,
            trim_fraction: self.trim_fraction,
            histogram: self.histogram.spec,
            alpha: self.alpha,
            entropy_base: 2.0,
        }
    }

    /// Writes `run.json` into `dir`.
    pub fn write_sidecar(&self, dir: &Path) -> Result<()> {
        crate::write_json(&dir.join("run.json"), self)
    }
}
