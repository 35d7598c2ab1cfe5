//! Sparsity statistics of Gaussian curvature samples: trimming, normalized
//! histograms, the empirical prior and loss, the `sqrt|K|` regularizer, the
//! power-mean limit behind it, the LGC percentage and Shannon entropy.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default fraction of largest-`|K|` samples discarded before statistics.
pub const DEFAULT_TRIM: f64 = 0.20;
/// Default LGC window half-width in m^-2.
pub const DEFAULT_WINDOW: f64 = 1000.0;

/// Sort key for trimming: by `|K|`, then by signed value.
fn trim_order(a: f64, b: f64) -> Ordering {
    a.abs().total_cmp(&b.abs()).then(a.total_cmp(&b))
}

/// Number of samples removed by trimming `fraction` of `n`.
pub fn trim_count(n: usize, fraction: f64) -> usize {
    // guard against 0.7 * 10 = 7.000000000000001 rounding up to 8
    let raw = fraction * n as f64;
    let count = (raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize;
    count.min(n)
}

fn check_trim(fraction: f64) -> Result<()> {
    if (0.0..1.0).contains(&fraction) {
        Ok(())
    } else {
        Err(Error::param(format!("trim fraction must lie in [0, 1), got {fraction}")))
    }
}

/// Result of [`trim_top_abs`]: the kept samples in their original order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trimmed {
    pub kept: Vec<f64>,
    pub n_removed: usize,
}

/// Removes the `ceil(fraction * n)` samples with the largest `|K|`.
///
/// Samples are ordered by `|K|`, then by signed value, then by position; the
/// tail of that order is removed. The kept samples stay in input order.
pub fn trim_top_abs(values: &[f64], fraction: f64) -> Result<Trimmed> {
    check_trim(fraction)?;
    let n = values.len();
    let n_removed = trim_count(n, fraction);
    if n_removed == 0 {
        return Ok(Trimmed {
            kept: values.to_vec(),
            n_removed: 0,
        });
    }
    let n_keep = n - n_removed;
    if n_keep == 0 {
        return Ok(Trimmed {
            kept: Vec::new(),
            n_removed,
        });
    }
    // the largest kept sample under `trim_order`
    let mut scratch = values.to_vec();
    let (_, &mut pivot, _) = scratch.select_nth_unstable_by(n_keep - 1, |a, b| trim_order(*a, *b));
    let below = values.iter().filter(|&&v| trim_order(v, pivot) == Ordering::Less).count();
    let mut ties_left = n_keep - below;
    let mut kept = Vec::with_capacity(n_keep);
    for &v in values {
        match trim_order(v, pivot) {
            Ordering::Less => kept.push(v),
            Ordering::Equal if ties_left > 0 => {
                ties_left -= 1;
                kept.push(v);
            }
            _ => {}
        }
    }
    Ok(Trimmed { kept, n_removed })
}

/// Binning of a histogram: `bins` uniform bins over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl HistogramSpec {
    /// 30 bins over [-2500, 2500] m^-2, for dataset-wide distributions.
    pub const FIG4: HistogramSpec = HistogramSpec {
        lo: -2500.0,
        hi: 2500.0,
        bins: 30,
    };

    /// 50 bins over [-4000, 4000] m^-2, for comparing methods.
    pub const FIG6: HistogramSpec = HistogramSpec {
        lo: -4000.0,
        hi: 4000.0,
        bins: 50,
    };

    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        let spec = HistogramSpec { lo, hi, bins };
        spec.validate()?;
        Ok(spec)
    }

    /// Looks up a named preset (`fig4` or `fig6`).
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "fig4" => Some(Self::FIG4),
            "fig6" => Some(Self::FIG6),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::param("histogram needs at least one bin"));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::param(format!("histogram range [{}, {}] is empty", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..=self.bins)
            .map(|i| if i == self.bins { self.hi } else { self.lo + i as f64 * w })
            .collect()
    }

    /// Bin holding `k`: bins are `[lo_i, hi_i)` except the last, which is
    /// closed. `None` outside `[lo, hi]`.
    pub fn bin_of(&self, k: f64) -> Option<usize> {
        if !(k >= self.lo && k <= self.hi) {
            return None;
        }
        let idx = ((k - self.lo) / self.bin_width()).floor() as usize;
        Some(idx.min(self.bins - 1))
    }
}

/// Normalized histogram of trimmed curvature samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureHistogram {
    pub spec: HistogramSpec,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Frequencies over the in-range mass; `None` when no sample is in range.
    pub h: Option<Vec<f64>>,
    pub trim_fraction: f64,
    pub n_total: usize,
    pub n_trimmed: usize,
    pub n_out_of_range: usize,
}

impl CurvatureHistogram {
    pub fn n_in_bins(&self) -> usize {
        self.counts.iter().sum::<u64>() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_none()
    }

    pub fn frequencies(&self) -> Result<&[f64]> {
        self.h.as_deref().ok_or(Error::EmptyHistogram)
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    /// `bin_center,h` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center,h\n");
        let zeros = vec![0.0; self.counts.len()];
        let h = self.h.as_deref().unwrap_or(&zeros);
        for (c, f) in self.bin_centers().iter().zip(h) {
            let _ = writeln!(out, "{c},{f}");
        }
        out
    }
}

/// Trims `values`, bins the survivors and normalizes over the in-range mass.
pub fn histogram(values: &[f64], spec: &HistogramSpec, trim_fraction: f64) -> Result<CurvatureHistogram> {
    spec.validate()?;
    let trimmed = trim_top_abs(values, trim_fraction)?;
    Ok(histogram_of_kept(&trimmed.kept, values.len(), trimmed.n_removed, spec, trim_fraction))
}

/// Bins samples that were already trimmed upstream.
pub fn histogram_of_kept(
    kept: &[f64],
    n_total: usize,
    n_trimmed: usize,
    spec: &HistogramSpec,
    trim_fraction: f64,
) -> CurvatureHistogram {
    let mut counts = vec![0u64; spec.bins];
    let mut n_out_of_range = 0;
    for &k in kept {
        match spec.bin_of(k) {
            Some(b) => counts[b] += 1,
            None => n_out_of_range += 1,
        }
    }
    let in_range: u64 = counts.iter().sum();
    let h = (in_range > 0).then(|| counts.iter().map(|&c| c as f64 / in_range as f64).collect());
    CurvatureHistogram {
        spec: *spec,
        bin_edges: spec.edges(),
        counts,
        h,
        trim_fraction,
        n_total,
        n_trimmed,
        n_out_of_range,
    }
}

/// Value of the empirical loss `-ln h(K)`. Empty bins have unbounded loss,
/// kept distinct from any float so it cannot leak into arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    Finite(f64),
    Unbounded,
}

impl Loss {
    pub fn finite(self) -> Option<f64> {
        match self {
            Loss::Finite(v) => Some(v),
            Loss::Unbounded => None,
        }
    }

    /// Prior probability `P = exp(-L)`; zero for unbounded loss.
    pub fn prior(self) -> f64 {
        match self {
            Loss::Finite(v) => (-v).exp(),
            Loss::Unbounded => 0.0,
        }
    }
}

/// `L(K) = -ln h(K)` for the bin containing `K`.
pub fn empirical_loss(hist: &CurvatureHistogram, k: f64) -> Result<Loss> {
    let h = hist.frequencies()?;
    let bin = hist.spec.bin_of(k).ok_or(Error::OutOfSupport {
        value: k,
        lo: hist.spec.lo,
        hi: hist.spec.hi,
    })?;
    Ok(if h[bin] > 0.0 { Loss::Finite(-h[bin].ln()) } else { Loss::Unbounded })
}

/// Empirical prior `P(K) = exp(-L(K))`, i.e. the histogram frequency.
pub fn empirical_prior(hist: &CurvatureHistogram, k: f64) -> Result<f64> {
    empirical_loss(hist, k).map(Loss::prior)
}

/// Sparse curvature regularizer `alpha * sqrt|kappa1 kappa2|`, with `alpha`
/// in meters.
pub fn sparse_loss(kappa1: f64, kappa2: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param(format!("alpha must be positive, got {alpha}")));
    }
    Ok(alpha * p_mean_limit(kappa1, kappa2))
}

/// Power mean `((|k1|^p + |k2|^p) / 2)^(1/p)` for `p > 0`, evaluated in the
/// log domain so that small `p` neither overflows nor underflows.
pub fn p_mean(kappa1: f64, kappa2: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::param(format!("power-mean exponent must be positive, got {p}")));
    }
    let (a, b) = (kappa1.abs(), kappa2.abs());
    Ok(match (a == 0.0, b == 0.0) {
        (true, true) => 0.0,
        // (|k|^p / 2)^(1/p) = |k| * 2^(-1/p)
        (true, false) => b * (-std::f64::consts::LN_2 / p).exp(),
        (false, true) => a * (-std::f64::consts::LN_2 / p).exp(),
        (false, false) => {
            let (la, lb) = (p * a.ln(), p * b.ln());
            let hi = la.max(lb);
            let lse = hi + ((la - hi).exp() + (lb - hi).exp()).ln();
            ((lse - std::f64::consts::LN_2) / p).exp()
        }
    })
}

/// Limit of [`p_mean`] as `p -> 0`: the geometric mean `sqrt|k1 k2|`.
pub fn p_mean_limit(kappa1: f64, kappa2: f64) -> f64 {
    kappa1.abs().sqrt() * kappa2.abs().sqrt()
}

fn check_window(window: f64) -> Result<()> {
    if window > 0.0 && window.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("LGC window must be positive, got {window}")))
    }
}

/// Percentage of trimmed samples with `|K| <= window`.
pub fn lgc(values: &[f64], window: f64, trim_fraction: f64) -> Result<f64> {
    check_window(window)?;
    let trimmed = trim_top_abs(values, trim_fraction)?;
    lgc_of_kept(&trimmed.kept, window)
}

/// LGC of samples that were already trimmed.
pub fn lgc_of_kept(kept: &[f64], window: f64) -> Result<f64> {
    check_window(window)?;
    if kept.is_empty() {
        return Err(Error::NoSamples("LGC"));
    }
    let inside = kept.iter().filter(|k| k.abs() <= window).count();
    Ok(100.0 * inside as f64 / kept.len() as f64)
}

/// Shannon entropy of the histogram in bits.
pub fn shannon_entropy(hist: &CurvatureHistogram) -> Result<f64> {
    entropy_with_base(hist, 2.0)
}

/// Shannon entropy `-sum h log_base h` over non-empty bins.
pub fn entropy_with_base(hist: &CurvatureHistogram, base: f64) -> Result<f64> {
    if !(base > 0.0 && base != 1.0 && base.is_finite()) {
        return Err(Error::param(format!("entropy base must be positive and != 1, got {base}")));
    }
    let h = hist.frequencies()?;
    let nats: f64 = h.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
    Ok((nats / base.ln()).max(0.0))
}

/// Median of a sample set (mean of the two middle values for even sizes).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    let mid = v.len() / 2;
    let (lower, &mut upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    if values.len() % 2 == 1 {
        Some(upper)
    } else {
        let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (below + upper))
    }
}

/// Knobs for [`sparsity_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityConfig {
    pub window: f64,
    pub trim_fraction: f64,
    pub histogram: HistogramSpec,
    /// Weight of the `sqrt|K|` loss in meters; reported, never fitted.
    pub alpha: f64,
    pub entropy_base: f64,
}

impl Default for SparsityConfig {
    fn default() -> Self {
        SparsityConfig {
            window: DEFAULT_WINDOW,
            trim_fraction: DEFAULT_TRIM,
            histogram: HistogramSpec::FIG4,
            alpha: 1.0,
            entropy_base: 2.0,
        }
    }
}

/// Summary statistics of one curvature sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub lgc_percent: f64,
    #[serde(rename = "window_W")]
    pub window_w: f64,
    /// Entropy of the histogram, in units of `entropy_base` (bits by default).
    pub entropy_bits: f64,
    pub k_abs_max: f64,
    pub k_median: f64,
    pub k_abs_median: f64,
    pub alpha: f64,
    pub n_total: usize,
    pub n_trimmed: usize,
}

/// Trims `values` once and derives every statistic from the survivors.
pub fn sparsity_report(values: &[f64], cfg: &SparsityConfig) -> Result<(SparsityReport, CurvatureHistogram)> {
    let trimmed = trim_top_abs(values, cfg.trim_fraction)?;
    sparsity_report_of_kept(&trimmed.kept, values.len(), trimmed.n_removed, cfg)
}

/// Like [`sparsity_report`] for samples trimmed upstream, e.g. per image
/// before pooling.
pub fn sparsity_report_of_kept(
    kept: &[f64],
    n_total: usize,
    n_trimmed: usize,
    cfg: &SparsityConfig,
) -> Result<(SparsityReport, CurvatureHistogram)> {
    check_trim(cfg.trim_fraction)?;
    cfg.histogram.validate()?;
    let hist = histogram_of_kept(kept, n_total, n_trimmed, &cfg.histogram, cfg.trim_fraction);
    let lgc_percent = lgc_of_kept(kept, cfg.window)?;
    let entropy_bits = match hist.is_empty() {
        true => 0.0,
        false => entropy_with_base(&hist, cfg.entropy_base)?,
    };
    let abs: Vec<f64> = kept.iter().map(|k| k.abs()).collect();
    let report = SparsityReport {
        lgc_percent,
        window_w: cfg.window,
        entropy_bits,
        k_abs_max: abs.iter().copied().fold(0.0, f64::max),
        k_median: median(kept).ok_or(Error::NoSamples("median"))?,
        k_abs_median: median(&abs).ok_or(Error::NoSamples("median"))?,
        alpha: cfg.alpha,
        n_total,
        n_trimmed,
    };
    Ok((report, hist))
}
