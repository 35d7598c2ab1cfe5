//! Disparity and depth accuracy metrics, and a combined ranking table that
//! orders methods by curvature sparsity.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::depth_io::{DepthGrid, DisparityGrid, Grid, SampleKind};
use crate::error::{Error, Result};
use crate::metrics::SparsityReport;

/// Default bad-pixel thresholds in pixels.
pub const DEFAULT_TAUS: [f64; 2] = [0.5, 2.0];

/// Which pixels enter the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    /// Pixels valid in the ground truth. Estimate holes count as bad at
    /// every threshold but do not enter AvgErr or RMS.
    Gt,
    /// Pixels valid in both maps.
    #[default]
    Both,
}

impl std::str::FromStr for MaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gt" => Ok(MaskMode::Gt),
            "both" => Ok(MaskMode::Both),
            other => Err(Error::param(format!("mask mode must be `gt` or `both`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BadPixelRate {
    pub tau: f64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub avg_err_px: f64,
    pub rms_px: f64,
    pub bad: Vec<BadPixelRate>,
    pub depth_avg_err_cm: Option<f64>,
    pub n_evaluated: usize,
    /// Pixels valid in both maps; the population of AvgErr and RMS.
    pub n_compared: usize,
}

impl AccuracyReport {
    pub fn bad_percent(&self, tau: f64) -> Option<f64> {
        self.bad.iter().find(|b| b.tau == tau).map(|b| b.percent)
    }
}

/// Per-row partial sums, merged in row order so results do not depend on
/// how rows were scheduled.
#[derive(Debug, Clone, Default)]
struct ErrorSums {
    abs: f64,
    sq: f64,
    n_err: usize,
    n_eval: usize,
    over: Vec<usize>,
}

fn error_sums<K: SampleKind>(est: &Grid<K>, gt: &Grid<K>, taus: &[f64], mask: MaskMode) -> Result<ErrorSums> {
    if est.width() != gt.width() || est.height() != gt.height() {
        return Err(Error::DimensionMismatch(est.width(), est.height(), gt.width(), gt.height()));
    }
    let w = gt.width();
    let rows = crate::par::map_range(gt.height(), |y| {
        let mut s = ErrorSums {
            over: vec![0; taus.len()],
            ..Default::default()
        };
        for i in y * w..(y + 1) * w {
            let (gt_ok, est_ok) = (gt.valid()[i], est.valid()[i]);
            match (gt_ok, est_ok, mask) {
                (true, true, _) => {
                    let e = (est.values()[i] - gt.values()[i]).abs();
                    s.abs += e;
                    s.sq += e * e;
                    s.n_err += 1;
                    s.n_eval += 1;
                    for (c, &t) in s.over.iter_mut().zip(taus) {
                        *c += usize::from(e > t);
                    }
                }
                (true, false, MaskMode::Gt) => {
                    s.n_eval += 1;
                    s.over.iter_mut().for_each(|c| *c += 1);
                }
                _ => {}
            }
        }
        s
    });
    let mut total = ErrorSums {
        over: vec![0; taus.len()],
        ..Default::default()
    };
    for r in rows {
        total.abs += r.abs;
        total.sq += r.sq;
        total.n_err += r.n_err;
        total.n_eval += r.n_eval;
        for (t, c) in total.over.iter_mut().zip(r.over) {
            *t += c;
        }
    }
    if total.n_err == 0 {
        return Err(Error::EmptyOverlap);
    }
    Ok(total)
}

/// AvgErr, RMS and bad-pixel percentages of `est` against `gt`.
pub fn compare_disparity(est: &DisparityGrid, gt: &DisparityGrid, taus: &[f64], mask: MaskMode) -> Result<AccuracyReport> {
    if let Some(t) = taus.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::param(format!("bad-pixel threshold must be >= 0, got {t}")));
    }
    let s = error_sums(est, gt, taus, mask)?;
    let n = s.n_err as f64;
    Ok(AccuracyReport {
        avg_err_px: s.abs / n,
        rms_px: (s.sq / n).sqrt(),
        bad: taus
            .iter()
            .zip(&s.over)
            .map(|(&tau, &c)| BadPixelRate {
                tau,
                percent: 100.0 * c as f64 / s.n_eval as f64,
            })
            .collect(),
        depth_avg_err_cm: None,
        n_evaluated: s.n_eval,
        n_compared: s.n_err,
    })
}

/// Pixel-weighted combination of per-image reports, as if every image had
/// been evaluated as one. Depth errors are weighted by `n_compared` and
/// pooled only when every report carries one.
pub fn pool_accuracy(reports: &[AccuracyReport]) -> Result<AccuracyReport> {
    let first = reports.first().ok_or(Error::NoSamples("pooled accuracy"))?;
    let taus: Vec<f64> = first.bad.iter().map(|b| b.tau).collect();
    if reports.iter().any(|r| r.bad.iter().map(|b| b.tau).ne(taus.iter().copied())) {
        return Err(Error::param("reports use different bad-pixel thresholds"));
    }
    let n_cmp: usize = reports.iter().map(|r| r.n_compared).sum();
    let n_eval: usize = reports.iter().map(|r| r.n_evaluated).sum();
    if n_cmp == 0 {
        return Err(Error::EmptyOverlap);
    }
    let weighted = |f: &dyn Fn(&AccuracyReport) -> f64| reports.iter().map(|r| f(r) * r.n_compared as f64).sum::<f64>() / n_cmp as f64;
    let bad = taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| BadPixelRate {
            tau,
            percent: reports.iter().map(|r| r.bad[i].percent * r.n_evaluated as f64).sum::<f64>() / n_eval as f64,
        })
        .collect();
    let depth = reports
        .iter()
        .all(|r| r.depth_avg_err_cm.is_some())
        .then(|| weighted(&|r| r.depth_avg_err_cm.unwrap_or(0.0)));
    Ok(AccuracyReport {
        avg_err_px: weighted(&|r| r.avg_err_px),
        rms_px: weighted(&|r| r.rms_px * r.rms_px).sqrt(),
        bad,
        depth_avg_err_cm: depth,
        n_evaluated: n_eval,
        n_compared: n_cmp,
    })
}

/// Mean absolute depth error in centimeters.
pub fn compare_depth(est: &DepthGrid, gt: &DepthGrid, mask: MaskMode) -> Result<f64> {
    let s = error_sums(est, gt, &[], mask)?;
    Ok(100.0 * s.abs / s.n_err as f64)
}

/// One method's results for [`rank_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub name: String,
    /// `None` for reference rows such as the ground truth itself.
    pub accuracy: Option<AccuracyReport>,
    pub sparsity: SparsityReport,
}

/// A table row: the entry plus its 1-based rank on each accuracy metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub entry: RankEntry,
    pub rank_avg_err: Option<usize>,
    pub rank_rms: Option<usize>,
    /// Ranks for each bad-pixel threshold, aligned with `RankTable::taus`.
    pub rank_bad: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub taus: Vec<f64>,
    pub rows: Vec<RankRow>,
}

fn competition_ranks(values: &[Option<f64>]) -> Vec<Option<usize>> {
    values
        .iter()
        .map(|v| v.map(|x| 1 + values.iter().flatten().filter(|&&o| o < x).count()))
        .collect()
}

/// Orders entries by descending LGC (ties by name) and ranks every entry
/// with accuracy data on AvgErr, RMS and each bad-pixel rate (lower is
/// better; equal values share a rank).
pub fn rank_report(entries: &[RankEntry]) -> Result<RankTable> {
    if entries.is_empty() {
        return Err(Error::NoSamples("ranking"));
    }
    let mut sorted: Vec<RankEntry> = entries.to_vec();
    sorted.sort_by(|a, b| {
        b.sparsity
            .lgc_percent
            .partial_cmp(&a.sparsity.lgc_percent)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.name.cmp(&b.name))
    });
    let taus: Vec<f64> = sorted
        .iter()
        .find_map(|e| e.accuracy.as_ref())
        .map(|a| a.bad.iter().map(|b| b.tau).collect())
        .unwrap_or_default();

    let metric = |f: &dyn Fn(&AccuracyReport) -> Option<f64>| -> Vec<Option<usize>> {
        let vals: Vec<Option<f64>> = sorted.iter().map(|e| e.accuracy.as_ref().and_then(f)).collect();
        competition_ranks(&vals)
    };
    let avg = metric(&|a| Some(a.avg_err_px));
    let rms = metric(&|a| Some(a.rms_px));
    let bad: Vec<Vec<Option<usize>>> = taus.iter().map(|&t| metric(&|a| a.bad_percent(t))).collect();

    let rows = sorted
        .into_iter()
        .enumerate()
        .map(|(i, entry)| RankRow {
            entry,
            rank_avg_err: avg[i],
            rank_rms: rms[i],
            rank_bad: bad.iter().map(|b| b[i]).collect(),
        })
        .collect();
    Ok(RankTable { taus, rows })
}

fn cell(value: Option<f64>, rank: Option<usize>, digits: usize) -> String {
    match (value, rank) {
        (Some(v), Some(r)) => format!("{v:.digits$}^{r}"),
        (Some(v), None) => format!("{v:.digits$}"),
        _ => "---".to_string(),
    }
}

impl RankTable {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["Technique".to_string(), "LGC".into(), "MedianK".into(), "AvgErr".into(), "RMS".into()];
        h.extend(self.taus.iter().map(|t| format!("Bad {t:.1}")));
        h
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                let acc = row.entry.accuracy.as_ref();
                let mut c = vec![
                    row.entry.name.clone(),
                    format!("{:.1}", row.entry.sparsity.lgc_percent),
                    format!("{:.1}", row.entry.sparsity.k_median),
                    cell(acc.map(|a| a.avg_err_px), row.rank_avg_err, 2),
                    cell(acc.map(|a| a.rms_px), row.rank_rms, 2),
                ];
                for (i, &t) in self.taus.iter().enumerate() {
                    c.push(cell(acc.and_then(|a| a.bad_percent(t)), row.rank_bad[i], 2));
                }
                c
            })
            .collect()
    }

    /// Aligned plain-text table; `^n` marks the rank on each metric.
    pub fn to_text(&self) -> String {
        let header = self.header();
        let body = self.cells();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| body.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String]| -> String {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, s)| if i == 0 { format!("{s:<w$}", w = widths[i]) } else { format!("{s:>w$}", w = widths[i]) })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = line(&header);
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
        out.push('\n');
        for row in &body {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }

    /// HTML `<table>` fragment with ranks as superscripts.
    pub fn to_html(&self) -> String {
        let mut out = String::from("<table class=\"curvelens-ranking\">\n<thead><tr>");
        for h in self.header() {
            let _ = write!(out, "<th>{}</th>", escape_html(&h));
        }
        out.push_str("</tr></thead>\n<tbody>\n");
        for row in self.cells() {
            out.push_str("<tr>");
            for c in row {
                let html = match c.split_once('^') {
                    Some((v, r)) => format!("{}<sup>{}</sup>", escape_html(v), escape_html(r)),
                    None => escape_html(&c),
                };
                let _ = write!(out, "<td>{html}</td>");
            }
            out.push_str("</tr>\n");
        }
        out.push_str("</tbody>\n</table>\n");
        out
    }

    /// One CSV row per entry with numeric ranks in separate columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("technique,lgc_percent,k_median,avg_err_px,rank_avg_err,rms_px,rank_rms");
        for t in &self.taus {
            let _ = write!(out, ",bad_{t},rank_bad_{t}");
        }
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let optr = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        for row in &self.rows {
            let acc = row.entry.accuracy.as_ref();
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                row.entry.name,
                row.entry.sparsity.lgc_percent,
                row.entry.sparsity.k_median,
                opt(acc.map(|a| a.avg_err_px)),
                optr(row.rank_avg_err),
                opt(acc.map(|a| a.rms_px)),
                optr(row.rank_rms)
            );
            for (i, &t) in self.taus.iter().enumerate() {
                let _ = write!(out, ",{},{}", opt(acc.and_then(|a| a.bad_percent(t))), optr(row.rank_bad[i]));
            }
            out.push('\n');
        }
        out
    }
}

fn escape_html(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
