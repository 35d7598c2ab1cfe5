//! Middlebury `calib.txt`: one `key=value` per line.
//!
//! ```text
//! cam0=[4729.73 0 1500; 0 4729.73 1000; 0 0 1]
//! cam1=[4729.73 0 1500; 0 4729.73 1000; 0 0 1]
//! doffs=0
//! baseline=200
//! width=3000
//! height=2000
//! ndisp=300
//! ```
//!
//! `baseline` is in millimeters. Unknown keys are ignored; missing required
//! keys are an error, never a default.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::CameraIntrinsics;
use crate::error::{Error, Result};

/// Parsed calibration: intrinsics plus the declared image size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub intrinsics: CameraIntrinsics,
    pub width: usize,
    pub height: usize,
    pub ndisp: Option<u32>,
}

pub fn read_calib(path: impl AsRef<Path>) -> Result<CameraIntrinsics> {
    read_calibration(path).map(|c| c.intrinsics)
}

pub fn read_calibration(path: impl AsRef<Path>) -> Result<Calibration> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_calib(&text)
}

pub fn parse_calib(text: &str) -> Result<Calibration> {
    let entries: HashMap<&str, &str> = text
        .lines()
        .filter_map(|line| line.split_once('='))
        .map(|(k, v)| (k.trim(), v.trim()))
        .collect();
    let get = |key: &'static str| entries.get(key).copied().ok_or(Error::MissingCalibKey(key));

    let cam0 = parse_matrix("cam0", get("cam0")?)?;
    if let Some(cam1) = entries.get("cam1") {
        parse_matrix("cam1", cam1)?;
    }
    let doffs = parse_number::<f64>("doffs", get("doffs")?)?;
    let baseline_mm = parse_number::<f64>("baseline", get("baseline")?)?;
    let width = parse_number::<usize>("width", get("width")?)?;
    let height = parse_number::<usize>("height", get("height")?)?;
    let ndisp = entries
        .get("ndisp")
        .map(|v| parse_number::<u32>("ndisp", v))
        .transpose()?;

    let intrinsics = CameraIntrinsics::new(cam0[0][0], cam0[1][1], cam0[0][2], cam0[1][2], baseline_mm / 1000.0, doffs)?;
    Ok(Calibration {
        intrinsics,
        width,
        height,
        ndisp,
    })
}

/// Renders a calibration in the layout [`parse_calib`] reads. Both cameras
/// share the same matrix.
pub fn format_calib(calib: &Calibration) -> String {
    let c = &calib.intrinsics;
    let matrix = format!("[{} 0 {}; 0 {} {}; 0 0 1]", c.fx, c.cx, c.fy, c.cy);
    let mut text = format!(
        "cam0={matrix}\ncam1={matrix}\ndoffs={}\nbaseline={}\nwidth={}\nheight={}\n",
        c.doffs_px,
        c.baseline_m * 1000.0,
        calib.width,
        calib.height
    );
    if let Some(ndisp) = calib.ndisp {
        text.push_str(&format!("ndisp={ndisp}\n"));
    }
    text
}

pub fn write_calib(calib: &Calibration, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_calib(calib)).map_err(|e| Error::io(path, e))
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::BadCalibValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_matrix(key: &str, value: &str) -> Result<[[f64; 3]; 3]> {
    let bad = || Error::BadCalibValue {
        key: key.to_string(),
        value: value.to_string(),
    };
    let inner = value
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .ok_or_else(bad)?;
    let rows: Vec<&str> = inner.split(';').collect();
    if rows.len() != 3 {
        return Err(bad());
    }
    let mut m = [[0.0; 3]; 3];
    for (r, row) in rows.iter().enumerate() {
        let cells: Vec<f64> = row
            .split_whitespace()
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if cells.len() != 3 {
            return Err(bad());
        }
        m[r].copy_from_slice(&cells);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYNTHETIC: &str = "cam0=[4729.73 0 1500; 0 4729.73 1000; 0 0 1]\n\
                             cam1=[4729.73 0 1500; 0 4729.73 1000; 0 0 1]\n\
                             doffs=0\nbaseline=200\nwidth=3000\nheight=2000\nndisp=400\nisint=0\nvmin=23\n";

    #[test]
    fn parses_synthetic_rig() {
        let c = parse_calib(SYNTHETIC).unwrap();
        assert_eq!(c.intrinsics.fx, 4729.73);
        assert_eq!(c.intrinsics.fy, 4729.73);
        assert_eq!(c.intrinsics.cx, 1500.0);
        assert_eq!(c.intrinsics.cy, 1000.0);
        assert!((c.intrinsics.baseline_m - 0.2).abs() < 1e-15);
        assert_eq!(c.intrinsics.doffs_px, 0.0);
        assert_eq!((c.width, c.height, c.ndisp), (3000, 2000, Some(400)));
    }

    #[test]
    fn millimeter_baseline_is_converted() {
        let text = SYNTHETIC.replace("baseline=200", "baseline=193.001");
        let c = parse_calib(&text).unwrap();
        assert!((c.intrinsics.baseline_m - 0.193001).abs() < 1e-15);
    }

    #[test]
    fn missing_doffs_is_an_error() {
        let text = SYNTHETIC.replace("doffs=0\n", "");
        assert!(matches!(parse_calib(&text), Err(Error::MissingCalibKey("doffs"))));
    }

    #[test]
    fn bad_matrix_is_an_error() {
        let text = SYNTHETIC.replace("[4729.73 0 1500; 0 4729.73 1000; 0 0 1]\ncam1", "[4729.73 0 1500; 0 4729.73]\ncam1");
        assert!(matches!(parse_calib(&text), Err(Error::BadCalibValue { .. })));
    }

    #[test]
    fn format_round_trips() {
        let c = parse_calib(SYNTHETIC).unwrap();
        assert_eq!(parse_calib(&format_calib(&c)).unwrap(), c);
    }
}
