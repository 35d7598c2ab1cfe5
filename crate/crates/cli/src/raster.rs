//! False-colour PNG export of a curvature map.

use std::path::Path;

use anyhow::{Context, Result};
use curvelens::CurvatureField;
use image::{Rgb, RgbImage};

/// Signed K inside `[-window, window]` fades from white to red (positive) or
/// blue (negative) at `|K| = window`. Pixels outside the window and invalid
/// pixels are black.
pub fn curvature_image(field: &CurvatureField, window: f64) -> RgbImage {
    let w = field.width();
    RgbImage::from_fn(w as u32, field.height() as u32, |x, y| {
        let i = y as usize * w + x as usize;
        let k = field.k()[i];
        if !field.valid()[i] || k.abs() > window {
            return Rgb([0, 0, 0]);
        }
        let fade = (255.0 * (1.0 - k.abs() / window)).round() as u8;
        if k >= 0.0 {
            Rgb([255, fade, fade])
        } else {
            Rgb([fade, fade, 255])
        }
    })
}

pub fn write_curvature_png(field: &CurvatureField, window: f64, path: &Path) -> Result<()> {
    curvature_image(field, window)
        .save_with_format(path, image::ImageFormat::Png)
        .with_context(|| format!("writing {}", path.display()))
}
