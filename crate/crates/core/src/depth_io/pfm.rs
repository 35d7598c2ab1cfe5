//! Greyscale Portable Float Map (`Pf`) files.
//!
//! Layout: `Pf`, the dimensions `W H`, a scale whose sign gives the byte
//! order (negative = little-endian), one whitespace byte, then `W * H`
//! 4-byte floats stored bottom row first.

use std::fs;
use std::path::Path;

use super::grid::{Grid, SampleKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Endianness {
    #[default]
    Little,
    Big,
}

/// Header fields of a decoded PFM file. `scale` is the magnitude of the
/// scale line; it is kept as metadata and never applied to the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfmHeader {
    pub width: usize,
    pub height: usize,
    pub scale: f32,
    pub endianness: Endianness,
}

pub fn read_pfm<K: SampleKind>(path: impl AsRef<Path>) -> Result<Grid<K>> {
    read_pfm_with_header(path).map(|(grid, _)| grid)
}

pub fn read_pfm_with_header<K: SampleKind>(path: impl AsRef<Path>) -> Result<(Grid<K>, PfmHeader)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes)
}

/// Decodes an in-memory PFM file. Rows are flipped so that the first row
/// of the grid is the top of the image; non-finite samples (Middlebury uses
/// `inf` for unknown disparity) and samples not admissible for `K` are
/// marked invalid.
pub fn decode_pfm<K: SampleKind>(bytes: &[u8]) -> Result<(Grid<K>, PfmHeader)> {
    let mut cursor = 0usize;
    let magic = next_token(bytes, &mut cursor)?;
    match magic {
        b"Pf" => {}
        b"PF" => return Err(Error::ColorPfm),
        other => {
            return Err(Error::MalformedPfm(format!(
                "bad magic `{}`",
                String::from_utf8_lossy(other)
            )))
        }
    }
    let width = parse_token::<usize>(next_token(bytes, &mut cursor)?, "width")?;
    let height = parse_token::<usize>(next_token(bytes, &mut cursor)?, "height")?;
    let scale = parse_token::<f32>(next_token(bytes, &mut cursor)?, "scale")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedPfm(format!("empty image {width}x{height}")));
    }
    if !scale.is_finite() || scale == 0.0 {
        return Err(Error::MalformedPfm(format!("scale must be finite and non-zero, got {scale}")));
    }
    // exactly one whitespace byte separates the header from the payload
    match bytes.get(cursor) {
        Some(b) if b.is_ascii_whitespace() => cursor += 1,
        _ => return Err(Error::MalformedPfm("missing newline after scale".into())),
    }

    let endianness = if scale < 0.0 { Endianness::Little } else { Endianness::Big };
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedPfm("dimensions overflow".into()))?;
    let payload = &bytes[cursor..];
    if payload.len() != 4 * n {
        return Err(Error::PfmSizeMismatch {
            expected: 4 * n,
            actual: payload.len(),
        });
    }

    let mut values = vec![0.0f64; n];
    for (file_row, chunk) in payload.chunks_exact(4 * width).enumerate() {
        let y = height - 1 - file_row;
        let row = &mut values[y * width..(y + 1) * width];
        for (dst, raw) in row.iter_mut().zip(chunk.chunks_exact(4)) {
            let raw = [raw[0], raw[1], raw[2], raw[3]];
            let sample = match endianness {
                Endianness::Little => f32::from_le_bytes(raw),
                Endianness::Big => f32::from_be_bytes(raw),
            };
            *dst = f64::from(sample);
        }
    }
    let grid = Grid::from_values(width, height, values)?;
    let header = PfmHeader {
        width,
        height,
        scale: scale.abs(),
        endianness,
    };
    Ok((grid, header))
}

/// Encodes a grid with scale magnitude 1. Samples are stored as `f32`;
/// invalid pixels are written as `+inf`.
pub fn encode_pfm<K: SampleKind>(grid: &Grid<K>, endianness: Endianness) -> Vec<u8> {
    encode_scaled(grid, endianness, 1.0)
}

/// Writes `grid` as a PFM file with scale magnitude 1.
///
/// Reading the file back reproduces the grid exactly whenever its valid
/// samples are representable as `f32`.
pub fn write_pfm<K: SampleKind>(grid: &Grid<K>, path: impl AsRef<Path>, endianness: Endianness) -> Result<()> {
    write_pfm_scaled(grid, path, endianness, 1.0)
}

pub fn write_pfm_scaled<K: SampleKind>(
    grid: &Grid<K>,
    path: impl AsRef<Path>,
    endianness: Endianness,
    scale: f32,
) -> Result<()> {
    if grid.width() == 0 || grid.height() == 0 {
        return Err(Error::param("PFM dimensions must be positive"));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::param(format!("PFM scale magnitude must be positive, got {scale}")));
    }
    let path = path.as_ref();
    fs::write(path, encode_scaled(grid, endianness, scale)).map_err(|e| Error::io(path, e))
}

fn encode_scaled<K: SampleKind>(grid: &Grid<K>, endianness: Endianness, scale: f32) -> Vec<u8> {
    let (w, h) = (grid.width(), grid.height());
    let signed = match endianness {
        Endianness::Little => -scale,
        Endianness::Big => scale,
    };
    let mut out = format!("Pf\n{w} {h}\n{}\n", format_scale(signed)).into_bytes();
    out.reserve(4 * w * h);
    let (values, valid) = (grid.values(), grid.valid());
    for y in (0..h).rev() {
        for i in y * w..(y + 1) * w {
            let sample = if valid[i] { values[i] as f32 } else { f32::INFINITY };
            match endianness {
                Endianness::Little => out.extend_from_slice(&sample.to_le_bytes()),
                Endianness::Big => out.extend_from_slice(&sample.to_be_bytes()),
            }
        }
    }
    out
}

fn format_scale(scale: f32) -> String {
    if scale.fract() == 0.0 {
        format!("{scale:.1}")
    } else {
        format!("{scale}")
    }
}

fn next_token<'a>(bytes: &'a [u8], cursor: &mut usize) -> Result<&'a [u8]> {
    while bytes.get(*cursor).is_some_and(u8::is_ascii_whitespace) {
        *cursor += 1;
    }
    let start = *cursor;
    while bytes.get(*cursor).is_some_and(|b| !b.is_ascii_whitespace()) {
        *cursor += 1;
    }
    if start == *cursor {
        return Err(Error::MalformedPfm("truncated header".into()));
    }
    Ok(&bytes[start..*cursor])
}

fn parse_token<T: std::str::FromStr>(token: &[u8], what: &str) -> Result<T> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::MalformedPfm(format!("unparsable {what} `{}`", String::from_utf8_lossy(token))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth_io::{DepthGrid, Disparity, Scalar, ScalarGrid};

    fn pfm_bytes(header: &str, samples: &[f32], endianness: Endianness) -> Vec<u8> {
        let mut out = header.as_bytes().to_vec();
        for s in samples {
            match endianness {
                Endianness::Little => out.extend_from_slice(&s.to_le_bytes()),
                Endianness::Big => out.extend_from_slice(&s.to_be_bytes()),
            }
        }
        out
    }

    #[test]
    fn rows_are_flipped_on_load() {
        let bytes = pfm_bytes("Pf\n2 2\n-1.0\n", &[1.0, 2.0, 3.0, 4.0], Endianness::Little);
        let (g, header) = decode_pfm::<Disparity>(&bytes).unwrap();
        assert_eq!(g.values(), &[3.0, 4.0, 1.0, 2.0]);
        assert!(g.valid().iter().all(|&v| v));
        assert_eq!(header.endianness, Endianness::Little);
        assert_eq!(header.scale, 1.0);
    }

    #[test]
    fn infinite_sample_is_invalid() {
        let bytes = pfm_bytes("Pf\n2 2\n-1.0\n", &[1.0, f32::INFINITY, 3.0, 4.0], Endianness::Little);
        let (g, _) = decode_pfm::<Disparity>(&bytes).unwrap();
        // second payload sample is bottom row, column 1
        assert_eq!(g.get(1, 1), None);
        assert_eq!(g.valid_count(), 3);
    }

    #[test]
    fn big_endian_and_scale_metadata() {
        let bytes = pfm_bytes("Pf\n1 2\n2.5\n", &[7.0, 8.0], Endianness::Big);
        let (g, header) = decode_pfm::<Disparity>(&bytes).unwrap();
        assert_eq!(g.values(), &[8.0, 7.0]);
        assert_eq!(header.endianness, Endianness::Big);
        assert_eq!(header.scale, 2.5);
    }

    #[test]
    fn single_pixel_layout() {
        let g = DepthGrid::from_values(1, 1, vec![5.0]).unwrap();
        let bytes = encode_pfm(&g, Endianness::Little);
        assert_eq!(&bytes[..12], b"Pf\n1 1\n-1.0\n");
        assert_eq!(&bytes[12..], &5.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 16);
    }

    #[test]
    fn invalid_pixel_is_written_as_inf() {
        let g = ScalarGrid::from_parts(2, 1, vec![1.0, 2.0], vec![true, false]).unwrap();
        let bytes = encode_pfm(&g, Endianness::Little);
        assert_eq!(&bytes[bytes.len() - 4..], &f32::INFINITY.to_le_bytes());
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            decode_pfm::<Scalar>(b"PF\n1 1\n-1.0\n\0\0\0\0\0\0\0\0\0\0\0\0"),
            Err(Error::ColorPfm)
        ));
        assert!(matches!(decode_pfm::<Scalar>(b"P5\n1 1\n"), Err(Error::MalformedPfm(_))));
        assert!(matches!(decode_pfm::<Scalar>(b"Pf\n1 x\n-1\n"), Err(Error::MalformedPfm(_))));
        assert!(matches!(decode_pfm::<Scalar>(b"Pf\n1 1\n0\n\0\0\0\0"), Err(Error::MalformedPfm(_))));
        assert!(matches!(decode_pfm::<Scalar>(b"Pf\n1 1"), Err(Error::MalformedPfm(_))));
        assert!(matches!(
            decode_pfm::<Scalar>(b"Pf\n2 1\n-1.0\n\0\0\0\0"),
            Err(Error::PfmSizeMismatch { expected: 8, actual: 4 })
        ));
    }

    #[test]
    fn scale_formatting() {
        assert_eq!(format_scale(-1.0), "-1.0");
        assert_eq!(format_scale(1.0), "1.0");
        assert_eq!(format_scale(-0.5), "-0.5");
    }
}
