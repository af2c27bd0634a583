//! Netpbm PPM raster IO (binary P6 read/write, ASCII P3 read), 8-bit only.

use std::fs;
use std::path::Path;

use crowdped_core::augmentation::RasterImage;

use crate::error::{Error, Result};

fn bad(path: &Path, reason: impl Into<String>) -> Error {
    Error::Raster {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Splits the header into whitespace-separated tokens, skipping `#` comments.
/// Returns the tokens and the offset just past the single whitespace byte that
/// terminates the last one.
fn header_tokens(bytes: &[u8], wanted: usize) -> Option<(Vec<&[u8]>, usize)> {
    let mut tokens = Vec::with_capacity(wanted);
    let mut i = 0;
    while tokens.len() < wanted {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return None;
        }
        tokens.push(&bytes[start..i]);
    }
    Some((tokens, i + 1))
}

fn number(tok: &[u8]) -> Option<usize> {
    std::str::from_utf8(tok).ok()?.parse().ok()
}

pub fn decode_ppm(bytes: &[u8], path: &Path) -> Result<RasterImage> {
    let (tokens, offset) = header_tokens(bytes, 4).ok_or_else(|| bad(path, "truncated header"))?;
    let magic = tokens[0];
    let (w, h, maxval) = match (number(tokens[1]), number(tokens[2]), number(tokens[3])) {
        (Some(w), Some(h), Some(m)) => (w, h, m),
        _ => return Err(bad(path, "malformed header")),
    };
    if maxval != 255 {
        return Err(bad(path, format!("unsupported maxval {maxval}")));
    }
    let n = w * h * 3;
    let data: Vec<f32> = match magic {
        b"P6" => {
            let body = bytes
                .get(offset..offset + n)
                .ok_or_else(|| bad(path, "truncated pixel data"))?;
            body.iter().map(|&v| f32::from(v)).collect()
        }
        b"P3" => {
            let text = std::str::from_utf8(bytes.get(offset..).unwrap_or_default())
                .map_err(|_| bad(path, "non-ASCII P3 body"))?;
            let values: Vec<f32> = text
                .split_ascii_whitespace()
                .take(n)
                .map(|t| t.parse::<u8>().map(f32::from))
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(path, "bad sample value"))?;
            if values.len() != n {
                return Err(bad(path, "truncated pixel data"));
            }
            values
        }
        _ => return Err(bad(path, "not a P3/P6 PPM file")),
    };
    Ok(RasterImage::new(w, h, data)?)
}

/// P6 encoding; samples are rounded and clamped to `0..=255`.
pub fn encode_ppm(img: &RasterImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(
        img.data()
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8),
    );
    out
}

pub fn read_ppm(path: &Path) -> Result<RasterImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes, path)
}

pub fn write_ppm(path: &Path, img: &RasterImage) -> Result<()> {
    fs::write(path, encode_ppm(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p6_round_trip() {
        let data: Vec<f32> = (0..4 * 3 * 3).map(|v| (v * 7 % 256) as f32).collect();
        let img = RasterImage::new(4, 3, data).unwrap();
        let back = decode_ppm(&encode_ppm(&img), Path::new("mem")).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn p3_with_comments() {
        let text = b"P3\n# a comment\n2 1\n255\n1 2 3  4 5 6\n";
        let img = decode_ppm(text, Path::new("mem")).unwrap();
        assert_eq!(img.pixel(1, 0), [4.0, 5.0, 6.0]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(decode_ppm(b"P5\n1 1\n255\n\0", Path::new("m")).is_err());
        assert!(decode_ppm(b"P6\n2 2\n255\n\0\0", Path::new("m")).is_err());
        assert!(decode_ppm(b"P6\n1 1\n65535\n\0\0\0\0\0\0", Path::new("m")).is_err());
    }

    #[test]
    fn fill_value_rounds_on_write() {
        let img = RasterImage::filled(1, 1, crowdped_core::augmentation::IMAGENET_MEAN_RGB);
        assert_eq!(&encode_ppm(&img)[11..], &[124, 116, 104]);
    }
}
