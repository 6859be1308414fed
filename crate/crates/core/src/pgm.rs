//! Minimal binary PGM (P5) image reading and writing, 8-bit only.
//!
//! The header grammar follows the Netpbm convention: the `P5` magic, then
//! width, height, and maxval tokens separated by whitespace, with `#`
//! comments allowed between tokens, followed by a single whitespace byte and
//! `width * height` raw sample bytes.

use crate::error::{Error, Result};
use std::path::Path;

/// An 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    /// Width in pixels.
    pub width: usize,
    /// Height in pixels.
    pub height: usize,
    /// Row-major samples, length `width * height`.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    /// Build an image, checking the buffer length.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| Error::Image(format!("dimensions {width}x{height} overflow")))?;
        if width == 0 || height == 0 {
            return Err(Error::Image(format!("empty image {width}x{height}")));
        }
        if pixels.len() != expected {
            return Err(Error::LengthMismatch {
                context: "pixel buffer vs dimensions",
                expected,
                actual: pixels.len(),
            });
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    /// Pixels as floating-point values.
    pub fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| f64::from(p)).collect()
    }

    /// Build an image from floating-point values by clamping to `[0, 255]`
    /// and rounding half away from zero.
    pub fn from_f64(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        let pixels = values
            .iter()
            .map(|&v| v.clamp(0.0, 255.0).round() as u8)
            .collect();
        GrayImage::new(width, height, pixels)
    }
}

struct Tokenizer<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokenizer<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Tokenizer { bytes, pos: 0 }
    }

    /// Advance past whitespace and `#` comments; return the next token.
    fn token(&mut self) -> Result<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Image("truncated header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| {
                Error::Image(format!(
                    "{what} is not a decimal number: {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}

/// Parse a binary PGM from raw bytes.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut tok = Tokenizer::new(bytes);
    let magic = tok.token()?;
    if magic != b"P5" {
        return Err(Error::Image(format!(
            "unsupported magic {:?}; only binary P5 is accepted",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = tok.number("width")?;
    let height = tok.number("height")?;
    let maxval = tok.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Image(format!(
            "maxval {maxval} unsupported; only 8-bit images (maxval <= 255) are accepted"
        )));
    }
    // Exactly one whitespace byte separates the header from the samples.
    if tok.pos >= bytes.len() || !bytes[tok.pos].is_ascii_whitespace() {
        return Err(Error::Image("missing sample separator after maxval".into()));
    }
    let data_start = tok.pos + 1;
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::Image(format!("dimensions {width}x{height} overflow")))?;
    let data = &bytes[data_start.min(bytes.len())..];
    if data.len() < expected {
        return Err(Error::Image(format!(
            "sample data truncated: expected {expected} bytes, found {}",
            data.len()
        )));
    }
    GrayImage::new(width, height, data[..expected].to_vec())
}

/// Serialize an image as binary PGM bytes with maxval 255.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

/// Read a binary PGM file.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = std::fs::read(path.as_ref())?;
    parse_pgm(&bytes)
}

/// Write `image` as a binary PGM file.
pub fn write_pgm(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    std::fs::write(path.as_ref(), encode_pgm(image))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_a_minimal_image() {
        let bytes = b"P5\n# a comment\n2 2\n255\n\x00\x7f\x80\xff";
        let img = parse_pgm(bytes).unwrap();
        assert_eq!(img.width, 2);
        assert_eq!(img.height, 2);
        assert_eq!(img.pixels, vec![0, 127, 128, 255]);
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(parse_pgm(b"P2\n2 2\n255\n....").is_err()); // ASCII variant
        assert!(parse_pgm(b"P5\n2 2\n65535\n\x00\x00").is_err()); // 16-bit
        assert!(parse_pgm(b"P5\n2 2\n255\n\x00").is_err()); // truncated
        assert!(parse_pgm(b"P5\n2\n255\n\x00\x00").is_err()); // missing height
        assert!(parse_pgm(b"P5 x 2 255 \x00\x00").is_err()); // non-numeric
        assert!(parse_pgm(b"").is_err());
    }

    #[test]
    fn pixel_after_header_may_be_whitespace_valued() {
        // The first sample byte can legitimately equal 0x0a; only one
        // separator byte is consumed.
        let bytes = b"P5\n1 2\n255\n\x0a\x20";
        let img = parse_pgm(bytes).unwrap();
        assert_eq!(img.pixels, vec![0x0a, 0x20]);
    }

    #[test]
    fn from_f64_clamps_and_rounds() {
        let img = GrayImage::from_f64(2, 2, &[-3.0, 12.4, 12.5, 300.0]).unwrap();
        assert_eq!(img.pixels, vec![0, 12, 13, 255]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        let img = GrayImage::new(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        write_pgm(&path, &img).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), img);
    }

    proptest! {
        #[test]
        fn encode_parse_round_trip(
            w in 1usize..20,
            h in 1usize..20,
            seed in 0u64..500,
        ) {
            let rng = crate::rng::CounterRng::new(seed, crate::rng::STREAM_DRAW);
            let pixels: Vec<u8> = (0..w * h).map(|i| (rng.uniform_u64(i as u64) & 0xff) as u8).collect();
            let img = GrayImage::new(w, h, pixels).unwrap();
            let parsed = parse_pgm(&encode_pgm(&img)).unwrap();
            prop_assert_eq!(parsed, img);
        }
    }
}
