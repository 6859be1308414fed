//! Orthonormal Haar wavelet analysis and synthesis for 2-D data, plus the
//! subband layout used to address detail coefficients.
//!
//! Each level splits the current low-pass quadrant into four: pairs along
//! rows and then columns are mapped to `(a + b) / sqrt(2)` (low) and
//! `(a - b) / sqrt(2)` (high). The transform is orthogonal, so synthesis
//! reproduces the input exactly up to rounding, and coefficient energy
//! equals pixel energy.

use crate::error::{Error, Result};

/// Check that `width x height` supports `levels` halvings.
fn check_dims(width: usize, height: usize, levels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Image(format!("empty image {width}x{height}")));
    }
    if levels == 0 {
        return Err(Error::Image(
            "at least one transform level is required".into(),
        ));
    }
    let div = 1usize << levels;
    if !width.is_multiple_of(div) || !height.is_multiple_of(div) {
        return Err(Error::Image(format!(
            "dimensions {width}x{height} are not divisible by 2^{levels}"
        )));
    }
    Ok(())
}

fn analyze_1d(line: &mut [f64], scratch: &mut [f64]) {
    let half = line.len() / 2;
    let c = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..half {
        let a = line[2 * k];
        let b = line[2 * k + 1];
        scratch[k] = (a + b) * c;
        scratch[half + k] = (a - b) * c;
    }
    line.copy_from_slice(&scratch[..line.len()]);
}

fn synthesize_1d(line: &mut [f64], scratch: &mut [f64]) {
    let half = line.len() / 2;
    let c = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..half {
        let l = line[k];
        let h = line[half + k];
        scratch[2 * k] = (l + h) * c;
        scratch[2 * k + 1] = (l - h) * c;
    }
    line.copy_from_slice(&scratch[..line.len()]);
}

/// Forward transform in place: `levels` rounds of row/column analysis on the
/// shrinking low-pass quadrant. `data` is row-major `width x height`.
pub fn haar_forward_2d(data: &mut [f64], width: usize, height: usize, levels: usize) -> Result<()> {
    check_dims(width, height, levels)?;
    if data.len() != width * height {
        return Err(Error::LengthMismatch {
            context: "image buffer vs dimensions",
            expected: width * height,
            actual: data.len(),
        });
    }
    let mut w = width;
    let mut h = height;
    let mut scratch = vec![0.0; width.max(height)];
    let mut column = vec![0.0; height];
    for _ in 0..levels {
        for r in 0..h {
            analyze_1d(&mut data[r * width..r * width + w], &mut scratch);
        }
        for cidx in 0..w {
            for r in 0..h {
                column[r] = data[r * width + cidx];
            }
            analyze_1d(&mut column[..h], &mut scratch);
            for r in 0..h {
                data[r * width + cidx] = column[r];
            }
        }
        w /= 2;
        h /= 2;
    }
    Ok(())
}

/// Inverse transform in place: undoes [`haar_forward_2d`] with the same
/// `levels`.
pub fn haar_inverse_2d(data: &mut [f64], width: usize, height: usize, levels: usize) -> Result<()> {
    check_dims(width, height, levels)?;
    if data.len() != width * height {
        return Err(Error::LengthMismatch {
            context: "image buffer vs dimensions",
            expected: width * height,
            actual: data.len(),
        });
    }
    let mut scratch = vec![0.0; width.max(height)];
    let mut column = vec![0.0; height];
    for level in (0..levels).rev() {
        let w = width >> level;
        let h = height >> level;
        for cidx in 0..w {
            for r in 0..h {
                column[r] = data[r * width + cidx];
            }
            synthesize_1d(&mut column[..h], &mut scratch);
            for r in 0..h {
                data[r * width + cidx] = column[r];
            }
        }
        for r in 0..h {
            synthesize_1d(&mut data[r * width..r * width + w], &mut scratch);
        }
    }
    Ok(())
}

/// One detail subband: its name, level, and the row-major flat indices of
/// its coefficients in the transformed buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subband {
    /// `"hl"`, `"lh"`, or `"hh"`.
    pub name: &'static str,
    /// Level the subband was produced at (1 = finest).
    pub level: usize,
    /// Flat indices into the transformed buffer, row-major within the band.
    pub indices: Vec<usize>,
}

/// Detail subbands of a `levels`-deep transform in embedding order: for each
/// level from finest to coarsest, the horizontal-detail (top-right),
/// vertical-detail (bottom-left), and diagonal-detail (bottom-right)
/// quadrants, each flattened row-major. The final low-pass quadrant is not
/// listed — it never carries the mark.
pub fn detail_subbands(width: usize, height: usize, levels: usize) -> Result<Vec<Subband>> {
    check_dims(width, height, levels)?;
    let mut bands = Vec::with_capacity(3 * levels);
    for level in 1..=levels {
        let w = width >> level;
        let h = height >> level;
        let quadrants: [(&'static str, usize, usize); 3] =
            [("hl", 0, w), ("lh", h, 0), ("hh", h, w)];
        for (name, row0, col0) in quadrants {
            let mut indices = Vec::with_capacity(w * h);
            for r in 0..h {
                for c in 0..w {
                    indices.push((row0 + r) * width + (col0 + c));
                }
            }
            bands.push(Subband {
                name,
                level,
                indices,
            });
        }
    }
    Ok(bands)
}

/// Total number of detail coefficients (the site count of an image host).
pub fn detail_site_count(width: usize, height: usize, levels: usize) -> Result<usize> {
    let ll = (width >> levels) * (height >> levels);
    check_dims(width, height, levels)?;
    Ok(width * height - ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn single_level_matches_hand_transform() {
        // 2x2 block [a b; c d]: LL = (a+b+c+d)/2, HL = (a-b+c-d)/2,
        // LH = (a+b-c-d)/2, HH = (a-b-c+d)/2 for the orthonormal kernel.
        let mut data = vec![1.0, 2.0, 3.0, 4.0];
        haar_forward_2d(&mut data, 2, 2, 1).unwrap();
        assert_relative_eq!(data[0], 5.0, max_relative = 1e-15); // LL
        assert_relative_eq!(data[1], -1.0, max_relative = 1e-15); // HL
        assert_relative_eq!(data[2], -2.0, max_relative = 1e-15); // LH
        assert_relative_eq!(data[3], 0.0, epsilon = 1e-15); // HH
        haar_inverse_2d(&mut data, 2, 2, 1).unwrap();
        for (got, want) in data.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert_relative_eq!(got, &want, max_relative = 1e-14);
        }
    }

    #[test]
    fn transform_preserves_energy() {
        let w = 16;
        let h = 8;
        let original: Vec<f64> = (0..w * h).map(|i| ((i * 37 % 64) as f64) - 31.5).collect();
        let mut data = original.clone();
        haar_forward_2d(&mut data, w, h, 3).unwrap();
        let e_orig: f64 = original.iter().map(|v| v * v).sum();
        let e_coef: f64 = data.iter().map(|v| v * v).sum();
        assert_relative_eq!(e_orig, e_coef, max_relative = 1e-12);
    }

    #[test]
    fn dimension_checks() {
        let mut data = vec![0.0; 12 * 8];
        assert!(haar_forward_2d(&mut data, 12, 8, 3).is_err()); // 12 % 8 != 0
        assert!(haar_forward_2d(&mut data, 12, 8, 2).is_ok());
        assert!(haar_forward_2d(&mut data, 12, 8, 0).is_err());
        assert!(detail_subbands(12, 8, 3).is_err());
    }

    #[test]
    fn subband_layout_partitions_the_details() {
        let w = 32;
        let h = 16;
        let levels = 3;
        let bands = detail_subbands(w, h, levels).unwrap();
        assert_eq!(bands.len(), 9);
        let mut seen = vec![false; w * h];
        for band in &bands {
            for &i in &band.indices {
                assert!(!seen[i], "index {i} appears in two subbands");
                seen[i] = true;
            }
        }
        let total: usize = bands.iter().map(|b| b.indices.len()).sum();
        assert_eq!(total, detail_site_count(w, h, levels).unwrap());
        // The unseen indices are exactly the final low-pass quadrant.
        let llw = w >> levels;
        let llh = h >> levels;
        for r in 0..h {
            for c in 0..w {
                let expected_ll = r < llh && c < llw;
                assert_eq!(!seen[r * w + c], expected_ll, "at ({r}, {c})");
            }
        }
    }

    #[test]
    fn finest_horizontal_detail_sees_horizontal_edges() {
        // An image alternating by column has pure horizontal detail: all
        // energy lands in the level-1 HL band.
        let w = 8;
        let h = 8;
        let mut data: Vec<f64> = (0..w * h)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        haar_forward_2d(&mut data, w, h, 1).unwrap();
        let bands = detail_subbands(w, h, 1).unwrap();
        let hl: f64 = bands[0].indices.iter().map(|&i| data[i] * data[i]).sum();
        let lh: f64 = bands[1].indices.iter().map(|&i| data[i] * data[i]).sum();
        let hh: f64 = bands[2].indices.iter().map(|&i| data[i] * data[i]).sum();
        assert!(hl > 1.0);
        assert!(lh.abs() < 1e-12);
        assert!(hh.abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn forward_inverse_round_trip(
            log_w in 3usize..6,
            log_h in 3usize..6,
            levels in 1usize..4,
            seed in 0u64..1000,
        ) {
            let w = 1 << log_w;
            let h = 1 << log_h;
            let rng = crate::rng::CounterRng::new(seed, crate::rng::STREAM_DRAW);
            let original: Vec<f64> = (0..w * h).map(|i| 128.0 + 40.0 * rng.normal(i as u64)).collect();
            let mut data = original.clone();
            haar_forward_2d(&mut data, w, h, levels).unwrap();
            haar_inverse_2d(&mut data, w, h, levels).unwrap();
            for (got, want) in data.iter().zip(&original) {
                prop_assert!((got - want).abs() < 1e-10);
            }
        }
    }
}
