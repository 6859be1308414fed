//! End-to-end image pipeline: message embedding in the orthonormal Haar
//! transform domain of 8-bit grayscale images.
//!
//! Embedding transforms the image, estimates a local scale for every detail
//! coefficient with the sliding-window estimator, derives the per-site
//! optimal strength from the two-multiplier game — by default with the
//! embedder's multiplier calibrated so the equilibrium spends a configured
//! average distortion per marked coefficient — adds the spread message,
//! optionally quantizes every transform coefficient (the compression-style
//! attack), inverts the transform, and rounds back to 8-bit pixels.
//! Extraction is blind: it re-estimates scales and strengths from the
//! received image alone and correlates against the shared spreading code.

use crate::attack::{quantization_attack, GameParams};
use crate::dwt::{detail_subbands, haar_forward_2d, haar_inverse_2d};
use crate::embed::{embed, empirical_weighted_mse, EmbeddingPlan};
use crate::error::{Error, Result};
use crate::extract::{map_decode, ChannelAssumption, DecodeReport};
use crate::game::{calibrate_chi, equilibrium};
use crate::pgm::GrayImage;
use crate::signal::{estimate_site_variances, perceptual_weights, Message, SiteModel, WeightRule};
use crate::stats::NeumaierSum;

/// Settings shared by the embedding and extraction sides of the pipeline.
///
/// Both sides must agree on every field except `step` for the blind decode
/// to line up.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePipelineConfig {
    /// Transform depth; image dimensions must be divisible by `2^levels`.
    pub levels: usize,
    /// Window width of the local scale estimator (odd). Shrinks
    /// automatically for subbands smaller than the window.
    pub window: usize,
    /// Lower bound on estimated scales, keeping flat regions non-degenerate.
    pub floor: f64,
    /// Attacker's distortion multiplier the strengths are tuned against.
    pub lambda: f64,
    /// Embedder's distortion multiplier. Used directly only when
    /// `d_xy_per_site` is unset.
    pub chi: f64,
    /// Average weighted embedding distortion to spend per marked
    /// coefficient. When set, `chi` is re-derived from the image itself so
    /// the equilibrium meets the budget; a fixed `chi` marks natural images
    /// far too faintly to survive the round trip through 8-bit pixels,
    /// because the no-embedding threshold depends on the coefficient scales.
    pub d_xy_per_site: Option<f64>,
    /// Rule mapping estimated scales to perceptual weights.
    pub weight_rule: WeightRule,
    /// Seed of the spreading code shared by embedder and extractor.
    pub code_seed: u64,
    /// Quantization step applied to every transform coefficient after
    /// embedding; `0` disables the attack.
    pub step: f64,
}

impl Default for ImagePipelineConfig {
    fn default() -> Self {
        ImagePipelineConfig {
            levels: 3,
            window: 9,
            floor: 1e-6,
            lambda: 0.002,
            chi: 0.0028,
            d_xy_per_site: Some(1.0),
            weight_rule: WeightRule::Perceptual,
            code_seed: 1,
            step: 0.0,
        }
    }
}

impl ImagePipelineConfig {
    /// Check field sanity (image-dependent checks happen at run time).
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::invalid("transform depth must be at least one"));
        }
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "estimator window {} must be odd and positive",
                self.window
            )));
        }
        if !(self.floor > 0.0) || !self.floor.is_finite() {
            return Err(Error::invalid(format!(
                "scale floor {} must be positive and finite",
                self.floor
            )));
        }
        GameParams {
            lambda: self.lambda,
            chi: self.chi,
            n: 1,
        }
        .validate()?;
        if let Some(d) = self.d_xy_per_site {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::invalid(format!(
                    "per-site embedding budget {d} must be positive and finite"
                )));
            }
        }
        if !(self.step >= 0.0) || !self.step.is_finite() {
            return Err(Error::invalid(format!(
                "quantization step {} must be non-negative and finite",
                self.step
            )));
        }
        Ok(())
    }
}

/// The transform-domain site layout of an image: which coefficients carry
/// the message and their estimated local scales.
#[derive(Debug, Clone)]
pub struct SiteLayout {
    /// Flat transform-domain indices of the marked coefficients, in subband
    /// order (finest scale first within each level's set).
    pub indices: Vec<usize>,
    /// Site model built from the windowed scale estimates.
    pub model: SiteModel,
}

impl SiteLayout {
    /// Number of marked coefficients.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// True when no coefficient is marked.
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Estimate the site layout from transformed coefficients: every detail
/// coefficient becomes a site; the approximation band is never marked.
///
/// Scales are estimated independently per subband so that statistics from
/// different scales and orientations do not bleed into each other. The
/// estimator window shrinks (to the next odd length) for subbands smaller
/// than the configured window.
pub fn estimate_layout(
    coefficients: &[f64],
    width: usize,
    height: usize,
    config: &ImagePipelineConfig,
) -> Result<SiteLayout> {
    config.validate()?;
    let subbands = detail_subbands(width, height, config.levels)?;
    if coefficients.len() != width * height {
        return Err(Error::LengthMismatch {
            context: "coefficient buffer vs image dimensions",
            expected: width * height,
            actual: coefficients.len(),
        });
    }
    let mut indices = Vec::new();
    let mut sigma = Vec::new();
    for band in &subbands {
        let values: Vec<f64> = band.indices.iter().map(|&i| coefficients[i]).collect();
        let mut window = config.window.min(values.len());
        if window.is_multiple_of(2) {
            window -= 1;
        }
        let scales = estimate_site_variances(&values, window, config.floor)?;
        indices.extend_from_slice(&band.indices);
        sigma.extend(scales);
    }
    let phi = perceptual_weights(&sigma, config.weight_rule);
    let model = SiteModel::new(sigma, phi)?;
    Ok(SiteLayout { indices, model })
}

/// Solve for the per-site strengths on an estimated layout.
///
/// With a per-site embedding budget configured, the embedder's multiplier is
/// calibrated to the image so the equilibrium spends that budget on average
/// per marked coefficient (the attacker's price stays as configured);
/// otherwise the fixed multipliers are used as-is. Both embedding and blind
/// extraction go through this one path so they derive the same strengths
/// from the same statistics.
fn solve_strengths(
    layout: &SiteLayout,
    n: usize,
    config: &ImagePipelineConfig,
) -> Result<crate::game::EquilibriumReport> {
    match config.d_xy_per_site {
        Some(d) => {
            let m = layout.len() as f64;
            let (_chi, report) = calibrate_chi(&layout.model, n, config.lambda, d * m, false)?;
            Ok(report)
        }
        None => {
            let params = GameParams {
                lambda: config.lambda,
                chi: config.chi,
                n,
            };
            equilibrium(&layout.model, &params, false)
        }
    }
}

/// Everything the embedding side reports alongside the marked image.
#[derive(Debug, Clone)]
pub struct ImageEmbedReport {
    /// The marked (and possibly quantized) image.
    pub image: GrayImage,
    /// Number of coefficients that carried the message.
    pub sites: usize,
    /// Per-site strengths the game assigned.
    pub alpha: Vec<f64>,
    /// Expected weighted embedding distortion in the transform domain.
    pub expected_distortion: f64,
    /// Realized weighted squared error over the marked coefficients.
    pub dwt_distortion: f64,
    /// Realized unweighted squared error over all pixels of the final
    /// 8-bit image (clamping, rounding, and any quantization included).
    pub pixel_distortion: f64,
    /// Mean absolute per-pixel change of the final 8-bit image.
    pub mean_abs_change: f64,
}

/// Embed `message` into `input` in the transform domain.
pub fn embed_image(
    input: &GrayImage,
    message: &Message,
    config: &ImagePipelineConfig,
) -> Result<ImageEmbedReport> {
    config.validate()?;
    let (width, height) = (input.width, input.height);
    let mut data = input.to_f64();
    haar_forward_2d(&mut data, width, height, config.levels)?;

    let layout = estimate_layout(&data, width, height, config)?;
    let report = solve_strengths(&layout, message.len(), config)?;
    let alpha = report.alphas();

    let x: Vec<f64> = layout.indices.iter().map(|&i| data[i]).collect();
    let plan = EmbeddingPlan {
        message: message.clone(),
        alpha: alpha.clone(),
        code_seed: config.code_seed,
        postfilter: false,
    };
    let y = embed(&x, &plan, &layout.model)?;
    for (&i, &val) in layout.indices.iter().zip(y.iter()) {
        data[i] = val;
    }
    let dwt_distortion = empirical_weighted_mse(&x, &y, &layout.model.phi)?;

    if config.step > 0.0 {
        data = quantization_attack(&data, config.step)?;
    }
    haar_inverse_2d(&mut data, width, height, config.levels)?;
    let image = GrayImage::from_f64(width, height, &data)?;

    let mut sq = NeumaierSum::new();
    let mut abs = NeumaierSum::new();
    for (o, m) in input.pixels.iter().zip(image.pixels.iter()) {
        let d = f64::from(*m) - f64::from(*o);
        sq.add(d * d);
        abs.add(d.abs());
    }
    let pixels = (width * height) as f64;

    Ok(ImageEmbedReport {
        image,
        sites: layout.len(),
        alpha,
        expected_distortion: report.d_xy,
        dwt_distortion,
        pixel_distortion: sq.total(),
        mean_abs_change: abs.total() / pixels,
    })
}

/// What blind extraction reports.
#[derive(Debug, Clone)]
pub struct ImageExtractReport {
    /// Soft and hard decisions with their variance accounting.
    pub decode: DecodeReport,
    /// Number of coefficients treated as message carriers.
    pub sites: usize,
    /// Per-site strengths the extractor assumed.
    pub alpha: Vec<f64>,
}

/// Blindly extract an `n`-bit message from a received image.
///
/// The extractor re-runs the layout estimation and the strength game on the
/// received image itself — no side information beyond the shared
/// configuration and code seed — and decodes assuming an identity channel.
pub fn extract_image(
    received: &GrayImage,
    n: usize,
    config: &ImagePipelineConfig,
) -> Result<ImageExtractReport> {
    config.validate()?;
    if n == 0 {
        return Err(Error::invalid("message length must be at least one"));
    }
    let (width, height) = (received.width, received.height);
    let mut data = received.to_f64();
    haar_forward_2d(&mut data, width, height, config.levels)?;

    let layout = estimate_layout(&data, width, height, config)?;
    let report = solve_strengths(&layout, n, config)?;
    let alpha = report.alphas();

    let y: Vec<f64> = layout.indices.iter().map(|&i| data[i]).collect();
    let assumption = ChannelAssumption::no_attack(&alpha, &layout.model, n)?;
    let code = crate::signal::SpreadingCode::new(layout.len(), n, config.code_seed)?;
    let decode = map_decode(&y, &code, &assumption)?;
    Ok(ImageExtractReport {
        decode,
        sites: layout.len(),
        alpha,
    })
}
