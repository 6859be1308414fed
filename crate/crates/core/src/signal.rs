//! Host-signal modelling: per-site Gaussian models, deterministic host
//! sampling, sliding-window scale estimation, perceptual weights, spreading
//! codes, and messages.
//!
//! A host is a length-`m` vector of independent zero-mean Gaussians whose
//! per-site scale varies across sites. Throughout the crate `sigma_x[i]` is
//! the site's standard deviation (not its variance), and `phi[i]` is the
//! site's perceptual weight used by every distortion measure.

use crate::error::{Error, Result};
use crate::rng::{CounterRng, STREAM_CODE, STREAM_HOST, STREAM_MESSAGE};

/// Per-site host model: standard deviations and perceptual weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteModel {
    /// Per-site standard deviation of the host.
    pub sigma_x: Vec<f64>,
    /// Per-site perceptual weight applied by all distortion measures.
    pub phi: Vec<f64>,
}

impl SiteModel {
    /// Build a model from explicit scales and weights.
    pub fn new(sigma_x: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if sigma_x.len() != phi.len() {
            return Err(Error::LengthMismatch {
                context: "site model scales vs weights",
                expected: sigma_x.len(),
                actual: phi.len(),
            });
        }
        if sigma_x.is_empty() {
            return Err(Error::invalid("site model must have at least one site"));
        }
        for (i, (&s, &p)) in sigma_x.iter().zip(&phi).enumerate() {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::invalid(format!(
                    "sigma_x[{i}] = {s} must be finite and non-negative"
                )));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::invalid(format!(
                    "phi[{i}] = {p} must be finite and non-negative"
                )));
            }
        }
        Ok(SiteModel { sigma_x, phi })
    }

    /// Model with the given scales and unit weights.
    pub fn with_unit_weights(sigma_x: Vec<f64>) -> Result<Self> {
        let phi = vec![1.0; sigma_x.len()];
        SiteModel::new(sigma_x, phi)
    }

    /// Number of sites.
    pub fn len(&self) -> usize {
        self.sigma_x.len()
    }

    /// True when the model has no sites (never constructible via `new`).
    pub fn is_empty(&self) -> bool {
        self.sigma_x.is_empty()
    }

    /// Replace the weights according to `rule`.
    pub fn set_weights(&mut self, rule: WeightRule) {
        for (p, &s) in self.phi.iter_mut().zip(&self.sigma_x) {
            *p = rule.weight(s);
        }
    }
}

/// Deterministic families of per-site scale profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum VarianceProfile {
    /// Every site has the same scale.
    Constant(f64),
    /// Scale rises linearly from `lo` at the first site to `hi` at the last.
    LinearRamp { lo: f64, hi: f64 },
    /// Constant segments: `(scale, site count)` pairs, concatenated.
    Piecewise(Vec<(f64, usize)>),
    /// Scale follows `lo + (hi - lo) * (i / (m - 1))^exponent`.
    PowerLaw { lo: f64, hi: f64, exponent: f64 },
}

impl VarianceProfile {
    /// Materialize the per-site standard deviations for `m` sites.
    ///
    /// A piecewise profile must cover exactly `m` sites.
    pub fn materialize(&self, m: usize) -> Result<Vec<f64>> {
        if m == 0 {
            return Err(Error::invalid("profile must cover at least one site"));
        }
        let check = |s: f64| -> Result<f64> {
            if !s.is_finite() || s < 0.0 {
                Err(Error::invalid(format!(
                    "profile scale {s} must be finite and non-negative"
                )))
            } else {
                Ok(s)
            }
        };
        match self {
            VarianceProfile::Constant(s) => {
                let s = check(*s)?;
                Ok(vec![s; m])
            }
            VarianceProfile::LinearRamp { lo, hi } => {
                let lo = check(*lo)?;
                let hi = check(*hi)?;
                Ok((0..m)
                    .map(|i| {
                        let t = if m == 1 {
                            0.0
                        } else {
                            i as f64 / (m - 1) as f64
                        };
                        lo + (hi - lo) * t
                    })
                    .collect())
            }
            VarianceProfile::Piecewise(segments) => {
                let mut out = Vec::with_capacity(m);
                for &(s, count) in segments {
                    let s = check(s)?;
                    out.extend(std::iter::repeat_n(s, count));
                }
                if out.len() != m {
                    return Err(Error::LengthMismatch {
                        context: "piecewise profile coverage",
                        expected: m,
                        actual: out.len(),
                    });
                }
                Ok(out)
            }
            VarianceProfile::PowerLaw { lo, hi, exponent } => {
                let lo = check(*lo)?;
                let hi = check(*hi)?;
                if !exponent.is_finite() || *exponent <= 0.0 {
                    return Err(Error::invalid(format!(
                        "power-law exponent {exponent} must be finite and positive"
                    )));
                }
                Ok((0..m)
                    .map(|i| {
                        let t = if m == 1 {
                            0.0
                        } else {
                            i as f64 / (m - 1) as f64
                        };
                        lo + (hi - lo) * t.powf(*exponent)
                    })
                    .collect())
            }
        }
    }
}

/// How perceptual weights are derived from per-site scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRule {
    /// All weights equal one.
    Unit,
    /// `phi = (1 + sigma)^(-1/2)`: busier sites tolerate more distortion.
    Perceptual,
}

impl WeightRule {
    /// Weight assigned to a site with standard deviation `sigma`.
    pub fn weight(self, sigma: f64) -> f64 {
        match self {
            WeightRule::Unit => 1.0,
            WeightRule::Perceptual => 1.0 / (1.0 + sigma).sqrt(),
        }
    }
}

/// Per-site weights for the given scales under `rule`.
pub fn perceptual_weights(sigma_x: &[f64], rule: WeightRule) -> Vec<f64> {
    sigma_x.iter().map(|&s| rule.weight(s)).collect()
}

/// Draw a host realization for `model` deterministically from `seed`.
///
/// Site `i` equals `sigma_x[i]` times the standard normal at counter
/// position `i` of the host stream, so any subset of sites can be
/// regenerated independently.
pub fn sample_host(model: &SiteModel, seed: u64) -> Vec<f64> {
    let rng = CounterRng::new(seed, STREAM_HOST);
    model
        .sigma_x
        .iter()
        .enumerate()
        .map(|(i, &s)| s * rng.normal(i as u64))
        .collect()
}

/// Materialize `profile` over `m` sites (unit weights) and draw a host.
pub fn gen_host(m: usize, profile: &VarianceProfile, seed: u64) -> Result<(SiteModel, Vec<f64>)> {
    let sigma = profile.materialize(m)?;
    let model = SiteModel::with_unit_weights(sigma)?;
    let x = sample_host(&model, seed);
    Ok((model, x))
}

/// Sliding-window scale estimate: per-site population standard deviation
/// over a centered window with mirrored boundaries, floored at `floor`.
///
/// Mirroring reflects indices about the endpoints without repeating them
/// (`values[-k]` maps to `values[k]`), so estimates near the edges use real
/// samples only. The window must be odd and no longer than the signal.
pub fn estimate_site_variances(values: &[f64], window: usize, floor: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("cannot estimate scales of an empty signal"));
    }
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "window {window} must be odd and positive"
        )));
    }
    if window > values.len() {
        return Err(Error::invalid(format!(
            "window {window} exceeds signal length {}",
            values.len()
        )));
    }
    if !floor.is_finite() || floor < 0.0 {
        return Err(Error::invalid(format!(
            "floor {floor} must be finite and non-negative"
        )));
    }
    let len = values.len() as isize;
    let half = (window / 2) as isize;
    let wf = window as f64;
    let mut out = Vec::with_capacity(values.len());
    for i in 0..len {
        let mut sum = 0.0;
        for k in -half..=half {
            let mut idx = i + k;
            if idx < 0 {
                idx = -idx;
            }
            if idx >= len {
                idx = 2 * (len - 1) - idx;
            }
            sum += values[idx as usize];
        }
        let mean = sum / wf;
        let mut sq = 0.0;
        for k in -half..=half {
            let mut idx = i + k;
            if idx < 0 {
                idx = -idx;
            }
            if idx >= len {
                idx = 2 * (len - 1) - idx;
            }
            let d = values[idx as usize] - mean;
            sq += d * d;
        }
        out.push((sq / wf).sqrt().max(floor));
    }
    Ok(out)
}

/// Deterministic binary spreading code: an `m x n` matrix of equiprobable
/// `+1`/`-1` entries, a pure function of `(seed, site, bit)`.
///
/// Entries are generated hierarchically — a per-bit row key derived from the
/// code stream, then a counter over sites — so any single entry can be
/// produced without materializing the matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadingCode {
    m: usize,
    n: usize,
    seed: u64,
    bit_keys: Vec<u64>,
}

impl SpreadingCode {
    /// Code for `m` sites and `n` bits under `seed`.
    pub fn new(m: usize, n: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid(format!(
                "spreading code needs positive dimensions, got {m} x {n}"
            )));
        }
        let key_rng = CounterRng::new(seed, STREAM_CODE);
        let bit_keys = (0..n as u64).map(|j| key_rng.sub_seed(j)).collect();
        Ok(SpreadingCode {
            m,
            n,
            seed,
            bit_keys,
        })
    }

    /// Number of sites.
    pub fn sites(&self) -> usize {
        self.m
    }

    /// Number of bits.
    pub fn bits(&self) -> usize {
        self.n
    }

    /// Seed the code was built from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Entry for site `i`, bit `j`: `+1.0` or `-1.0`.
    #[inline]
    pub fn g(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.m && j < self.n);
        let word = CounterRng::from_key(self.bit_keys[j]).uniform_u64(i as u64);
        if word >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Sum of `g(i, j) * bits[j]` over bits — the unit-amplitude chip at
    /// site `i` for the given message.
    #[inline]
    pub fn chip(&self, i: usize, bits: &[i8]) -> f64 {
        debug_assert_eq!(bits.len(), self.n);
        let mut acc = 0.0;
        for (j, &b) in bits.iter().enumerate() {
            acc += self.g(i, j) * f64::from(b);
        }
        acc
    }
}

/// A message of `n` antipodal bits, each `+1` or `-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    bits: Vec<i8>,
}

impl Message {
    /// Validate and wrap explicit bits.
    pub fn from_bits(bits: Vec<i8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::invalid("message must carry at least one bit"));
        }
        for (j, &b) in bits.iter().enumerate() {
            if b != 1 && b != -1 {
                return Err(Error::invalid(format!(
                    "message bit {j} is {b}; bits must be +1 or -1"
                )));
            }
        }
        Ok(Message { bits })
    }

    /// Parse a compact text form: one character per bit, `1`/`+` for `+1`
    /// and `0`/`-` for `-1`.
    pub fn from_text(text: &str) -> Result<Self> {
        let bits: Vec<i8> = text
            .chars()
            .map(|c| match c {
                '1' | '+' => Ok(1i8),
                '0' | '-' => Ok(-1i8),
                other => Err(Error::invalid(format!(
                    "message character {other:?} is not one of 1 + 0 -"
                ))),
            })
            .collect::<Result<_>>()?;
        Message::from_bits(bits)
    }

    /// Equiprobable random message of `n` bits from `seed`.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("message must carry at least one bit"));
        }
        let rng = CounterRng::new(seed, STREAM_MESSAGE);
        let bits = (0..n as u64)
            .map(|j| {
                if rng.uniform_u64(j) >> 63 == 0 {
                    1i8
                } else {
                    -1i8
                }
            })
            .collect();
        Ok(Message { bits })
    }

    /// The bits.
    pub fn bits(&self) -> &[i8] {
        &self.bits
    }

    /// Number of bits.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    /// Never true: construction requires at least one bit.
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Compact text form (`1` for `+1`, `0` for `-1`).
    pub fn to_text(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b > 0 { '1' } else { '0' })
            .collect()
    }
}
