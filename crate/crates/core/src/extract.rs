//! Linear minimum-error soft extraction, per-bit variance and energy
//! accounting, hard decisions, and bit-error measurement.
//!
//! The extractor is informed by a [`ChannelAssumption`]: the per-site gains
//! and noise levels it believes the channel applied, the embedding
//! strengths, and the host scales. Feeding it the true channel parameters
//! gives the minimum-variance linear estimate; feeding it something else
//! models a mismatched (e.g. attack-unaware) receiver.

use crate::attack::{sawgn_variance, AttackPlan};
use crate::error::{Error, Result};
use crate::signal::{Message, SiteModel, SpreadingCode};
use crate::stats::NeumaierSum;

/// What the extractor believes about the channel and the embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAssumption {
    /// Assumed per-site channel gain.
    pub gamma: Vec<f64>,
    /// Assumed per-site additive-noise standard deviation.
    pub sigma_delta: Vec<f64>,
    /// Embedding strengths used at each site.
    pub alpha: Vec<f64>,
    /// Host standard deviation at each site.
    pub sigma_x: Vec<f64>,
    /// Message length.
    pub n: usize,
}

impl ChannelAssumption {
    /// Assumption matching a concrete attack plan.
    pub fn matched(plan: &AttackPlan, alpha: &[f64], model: &SiteModel, n: usize) -> Result<Self> {
        let a = ChannelAssumption {
            gamma: plan.gamma.clone(),
            sigma_delta: plan.sigma_delta.clone(),
            alpha: alpha.to_vec(),
            sigma_x: model.sigma_x.clone(),
            n,
        };
        a.validate()?;
        Ok(a)
    }

    /// Attack-unaware assumption: unit gain, no noise.
    pub fn no_attack(alpha: &[f64], model: &SiteModel, n: usize) -> Result<Self> {
        let a = ChannelAssumption {
            gamma: vec![1.0; model.len()],
            sigma_delta: vec![0.0; model.len()],
            alpha: alpha.to_vec(),
            sigma_x: model.sigma_x.clone(),
            n,
        };
        a.validate()?;
        Ok(a)
    }

    /// Number of sites.
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    /// True when the assumption covers no sites.
    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// Check alignment, finiteness, and non-negativity.
    ///
    /// Watermark energy (some site with `gamma * alpha > 0`) is checked at
    /// decode time, so that energy-free assumptions can still be priced.
    pub fn validate(&self) -> Result<()> {
        let m = self.gamma.len();
        for (name, v) in [
            ("sigma_delta", &self.sigma_delta),
            ("alpha", &self.alpha),
            ("sigma_x", &self.sigma_x),
        ] {
            if v.len() != m {
                return Err(Error::LengthMismatch {
                    context: "channel assumption vectors",
                    expected: m,
                    actual: v.len(),
                });
            }
            for (i, &x) in v.iter().enumerate() {
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::invalid(format!(
                        "{name}[{i}] = {x} must be finite and non-negative"
                    )));
                }
            }
        }
        for (i, &g) in self.gamma.iter().enumerate() {
            if !g.is_finite() || g < 0.0 {
                return Err(Error::invalid(format!(
                    "gamma[{i}] = {g} must be finite and non-negative"
                )));
            }
        }
        if self.n == 0 {
            return Err(Error::invalid("message length must be at least one"));
        }
        Ok(())
    }
}

/// Everything the extractor reports about one received signal.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeReport {
    /// Soft estimate of each bit.
    pub soft: Vec<f64>,
    /// Variance of each soft estimate (identical across bits).
    pub sigma_b_sq: f64,
    /// Energy-per-bit to noise ratio; always `1 / sigma_b_sq`.
    pub eb_n0: f64,
    /// Sign decisions (`+1` on a zero soft value).
    pub hard: Vec<i8>,
    /// Fraction of wrong decisions, when the truth was supplied.
    pub ber: Option<f64>,
}

impl DecodeReport {
    /// Attach the true message and record the bit-error rate.
    pub fn with_truth(mut self, truth: &Message) -> Result<Self> {
        self.ber = Some(ber(&self.hard, truth.bits())?);
        Ok(self)
    }
}

/// Per-site channel variance under `assumption`:
/// `gamma^2 (sigma_x^2 + alpha^2 (n - 1)) + sigma_delta^2`.
///
/// Rejected when the site claims watermark energy (`gamma * alpha > 0`) but
/// has zero variance — the linear estimate would be degenerate there.
pub fn channel_variance(assumption: &ChannelAssumption, site: usize) -> Result<f64> {
    let v = sawgn_variance(
        assumption.gamma[site],
        assumption.sigma_delta[site],
        assumption.alpha[site],
        assumption.sigma_x[site],
        assumption.n,
    );
    if v == 0.0 && assumption.gamma[site] * assumption.alpha[site] > 0.0 {
        return Err(Error::DegenerateChannel { site });
    }
    Ok(v)
}

/// Linear minimum-error soft decode of `y_prime` under `assumption`.
///
/// Each bit's estimate is the variance-weighted correlation
/// `sum_i gamma_i alpha_i y'_i G(i, j) / V_i` normalized by
/// `sum_i gamma_i^2 alpha_i^2 / V_i`; sites without watermark energy
/// contribute nothing to either sum. The normalizer's reciprocal is the
/// common per-bit variance.
pub fn map_decode(
    y_prime: &[f64],
    code: &SpreadingCode,
    assumption: &ChannelAssumption,
) -> Result<DecodeReport> {
    assumption.validate()?;
    let m = assumption.len();
    if y_prime.len() != m {
        return Err(Error::LengthMismatch {
            context: "received signal vs assumption",
            expected: m,
            actual: y_prime.len(),
        });
    }
    if code.sites() != m {
        return Err(Error::LengthMismatch {
            context: "spreading code sites vs assumption",
            expected: m,
            actual: code.sites(),
        });
    }
    if code.bits() != assumption.n {
        return Err(Error::LengthMismatch {
            context: "spreading code bits vs assumption",
            expected: assumption.n,
            actual: code.bits(),
        });
    }
    let n = assumption.n;
    let mut numerators: Vec<NeumaierSum> = vec![NeumaierSum::new(); n];
    let mut denominator = NeumaierSum::new();
    let mut any_energy = false;
    for (i, &received) in y_prime.iter().enumerate() {
        let g = assumption.gamma[i];
        let a = assumption.alpha[i];
        if g * a == 0.0 {
            continue;
        }
        let v = channel_variance(assumption, i)?;
        any_energy = true;
        let weight = g * a / v;
        denominator.add(weight * g * a);
        let scaled = weight * received;
        for (j, num) in numerators.iter_mut().enumerate() {
            num.add(scaled * code.g(i, j));
        }
    }
    if !any_energy {
        return Err(Error::NoWatermarkEnergy);
    }
    let den = denominator.total();
    let soft: Vec<f64> = numerators.iter().map(|s| s.total() / den).collect();
    let hard = hard_decision(&soft);
    Ok(DecodeReport {
        soft,
        sigma_b_sq: 1.0 / den,
        eb_n0: den,
        hard,
        ber: None,
    })
}

/// Total energy-per-bit to noise ratio under `assumption`:
/// `sum_i alpha_i^2 gamma_i^2 / V_i`, zero for an erased channel.
pub fn eb_n0(assumption: &ChannelAssumption) -> Result<f64> {
    assumption.validate()?;
    let mut acc = NeumaierSum::new();
    for i in 0..assumption.len() {
        let g = assumption.gamma[i];
        let a = assumption.alpha[i];
        if g * a == 0.0 {
            continue;
        }
        let v = channel_variance(assumption, i)?;
        acc.add(a * a * g * g / v);
    }
    Ok(acc.total())
}

/// Sign decisions: `+1` when the soft value is non-negative.
pub fn hard_decision(soft: &[f64]) -> Vec<i8> {
    soft.iter()
        .map(|&s| if s >= 0.0 { 1 } else { -1 })
        .collect()
}

/// Fraction of positions where `hard` and `truth` disagree.
pub fn ber(hard: &[i8], truth: &[i8]) -> Result<f64> {
    if hard.len() != truth.len() {
        return Err(Error::LengthMismatch {
            context: "decisions vs truth",
            expected: truth.len(),
            actual: hard.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::invalid("cannot measure error rate of zero bits"));
    }
    for (j, &t) in truth.iter().enumerate() {
        if t != 1 && t != -1 {
            return Err(Error::invalid(format!(
                "truth bit {j} is {t}; bits must be +1 or -1"
            )));
        }
    }
    let errors = hard.iter().zip(truth).filter(|(h, t)| h != t).count();
    Ok(errors as f64 / truth.len() as f64)
}
