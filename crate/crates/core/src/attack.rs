//! The scaling-plus-additive-white-Gaussian-noise attack channel and the
//! attacker's side of the hiding game: per-site regime classification,
//! closed-form optimal attack parameters, and their cost functions.
//!
//! An attack multiplies each site by a gain `gamma[i]` and adds independent
//! zero-mean Gaussian noise of standard deviation `sigma_delta[i]`. The
//! attacker that minimizes leaked watermark energy plus `lambda` times the
//! weighted attack distortion has a per-site closed form that falls into one
//! of three regimes: erase the site, shrink it with the Wiener gain, or an
//! intermediate gain-plus-noise mixture.

use crate::error::{Error, Result};
use crate::rng::{CounterRng, STREAM_NOISE};
use crate::signal::SiteModel;
use crate::stats::NeumaierSum;

/// Per-site attack regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Replace the site with pure noiseless zero: `gamma = 0`, no noise.
    Erase,
    /// Shrink by the Wiener gain, no additive noise.
    Wiener,
    /// Positive gain below the Wiener gain plus matched additive noise.
    Intermediate,
    /// Any other `(gamma, sigma_delta)` pair, e.g. a mismatched attack.
    Custom,
}

impl Regime {
    /// Stable lower-case name used in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Regime::Erase => "erase",
            Regime::Wiener => "wiener",
            Regime::Intermediate => "intermediate",
            Regime::Custom => "custom",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "erase" => Ok(Regime::Erase),
            "wiener" => Ok(Regime::Wiener),
            "intermediate" => Ok(Regime::Intermediate),
            "custom" => Ok(Regime::Custom),
            other => Err(Error::invalid(format!("unknown regime {other:?}"))),
        }
    }
}

/// Multipliers pricing the two sides of the hiding game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameParams {
    /// Attacker's price per unit of weighted attack distortion.
    pub lambda: f64,
    /// Hider's price per unit of weighted embedding distortion.
    pub chi: f64,
    /// Message length.
    pub n: usize,
}

impl GameParams {
    /// Check positivity of both multipliers and the message length.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!(
                "lambda = {} must be positive and finite",
                self.lambda
            )));
        }
        if !(self.chi > 0.0) || !self.chi.is_finite() {
            return Err(Error::invalid(format!(
                "chi = {} must be positive and finite",
                self.chi
            )));
        }
        if self.n == 0 {
            return Err(Error::invalid("message length must be at least one"));
        }
        Ok(())
    }
}

/// A fully specified per-site attack.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackPlan {
    /// Per-site multiplicative gain (dimensionless, non-negative).
    pub gamma: Vec<f64>,
    /// Per-site additive-noise standard deviation (signal units).
    pub sigma_delta: Vec<f64>,
    /// Per-site regime tag.
    pub regime: Vec<Regime>,
    /// Seed of the additive-noise stream.
    pub noise_seed: u64,
}

impl AttackPlan {
    /// Arbitrary per-site attack with `Custom` tags.
    pub fn custom(gamma: Vec<f64>, sigma_delta: Vec<f64>, noise_seed: u64) -> Result<Self> {
        let regime = vec![Regime::Custom; gamma.len()];
        let plan = AttackPlan {
            gamma,
            sigma_delta,
            regime,
            noise_seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Identity channel: unit gain, no noise.
    pub fn identity(m: usize) -> Self {
        AttackPlan {
            gamma: vec![1.0; m],
            sigma_delta: vec![0.0; m],
            regime: vec![Regime::Custom; m],
            noise_seed: 0,
        }
    }

    /// Erase every site.
    pub fn erase(m: usize) -> Self {
        AttackPlan {
            gamma: vec![0.0; m],
            sigma_delta: vec![0.0; m],
            regime: vec![Regime::Erase; m],
            noise_seed: 0,
        }
    }

    /// Uniform gain and noise level at every site, tagged `Custom`.
    pub fn uniform(m: usize, gamma: f64, sigma_delta: f64, noise_seed: u64) -> Result<Self> {
        AttackPlan::custom(vec![gamma; m], vec![sigma_delta; m], noise_seed)
    }

    /// Number of sites the plan covers.
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    /// True when the plan covers no sites.
    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// Replace the noise seed (builder style).
    pub fn with_noise_seed(mut self, noise_seed: u64) -> Self {
        self.noise_seed = noise_seed;
        self
    }

    /// Check non-negativity, alignment, and regime/parameter consistency.
    pub fn validate(&self) -> Result<()> {
        if self.sigma_delta.len() != self.gamma.len() {
            return Err(Error::LengthMismatch {
                context: "attack gains vs noise levels",
                expected: self.gamma.len(),
                actual: self.sigma_delta.len(),
            });
        }
        if self.regime.len() != self.gamma.len() {
            return Err(Error::LengthMismatch {
                context: "attack gains vs regime tags",
                expected: self.gamma.len(),
                actual: self.regime.len(),
            });
        }
        for i in 0..self.gamma.len() {
            let g = self.gamma[i];
            let s = self.sigma_delta[i];
            if !g.is_finite() || g < 0.0 {
                return Err(Error::invalid(format!(
                    "gamma[{i}] = {g} must be finite and non-negative"
                )));
            }
            if !s.is_finite() || s < 0.0 {
                return Err(Error::invalid(format!(
                    "sigma_delta[{i}] = {s} must be finite and non-negative"
                )));
            }
            match self.regime[i] {
                Regime::Erase if g != 0.0 || s != 0.0 => {
                    return Err(Error::invalid(format!(
                        "site {i} tagged erase but gamma = {g}, sigma_delta = {s}"
                    )));
                }
                Regime::Wiener if s != 0.0 => {
                    return Err(Error::invalid(format!(
                        "site {i} tagged wiener but sigma_delta = {s}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Run the channel: site `i` becomes `gamma[i] * y[i] + delta_i` with
/// `delta_i` a zero-mean Gaussian of standard deviation `sigma_delta[i]`,
/// drawn deterministically from `(noise_seed, i)`.
pub fn apply_attack(y: &[f64], plan: &AttackPlan) -> Result<Vec<f64>> {
    plan.validate()?;
    if y.len() != plan.len() {
        return Err(Error::LengthMismatch {
            context: "signal vs attack plan",
            expected: plan.len(),
            actual: y.len(),
        });
    }
    let rng = CounterRng::new(plan.noise_seed, STREAM_NOISE);
    Ok(y.iter()
        .enumerate()
        .map(|(i, &yi)| {
            let noise = if plan.sigma_delta[i] > 0.0 {
                plan.sigma_delta[i] * rng.normal(i as u64)
            } else {
                0.0
            };
            plan.gamma[i] * yi + noise
        })
        .collect())
}

/// Expected weighted distortion between the attacked signal and the host:
/// `sum_i phi_i^2 (sigma_i^2 (1 - gamma_i)^2 + n gamma_i^2 alpha_i^2 +
/// sigma_delta_i^2)`.
pub fn expected_attack_distortion(
    plan: &AttackPlan,
    alpha: &[f64],
    model: &SiteModel,
    n: usize,
) -> Result<f64> {
    plan.validate()?;
    if alpha.len() != plan.len() {
        return Err(Error::LengthMismatch {
            context: "alpha vs attack plan",
            expected: plan.len(),
            actual: alpha.len(),
        });
    }
    if model.len() != plan.len() {
        return Err(Error::LengthMismatch {
            context: "site model vs attack plan",
            expected: plan.len(),
            actual: model.len(),
        });
    }
    let nf = n as f64;
    let mut acc = NeumaierSum::new();
    for (i, &a) in alpha.iter().enumerate() {
        let phi2 = model.phi[i] * model.phi[i];
        let s2 = model.sigma_x[i] * model.sigma_x[i];
        let g = plan.gamma[i];
        let sd = plan.sigma_delta[i];
        acc.add(phi2 * (s2 * (1.0 - g) * (1.0 - g) + nf * g * g * a * a + sd * sd));
    }
    Ok(acc.total())
}

/// Wiener gain for host power `sigma_x_sq` against watermark power
/// `sigma_w_sq`: `sigma_x_sq / (sigma_x_sq + sigma_w_sq)`.
pub fn wiener_gain(sigma_x_sq: f64, sigma_w_sq: f64) -> Result<f64> {
    if !(sigma_x_sq >= 0.0) || !(sigma_w_sq >= 0.0) {
        return Err(Error::invalid(format!(
            "wiener gain inputs ({sigma_x_sq}, {sigma_w_sq}) must be non-negative"
        )));
    }
    let denom = sigma_x_sq + sigma_w_sq;
    if denom == 0.0 {
        return Err(Error::invalid(
            "wiener gain undefined when both powers are zero",
        ));
    }
    Ok(sigma_x_sq / denom)
}

/// Threshold scale separating the attack regimes:
/// `mu = sqrt(lambda) * phi * sigma_x^2`.
#[inline]
pub fn regime_threshold(lambda: f64, phi: f64, sigma_x: f64) -> f64 {
    lambda.sqrt() * phi * sigma_x * sigma_x
}

/// Left side of the boundary between the intermediate and Wiener regimes:
/// non-negative inside the intermediate regime, negative in the Wiener one.
#[inline]
pub fn intermediate_margin(alpha: f64, sigma_x: f64, phi: f64, lambda: f64, n: usize) -> f64 {
    let mu = regime_threshold(lambda, phi, sigma_x);
    let s2 = sigma_x * sigma_x;
    (alpha - mu) * (s2 + n as f64 * alpha * alpha) + mu * alpha * alpha
}

/// Classify a site into the attacker's optimal regime.
///
/// With `mu = sqrt(lambda) * phi * sigma_x^2`: erase when `alpha > mu`;
/// otherwise intermediate when the boundary margin is non-negative; Wiener
/// otherwise. Ties on either boundary classify as intermediate, where the
/// closed form degenerates gracefully to the neighboring pure attack.
pub fn classify_domain(alpha: f64, sigma_x: f64, phi: f64, lambda: f64, n: usize) -> Regime {
    debug_assert!(alpha >= 0.0 && sigma_x >= 0.0 && phi > 0.0 && lambda > 0.0);
    let mu = regime_threshold(lambda, phi, sigma_x);
    if mu - alpha < 0.0 {
        Regime::Erase
    } else if intermediate_margin(alpha, sigma_x, phi, lambda, n) >= 0.0 {
        Regime::Intermediate
    } else {
        Regime::Wiener
    }
}

/// Closed-form optimal parameters inside the intermediate regime:
/// `gamma* = (mu - alpha) / (sqrt(lambda) * phi * alpha^2)` and
/// `sigma_delta*^2 = gamma* (gamma_w - gamma*) (sigma_x^2 + n alpha^2)`.
///
/// Outside the intermediate regime the expressions turn negative and the
/// call is rejected. On the regime boundaries they degenerate to the erase
/// and Wiener parameters respectively; floating-point dust there is clamped
/// to exact zero.
pub fn intermediate_params(
    alpha: f64,
    sigma_x: f64,
    phi: f64,
    lambda: f64,
    n: usize,
) -> Result<(f64, f64)> {
    if classify_domain(alpha, sigma_x, phi, lambda, n) != Regime::Intermediate {
        return Err(Error::RegimeMismatch(format!(
            "intermediate parameters requested outside the intermediate regime \
             (alpha = {alpha}, sigma_x = {sigma_x})"
        )));
    }
    if alpha == 0.0 {
        return Err(Error::invalid(
            "intermediate parameters are singular at alpha = 0",
        ));
    }
    let mu = regime_threshold(lambda, phi, sigma_x);
    let s2 = sigma_x * sigma_x;
    let n_alpha_sq = n as f64 * alpha * alpha;
    let gamma_w = wiener_gain(s2, n_alpha_sq)?;
    let gamma_star = ((mu - alpha) / (lambda.sqrt() * phi * alpha * alpha)).max(0.0);
    let sigma_delta_sq = (gamma_star * (gamma_w - gamma_star) * (s2 + n_alpha_sq)).max(0.0);
    Ok((gamma_star, sigma_delta_sq))
}

/// Closed-form attacker cost of the given regime at one site.
pub fn attack_cost(
    regime: Regime,
    alpha: f64,
    sigma_x: f64,
    phi: f64,
    lambda: f64,
    n: usize,
) -> Result<f64> {
    let s2 = sigma_x * sigma_x;
    let phi2 = phi * phi;
    let nf = n as f64;
    match regime {
        Regime::Erase => Ok(lambda * phi2 * s2),
        Regime::Wiener => {
            let v = s2 + alpha * alpha * (nf - 1.0);
            let leak = if alpha == 0.0 { 0.0 } else { alpha * alpha / v };
            Ok(leak + lambda * nf * phi2 * alpha * alpha * s2 / (s2 + nf * alpha * alpha))
        }
        Regime::Intermediate => {
            if alpha == 0.0 {
                return Err(Error::invalid("intermediate cost is singular at alpha = 0"));
            }
            let mu = regime_threshold(lambda, phi, sigma_x);
            Ok(2.0 * mu / alpha - 1.0 + lambda * phi2 * s2 * (1.0 - s2 / (alpha * alpha)))
        }
        Regime::Custom => Err(Error::invalid(
            "no closed-form cost for a custom attack; evaluate the objective directly",
        )),
    }
}

/// Per-site channel variance seen by the extractor:
/// `gamma^2 (sigma_x^2 + alpha^2 (n - 1)) + sigma_delta^2`.
#[inline]
pub fn sawgn_variance(gamma: f64, sigma_delta: f64, alpha: f64, sigma_x: f64, n: usize) -> f64 {
    gamma * gamma * (sigma_x * sigma_x + alpha * alpha * (n as f64 - 1.0))
        + sigma_delta * sigma_delta
}

/// Attacker's per-site objective: leaked watermark energy plus `lambda`
/// times the weighted attack distortion,
/// `rho + lambda phi^2 (sigma_x^2 (1 - gamma)^2 + n gamma^2 alpha^2 +
/// sigma_delta_sq)` with `rho = alpha^2 gamma^2 / V`.
///
/// A site with `gamma * alpha = 0` leaks nothing; a noiseless channel with
/// positive leak (`V = 0`, `gamma * alpha > 0`) costs infinity.
pub fn j_lambda(
    gamma: f64,
    sigma_delta_sq: f64,
    alpha: f64,
    sigma_x: f64,
    phi: f64,
    lambda: f64,
    n: usize,
) -> f64 {
    let nf = n as f64;
    let s2 = sigma_x * sigma_x;
    let v = gamma * gamma * (s2 + alpha * alpha * (nf - 1.0)) + sigma_delta_sq;
    let rho = if gamma * alpha == 0.0 {
        0.0
    } else if v == 0.0 {
        f64::INFINITY
    } else {
        alpha * alpha * gamma * gamma / v
    };
    rho + lambda
        * phi
        * phi
        * (s2 * (1.0 - gamma) * (1.0 - gamma) + nf * gamma * gamma * alpha * alpha + sigma_delta_sq)
}

/// Best attack parameters for a single site.
///
/// Returns `(gamma, sigma_delta_sq, regime)` minimizing the per-site
/// objective. The doubly degenerate site with `alpha = 0` and `sigma_x = 0`
/// carries nothing and is passed through unchanged.
pub fn optimal_site_attack(
    alpha: f64,
    sigma_x: f64,
    phi: f64,
    lambda: f64,
    n: usize,
) -> Result<(f64, f64, Regime)> {
    if !(alpha >= 0.0) || !(sigma_x >= 0.0) {
        return Err(Error::invalid(format!(
            "site parameters (alpha = {alpha}, sigma_x = {sigma_x}) must be non-negative"
        )));
    }
    if alpha == 0.0 && sigma_x == 0.0 {
        return Ok((1.0, 0.0, Regime::Custom));
    }
    match classify_domain(alpha, sigma_x, phi, lambda, n) {
        Regime::Erase => Ok((0.0, 0.0, Regime::Erase)),
        Regime::Wiener => {
            let gw = wiener_gain(sigma_x * sigma_x, n as f64 * alpha * alpha)?;
            Ok((gw, 0.0, Regime::Wiener))
        }
        Regime::Intermediate => {
            let (g, sd2) = intermediate_params(alpha, sigma_x, phi, lambda, n)?;
            Ok((g, sd2, Regime::Intermediate))
        }
        Regime::Custom => unreachable!("classification never returns the custom regime"),
    }
}

/// Attacker's best response across all sites for multiplier `lambda`.
///
/// Each site independently gets its regime's closed-form parameters. The
/// returned plan has `noise_seed = 0`; override it before applying the
/// channel stochastically.
pub fn optimal_attack(
    alpha: &[f64],
    model: &SiteModel,
    lambda: f64,
    n: usize,
) -> Result<AttackPlan> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::invalid(format!(
            "attack multiplier {lambda} must be positive and finite"
        )));
    }
    if alpha.len() != model.len() {
        return Err(Error::LengthMismatch {
            context: "alpha vs site model",
            expected: model.len(),
            actual: alpha.len(),
        });
    }
    let mut gamma = Vec::with_capacity(alpha.len());
    let mut sigma_delta = Vec::with_capacity(alpha.len());
    let mut regime = Vec::with_capacity(alpha.len());
    for (i, &a) in alpha.iter().enumerate() {
        let (g, sd2, r) = optimal_site_attack(a, model.sigma_x[i], model.phi[i], lambda, n)?;
        gamma.push(g);
        sigma_delta.push(sd2.sqrt());
        regime.push(r);
    }
    Ok(AttackPlan {
        gamma,
        sigma_delta,
        regime,
        noise_seed: 0,
    })
}

/// Scalar quantization with step `step`, rounding half away from zero —
/// a deterministic, distortion-tunable stand-in for lossy compression.
pub fn quantization_attack(y: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid(format!(
            "quantization step {step} must be positive and finite"
        )));
    }
    Ok(y.iter().map(|&v| step * (v / step).round()).collect())
}
