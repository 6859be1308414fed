//! Additive spread-spectrum embedding, distortion accounting, and the
//! optional Wiener post-filter on the marked signal.

use crate::error::{Error, Result};
use crate::signal::{Message, SiteModel, SpreadingCode};
use crate::stats::NeumaierSum;

/// Everything the embedder needs besides the host itself.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingPlan {
    /// Message bits to hide.
    pub message: Message,
    /// Per-site embedding strength (signal units, length `m`).
    pub alpha: Vec<f64>,
    /// Seed of the spreading code.
    pub code_seed: u64,
    /// Apply a Wiener shrink to the marked signal after embedding.
    pub postfilter: bool,
}

impl EmbeddingPlan {
    /// Validate strengths and dimensions.
    pub fn validate(&self) -> Result<()> {
        for (i, &a) in self.alpha.iter().enumerate() {
            if !a.is_finite() || a < 0.0 {
                return Err(Error::invalid(format!(
                    "alpha[{i}] = {a} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }

    /// Spreading code matching this plan over `m` sites.
    pub fn code(&self, m: usize) -> Result<SpreadingCode> {
        SpreadingCode::new(m, self.message.len(), self.code_seed)
    }
}

/// Watermark sample added at each site: `alpha[i]` times the message chip.
fn mark(plan: &EmbeddingPlan, code: &SpreadingCode, i: usize) -> f64 {
    plan.alpha[i] * code.chip(i, plan.message.bits())
}

/// Embed `plan` into host `x`: site `i` becomes
/// `x[i] + alpha[i] * sum_j G(i, j) * b[j]`.
///
/// With `plan.postfilter` set, the marked signal is then shrunk by the
/// per-site Wiener gain for a watermark power of `n * alpha[i]^2`.
pub fn embed(x: &[f64], plan: &EmbeddingPlan, model: &SiteModel) -> Result<Vec<f64>> {
    plan.validate()?;
    if x.len() != plan.alpha.len() {
        return Err(Error::LengthMismatch {
            context: "host vs alpha",
            expected: x.len(),
            actual: plan.alpha.len(),
        });
    }
    if x.len() != model.len() {
        return Err(Error::LengthMismatch {
            context: "host vs site model",
            expected: x.len(),
            actual: model.len(),
        });
    }
    let code = plan.code(x.len())?;
    let n = plan.message.len() as f64;
    let mut y: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| xi + mark(plan, &code, i))
        .collect();
    if plan.postfilter {
        let sigma_w_sq: Vec<f64> = plan.alpha.iter().map(|&a| n * a * a).collect();
        y = wiener_postfilter(&y, model, &sigma_w_sq)?;
    }
    Ok(y)
}

/// Expected weighted embedding distortion of `plan` on `model`.
///
/// Without the post-filter this is `sum_i phi_i^2 * n * alpha_i^2`; with it,
/// the marked signal is shrunk toward zero and the expected weighted error
/// becomes `sum_i phi_i^2 * sigma_i^2 w_i / (sigma_i^2 + w_i)` with
/// `w_i = n * alpha_i^2`.
pub fn embedding_distortion(plan: &EmbeddingPlan, model: &SiteModel) -> Result<f64> {
    plan.validate()?;
    if plan.alpha.len() != model.len() {
        return Err(Error::LengthMismatch {
            context: "alpha vs site model",
            expected: model.len(),
            actual: plan.alpha.len(),
        });
    }
    let n = plan.message.len() as f64;
    let mut acc = NeumaierSum::new();
    for i in 0..model.len() {
        let phi2 = model.phi[i] * model.phi[i];
        let w = n * plan.alpha[i] * plan.alpha[i];
        if plan.postfilter {
            let s2 = model.sigma_x[i] * model.sigma_x[i];
            let denom = s2 + w;
            if denom > 0.0 {
                acc.add(phi2 * s2 * w / denom);
            }
        } else {
            acc.add(phi2 * w);
        }
    }
    Ok(acc.total())
}

/// Per-site Wiener shrink: site `i` is scaled by
/// `sigma_i^2 / (sigma_i^2 + sigma_w_sq[i])`.
///
/// A site with zero watermark power passes through unchanged.
pub fn wiener_postfilter(y: &[f64], model: &SiteModel, sigma_w_sq: &[f64]) -> Result<Vec<f64>> {
    if y.len() != model.len() {
        return Err(Error::LengthMismatch {
            context: "signal vs site model",
            expected: model.len(),
            actual: y.len(),
        });
    }
    if sigma_w_sq.len() != y.len() {
        return Err(Error::LengthMismatch {
            context: "signal vs watermark power",
            expected: y.len(),
            actual: sigma_w_sq.len(),
        });
    }
    for (i, &w) in sigma_w_sq.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::invalid(format!(
                "sigma_w_sq[{i}] = {w} must be finite and non-negative"
            )));
        }
    }
    Ok(y.iter()
        .enumerate()
        .map(|(i, &yi)| {
            let w = sigma_w_sq[i];
            if w == 0.0 {
                yi
            } else {
                let s2 = model.sigma_x[i] * model.sigma_x[i];
                yi * s2 / (s2 + w)
            }
        })
        .collect())
}

/// Weighted squared distance between two realizations:
/// `sum_i phi_i^2 (a_i - b_i)^2`.
pub fn empirical_weighted_mse(a: &[f64], b: &[f64], phi: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            context: "empirical distortion operands",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() != phi.len() {
        return Err(Error::LengthMismatch {
            context: "empirical distortion weights",
            expected: a.len(),
            actual: phi.len(),
        });
    }
    let mut acc = NeumaierSum::new();
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc.add(phi[i] * phi[i] * d * d);
    }
    Ok(acc.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{sample_host, VarianceProfile};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_model(m: usize) -> SiteModel {
        SiteModel::with_unit_weights(vec![1.0; m]).unwrap()
    }

    fn plan(n: usize, alpha: Vec<f64>, postfilter: bool) -> EmbeddingPlan {
        EmbeddingPlan {
            message: Message::random(n, 7).unwrap(),
            alpha,
            code_seed: 99,
            postfilter,
        }
    }

    #[test]
    fn zero_strength_is_identity() {
        let model = unit_model(16);
        let x = sample_host(&model, 1);
        let y = embed(&x, &plan(4, vec![0.0; 16], false), &model).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn single_bit_embedding_matches_hand_values() {
        // One bit: y_i = x_i + alpha_i * g_i * b. With x = 0 the result is
        // exactly the signed strength.
        let model = unit_model(2);
        let p = plan(1, vec![2.0, 3.0], false);
        let code = p.code(2).unwrap();
        let b = f64::from(p.message.bits()[0]);
        let y = embed(&[0.0, 0.0], &p, &model).unwrap();
        assert_eq!(y[0], 2.0 * code.g(0, 0) * b);
        assert_eq!(y[1], 3.0 * code.g(1, 0) * b);
        assert_eq!(y[0].abs(), 2.0);
        assert_eq!(y[1].abs(), 3.0);
    }

    #[test]
    fn opposite_bits_cancel_where_code_rows_agree() {
        let msg = Message::from_bits(vec![1, -1]).unwrap();
        let p = EmbeddingPlan {
            message: msg,
            alpha: vec![1.0; 64],
            code_seed: 3,
            postfilter: false,
        };
        let model = unit_model(64);
        let code = p.code(64).unwrap();
        let y = embed(&vec![0.0; 64], &p, &model).unwrap();
        let mut saw_agreeing_site = false;
        for i in 0..64 {
            if code.g(i, 0) == code.g(i, 1) {
                saw_agreeing_site = true;
                assert_eq!(y[i], 0.0, "site {i} should cancel");
            }
        }
        assert!(saw_agreeing_site);
    }

    #[test]
    fn expected_distortion_closed_forms() {
        let model = unit_model(1);
        assert_eq!(
            embedding_distortion(&plan(4, vec![0.0], false), &model).unwrap(),
            0.0
        );
        // n = 4, alpha = 0.5: 4 * 0.25 = 1.
        assert_relative_eq!(
            embedding_distortion(&plan(4, vec![0.5], false), &model).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        // Post-filter with sigma^2 = 1 and n alpha^2 = 1: 1 * 1 / 2 = 0.5.
        assert_relative_eq!(
            embedding_distortion(&plan(4, vec![0.5], true), &model).unwrap(),
            0.5,
            max_relative = 1e-15
        );
    }

    #[test]
    fn postfilter_gains_match_hand_values() {
        let model = SiteModel::with_unit_weights(vec![3.0f64.sqrt(), 1.0, 1.0]).unwrap();
        let out = wiener_postfilter(&[1.0, 1.0, 1.0], &model, &[1.0, 1.0, 0.0]).unwrap();
        assert_relative_eq!(out[0], 0.75, max_relative = 1e-15);
        assert_relative_eq!(out[1], 0.5, max_relative = 1e-15);
        assert_eq!(out[2], 1.0);
    }

    #[test]
    fn empirical_mse_hand_value() {
        let d = empirical_weighted_mse(&[1.0, 1.0], &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(d, 5.0);
        assert_eq!(
            empirical_weighted_mse(&[2.0, 3.0], &[2.0, 3.0], &[1.0, 1.0]).unwrap(),
            0.0
        );
        assert!(empirical_weighted_mse(&[1.0], &[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn single_bit_empirical_distortion_is_exact() {
        // With one bit the chip is +-1, so the realized weighted error equals
        // the expectation m * alpha^2 exactly.
        let m = 128;
        let model = unit_model(m);
        let x = sample_host(&model, 11);
        let p = plan(1, vec![0.7; m], false);
        let y = embed(&x, &p, &model).unwrap();
        let emp = empirical_weighted_mse(&y, &x, &model.phi).unwrap();
        let exp = embedding_distortion(&p, &model).unwrap();
        assert_relative_eq!(emp, exp, max_relative = 1e-12);
        assert_relative_eq!(exp, m as f64 * 0.49, max_relative = 1e-12);
    }

    #[test]
    fn multi_bit_empirical_distortion_matches_in_expectation() {
        // Average the realized distortion over many code seeds and compare
        // with the closed form.
        let m = 64;
        let n = 8;
        let model = unit_model(m);
        let x = sample_host(&model, 2);
        let expected = m as f64 * n as f64 * 0.04;
        let reps = 400;
        let mut total = 0.0;
        for seed in 0..reps {
            let p = EmbeddingPlan {
                message: Message::random(n, 5).unwrap(),
                alpha: vec![0.2; m],
                code_seed: seed,
                postfilter: false,
            };
            let y = embed(&x, &p, &model).unwrap();
            total += empirical_weighted_mse(&y, &x, &model.phi).unwrap();
        }
        let mean = total / reps as f64;
        // Relative sampling error of the chip energy shrinks like
        // sqrt(2 (n-1) / (n m reps)) ~ 0.8%; allow 5 sigma.
        assert_relative_eq!(mean, expected, max_relative = 0.04);
    }

    #[test]
    fn postfilter_reduces_expected_distortion() {
        let model = SiteModel::with_unit_weights(
            VarianceProfile::LinearRamp { lo: 0.5, hi: 4.0 }
                .materialize(32)
                .unwrap(),
        )
        .unwrap();
        let plain = plan(4, vec![0.3; 32], false);
        let filtered = plan(4, vec![0.3; 32], true);
        let d_plain = embedding_distortion(&plain, &model).unwrap();
        let d_filtered = embedding_distortion(&filtered, &model).unwrap();
        assert!(d_filtered < d_plain);
    }

    #[test]
    fn negative_alpha_is_rejected() {
        let model = unit_model(2);
        let p = plan(1, vec![0.5, -0.1], false);
        assert!(embed(&[0.0, 0.0], &p, &model).is_err());
        assert!(embedding_distortion(&p, &model).is_err());
    }

    proptest! {
        #[test]
        fn embedding_is_linear_in_the_host(
            seed_a in 0u64..1000,
            seed_b in 1000u64..2000,
            n in 1usize..6,
        ) {
            let m = 32;
            let model = unit_model(m);
            let xa = sample_host(&model, seed_a);
            let xb = sample_host(&model, seed_b);
            let p = plan(n, vec![0.4; m], false);
            let ya = embed(&xa, &p, &model).unwrap();
            let yb = embed(&xb, &p, &model).unwrap();
            for i in 0..m {
                let da = ya[i] - xa[i];
                let db = yb[i] - xb[i];
                prop_assert!((da - db).abs() < 1e-12);
            }
        }
    }
}
