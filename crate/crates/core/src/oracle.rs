//! Independent brute-force verification of the closed-form solvers: dense
//! grid searches over attack and embedding parameters, and a Monte-Carlo
//! channel simulator.
//!
//! The grid searches evaluate the raw game objectives directly — they never
//! call the closed-form optimizers in their inner loops — so agreement
//! between the two is evidence, not tautology. The only sanctioned shortcut
//! is [`AlphaGridSpec::closed_form_response`], which lets the embedding-side
//! search reuse the attack closed form after the attack side has been
//! validated in the same run.

use crate::attack::{apply_attack, j_lambda, optimal_site_attack, AttackPlan};
use crate::embed::{embed, EmbeddingPlan};
use crate::error::{Error, Result};
use crate::extract::{map_decode, ChannelAssumption};
use crate::rng::{CounterRng, STREAM_TRIAL};
use crate::signal::{sample_host, SiteModel, SpreadingCode};
use crate::stats::NeumaierSum;
use rayon::prelude::*;

/// Rectangular search grid over attack parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Gain range `[lo, hi]` and point count.
    pub gamma: (f64, f64, usize),
    /// Noise-power range `[lo, hi]` (variance scale) and point count.
    pub sigma_delta_sq: (f64, f64, usize),
    /// Number of 10x zooms around the incumbent after the initial pass.
    pub refine_rounds: usize,
}

impl GridSpec {
    /// Default search box for a site: gains up to twice the Wiener gain and
    /// noise powers up to four times the host power, 400 x 400 points with
    /// three refinement rounds.
    pub fn default_for(alpha: f64, sigma_x: f64, n: usize) -> Self {
        let s2 = sigma_x * sigma_x;
        let w = n as f64 * alpha * alpha;
        let gamma_w = if s2 + w > 0.0 { s2 / (s2 + w) } else { 1.0 };
        GridSpec {
            gamma: (0.0, 2.0 * gamma_w, 400),
            sigma_delta_sq: (0.0, 4.0 * s2, 400),
            refine_rounds: 3,
        }
    }

    /// Check ranges and point counts.
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi, count)) in [
            ("gamma", self.gamma),
            ("sigma_delta_sq", self.sigma_delta_sq),
        ] {
            if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo > hi {
                return Err(Error::invalid(format!(
                    "{name} range [{lo}, {hi}] must satisfy 0 <= lo <= hi"
                )));
            }
            if count < 2 {
                return Err(Error::invalid(format!(
                    "{name} grid needs at least 2 points, got {count}"
                )));
            }
        }
        Ok(())
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

/// Exhaustive minimization of the attacker's objective over a gain/noise
/// grid, with local refinement.
///
/// Returns `(gamma, sigma_delta_sq, objective)` at the incumbent. Each
/// refinement round re-grids a 10x smaller box centered on the incumbent
/// (clipped to the original bounds) and additionally re-scans each axis at
/// full range against the other axis's zoomed window. The cross-scans let
/// the incumbent jump into a valley that the initial lattice stepped over
/// — a narrow basin misaligned with the coarse noise axis is invisible
/// until that axis is resolved finely, and by then a box around the wrong
/// incumbent would exclude the right gain. The incumbent objective never
/// increases across rounds.
pub fn grid_attack_search(
    alpha: f64,
    sigma_x: f64,
    phi: f64,
    lambda: f64,
    n: usize,
    spec: &GridSpec,
) -> Result<(f64, f64, f64)> {
    spec.validate()?;
    let (g_lo0, g_hi0, g_count) = spec.gamma;
    let (s_lo0, s_hi0, s_count) = spec.sigma_delta_sq;

    // One product-lattice pass; rows (fixed gain) evaluate independently in
    // parallel, and the final comparison runs in fixed row order so ties
    // resolve deterministically toward the smaller gain, then smaller noise.
    let sweep = |g_window: (f64, f64), s_window: (f64, f64)| -> (f64, f64, f64) {
        let gammas = linspace(g_window.0, g_window.1, g_count);
        let sigmas = linspace(s_window.0, s_window.1, s_count);
        let row_best: Vec<(f64, f64, f64)> = gammas
            .par_iter()
            .map(|&g| {
                let mut local = (g, sigmas[0], f64::INFINITY);
                for &s in &sigmas {
                    let j = j_lambda(g, s, alpha, sigma_x, phi, lambda, n);
                    if j < local.2 {
                        local = (g, s, j);
                    }
                }
                local
            })
            .collect();
        let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
        for cell in row_best {
            if cell.2 < best.2 {
                best = cell;
            }
        }
        best
    };

    let mut best = sweep((g_lo0, g_hi0), (s_lo0, s_hi0));
    let mut g_span = g_hi0 - g_lo0;
    let mut s_span = s_hi0 - s_lo0;
    for _round in 0..spec.refine_rounds {
        g_span /= 10.0;
        s_span /= 10.0;
        let g_window = (
            (best.0 - g_span / 2.0).max(g_lo0),
            (best.0 + g_span / 2.0).min(g_hi0),
        );
        let s_window = (
            (best.1 - s_span / 2.0).max(s_lo0),
            (best.1 + s_span / 2.0).min(s_hi0),
        );
        for candidate in [
            sweep(g_window, s_window),
            sweep((g_lo0, g_hi0), s_window),
            sweep(g_window, (s_lo0, s_hi0)),
        ] {
            if candidate.2 < best.2 {
                best = candidate;
            }
        }
    }
    Ok(best)
}

/// Search grid over embedding strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGridSpec {
    /// Number of strength samples over `[0, 3 mu]` (at least 1000).
    pub points: usize,
    /// Number of 10x zooms around the incumbent after the initial pass.
    pub refine_rounds: usize,
    /// Use the closed-form attacker response instead of a nested grid
    /// search. Only sanctioned after [`grid_attack_search`] has validated
    /// the closed form in the same run.
    pub closed_form_response: bool,
    /// Grid resolution of the nested attack search when the closed form is
    /// not used (points per axis; refinement rounds).
    pub response_points: usize,
    /// Refinement rounds of the nested attack search.
    pub response_refine_rounds: usize,
}

impl Default for AlphaGridSpec {
    fn default() -> Self {
        AlphaGridSpec {
            points: 1000,
            refine_rounds: 2,
            closed_form_response: false,
            response_points: 200,
            response_refine_rounds: 2,
        }
    }
}

impl AlphaGridSpec {
    /// Check the minimum point count.
    pub fn validate(&self) -> Result<()> {
        if self.points < 1000 {
            return Err(Error::invalid(format!(
                "strength grid needs at least 1000 points, got {}",
                self.points
            )));
        }
        if !self.closed_form_response && self.response_points < 2 {
            return Err(Error::invalid(
                "nested attack grid needs at least 2 points per axis",
            ));
        }
        Ok(())
    }
}

/// Hider's payoff at one strength, with the attacker's response found either
/// by nested grid search or by the validated closed form.
fn payoff_at(
    alpha: f64,
    sigma_x: f64,
    phi: f64,
    lambda: f64,
    chi: f64,
    n: usize,
    spec: &AlphaGridSpec,
) -> Result<f64> {
    let j = if spec.closed_form_response {
        let (g, sd2, _) = optimal_site_attack(alpha, sigma_x, phi, lambda, n)?;
        j_lambda(g, sd2, alpha, sigma_x, phi, lambda, n)
    } else {
        let grid = GridSpec {
            refine_rounds: spec.response_refine_rounds,
            ..GridSpec::default_for(alpha, sigma_x, n)
        };
        let grid = GridSpec {
            gamma: (grid.gamma.0, grid.gamma.1, spec.response_points),
            sigma_delta_sq: (
                grid.sigma_delta_sq.0,
                grid.sigma_delta_sq.1,
                spec.response_points,
            ),
            refine_rounds: grid.refine_rounds,
        };
        grid_attack_search(alpha, sigma_x, phi, lambda, n, &grid)?.2
    };
    Ok(j - chi * n as f64 * phi * phi * alpha * alpha)
}

/// Exhaustive maximization of the hider's payoff over a strength grid on
/// `[0, 3 mu]`, with local refinement.
///
/// Returns `(alpha, payoff)` at the incumbent.
pub fn grid_alpha_search(
    lambda: f64,
    chi: f64,
    phi: f64,
    sigma_x: f64,
    n: usize,
    alpha_grid: &AlphaGridSpec,
) -> Result<(f64, f64)> {
    alpha_grid.validate()?;
    let mu = lambda.sqrt() * phi * sigma_x * sigma_x;
    if mu == 0.0 {
        return Ok((
            0.0,
            payoff_at(0.0, sigma_x, phi, lambda, chi, n, alpha_grid)?,
        ));
    }
    let lo0 = 0.0;
    let hi0 = 3.0 * mu;
    let mut lo = lo0;
    let mut hi = hi0;
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for _round in 0..=alpha_grid.refine_rounds {
        let alphas = linspace(lo, hi, alpha_grid.points);
        let payoffs: Vec<(f64, f64)> = alphas
            .par_iter()
            .map(|&a| Ok((a, payoff_at(a, sigma_x, phi, lambda, chi, n, alpha_grid)?)))
            .collect::<Result<_>>()?;
        for (a, p) in payoffs {
            if p > best.1 {
                best = (a, p);
            }
        }
        let span = (hi - lo) / 10.0;
        lo = (best.0 - span / 2.0).max(lo0);
        hi = (best.0 + span / 2.0).min(hi0);
    }
    Ok(best)
}

/// Sample statistics of the simulated channel.
#[derive(Debug, Clone, PartialEq)]
pub struct McStats {
    /// Mean soft estimate per bit across trials.
    pub mean_soft: Vec<f64>,
    /// Pooled mean-squared soft error `(b_hat - b)^2` across trials and
    /// bits. Under a matched assumption this estimates the decoder's
    /// variance; under a mismatched one it also picks up the bias.
    pub var_soft: f64,
    /// Empirical bit-error rate across trials and bits.
    pub ber: f64,
    /// Standard error of each per-bit mean.
    pub se_mean: f64,
    /// Standard error of the pooled variance.
    pub se_var: f64,
    /// Standard error of the bit-error rate.
    pub se_ber: f64,
    /// Number of trials run.
    pub trials: usize,
}

/// Simulate the full channel `trials` times: draw a host, embed the plan's
/// message, attack, decode under `assumption`, and accumulate statistics.
///
/// Trial `t` uses host, noise, and code seeds derived from `(seed, t)`, so
/// trials are independent and the run is reproducible for any thread count.
/// The message stays fixed across trials; the spreading code is redrawn
/// each trial so that cross-bit interference averages out instead of
/// freezing into a per-bit bias, matching the interference-as-noise
/// accounting of the variance prediction.
pub fn monte_carlo_channel(
    model: &SiteModel,
    plan: &EmbeddingPlan,
    attack: &AttackPlan,
    assumption: &ChannelAssumption,
    trials: usize,
    seed: u64,
) -> Result<McStats> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let n = plan.message.len();
    let m = model.len();
    let seeder = CounterRng::new(seed, STREAM_TRIAL);
    let per_trial: Vec<(Vec<f64>, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<(Vec<f64>, usize)> {
            let host_seed = seeder.sub_seed(3 * t);
            let noise_seed = seeder.sub_seed(3 * t + 1);
            let code_seed = seeder.sub_seed(3 * t + 2);
            let x = sample_host(model, host_seed);
            let trial_plan = EmbeddingPlan {
                code_seed,
                ..plan.clone()
            };
            let y = embed(&x, &trial_plan, model)?;
            let trial_attack = attack.clone().with_noise_seed(noise_seed);
            let y_prime = apply_attack(&y, &trial_attack)?;
            let code = SpreadingCode::new(m, n, code_seed)?;
            let report = map_decode(&y_prime, &code, assumption)?;
            let errors = report
                .hard
                .iter()
                .zip(plan.message.bits())
                .filter(|(h, b)| h != b)
                .count();
            Ok((report.soft, errors))
        })
        .collect::<Result<_>>()?;
    let mut mean_acc: Vec<NeumaierSum> = vec![NeumaierSum::new(); n];
    let mut errors_total = 0usize;
    let mut square_acc = NeumaierSum::new();
    for (soft, errors) in &per_trial {
        errors_total += errors;
        for j in 0..n {
            mean_acc[j].add(soft[j]);
            let r = soft[j] - f64::from(plan.message.bits()[j]);
            square_acc.add(r * r);
        }
    }
    let tf = trials as f64;
    let mean_soft: Vec<f64> = mean_acc.iter().map(|s| s.total() / tf).collect();
    let var_soft = square_acc.total() / (trials * n) as f64;
    let bits_total = (trials * n) as f64;
    let ber = errors_total as f64 / bits_total;
    Ok(McStats {
        mean_soft,
        var_soft,
        ber,
        se_mean: (var_soft / tf).sqrt(),
        se_var: var_soft * (2.0 / (bits_total - 1.0)).sqrt(),
        se_ber: (ber * (1.0 - ber) / bits_total).sqrt(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{attack_cost, wiener_gain, Regime};
    use crate::signal::Message;
    use approx::assert_relative_eq;

    #[test]
    fn attack_grid_recovers_intermediate_optimum() {
        let spec = GridSpec::default_for(0.9, 1.0, 1);
        let (g, s, j) = grid_attack_search(0.9, 1.0, 1.0, 1.0, 1, &spec).unwrap();
        assert!((g - 0.123_456_790_123_456_76).abs() < 1e-3, "gamma {g}");
        assert!(
            (s - 0.095_869_532_083_523_83).abs() < 1e-3,
            "noise power {s}"
        );
        let j_closed = attack_cost(Regime::Intermediate, 0.9, 1.0, 1.0, 1.0, 1).unwrap();
        assert!(
            (j - j_closed).abs() <= 1e-4 * j_closed,
            "grid {j} vs closed {j_closed}"
        );
    }

    #[test]
    fn attack_grid_recovers_erase_optimum() {
        let spec = GridSpec::default_for(1.2, 1.0, 1);
        let (g, s, j) = grid_attack_search(1.2, 1.0, 1.0, 1.0, 1, &spec).unwrap();
        assert!(g.abs() < 1e-3);
        assert!(s.abs() < 1e-3);
        assert!((j - 1.0).abs() <= 1e-4);
    }

    #[test]
    fn attack_grid_recovers_wiener_optimum() {
        let spec = GridSpec::default_for(0.5, 1.0, 1);
        let (g, s, j) = grid_attack_search(0.5, 1.0, 1.0, 1.0, 1, &spec).unwrap();
        let gw = wiener_gain(1.0, 0.25).unwrap();
        assert!((g - gw).abs() < 1e-3, "gamma {g} vs {gw}");
        assert!(s.abs() < 1e-3);
        assert!((j - 0.45).abs() <= 1e-4 * 0.45);
    }

    #[test]
    fn refinement_never_worsens_the_incumbent() {
        let mut last = f64::INFINITY;
        for rounds in 0..4 {
            let spec = GridSpec {
                refine_rounds: rounds,
                ..GridSpec::default_for(0.9, 1.0, 1)
            };
            let (_, _, j) = grid_attack_search(0.9, 1.0, 1.0, 1.0, 1, &spec).unwrap();
            assert!(j <= last + 1e-15, "round {rounds}: {j} > {last}");
            last = j;
        }
    }

    #[test]
    fn alpha_grid_finds_the_quartic_root() {
        let spec = AlphaGridSpec {
            closed_form_response: true,
            ..AlphaGridSpec::default()
        };
        let (alpha, payoff) = grid_alpha_search(1.0, 0.1, 1.0, 1.0, 1, &spec).unwrap();
        assert!(
            (alpha - 0.926_359_305_731_173_2).abs() < 2e-3,
            "alpha {alpha}"
        );
        let closed = crate::game::site_payoff(0.926_359_305_731_173_2, 1.0, 1.0, 1.0, 0.1, 1);
        assert!((payoff - closed).abs() <= 1e-6 * closed.abs());
    }

    #[test]
    fn alpha_grid_with_nested_attack_search_agrees_with_closed_response() {
        // Independent mode: the attacker's response comes from a grid, not
        // the closed form. Coarser but must agree at modest tolerance.
        let nested = AlphaGridSpec {
            points: 1000,
            refine_rounds: 1,
            closed_form_response: false,
            response_points: 60,
            response_refine_rounds: 2,
        };
        let fast = AlphaGridSpec {
            closed_form_response: true,
            ..AlphaGridSpec::default()
        };
        let (a1, p1) = grid_alpha_search(1.0, 0.1, 1.0, 1.0, 1, &nested).unwrap();
        let (a2, p2) = grid_alpha_search(1.0, 0.1, 1.0, 1.0, 1, &fast).unwrap();
        assert!((a1 - a2).abs() < 5e-3, "{a1} vs {a2}");
        assert!((p1 - p2).abs() <= 2e-3 * p2.abs().max(1e-9), "{p1} vs {p2}");
    }

    #[test]
    fn alpha_grid_huge_chi_prefers_zero() {
        let spec = AlphaGridSpec {
            closed_form_response: true,
            ..AlphaGridSpec::default()
        };
        let (alpha, _) = grid_alpha_search(1.0, 1e9, 1.0, 1.0, 1, &spec).unwrap();
        assert_eq!(alpha, 0.0);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let m = 64;
        let model = SiteModel::with_unit_weights(vec![1.0; m]).unwrap();
        let plan = EmbeddingPlan {
            message: Message::random(2, 3).unwrap(),
            alpha: vec![0.4; m],
            code_seed: 8,
            postfilter: false,
        };
        let attack = AttackPlan::uniform(m, 0.9, 0.2, 0).unwrap();
        let assumption = ChannelAssumption::matched(&attack, &plan.alpha, &model, 2).unwrap();
        let a = monte_carlo_channel(&model, &plan, &attack, &assumption, 500, 42).unwrap();
        let b = monte_carlo_channel(&model, &plan, &attack, &assumption, 500, 42).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_channel(&model, &plan, &attack, &assumption, 500, 43).unwrap();
        assert_ne!(a.mean_soft, c.mean_soft);
    }

    #[test]
    fn zero_host_no_attack_never_errs() {
        let m = 256;
        let model = SiteModel::with_unit_weights(vec![0.0; m]).unwrap();
        let plan = EmbeddingPlan {
            message: Message::random(4, 5).unwrap(),
            alpha: vec![0.3; m],
            code_seed: 2,
            postfilter: false,
        };
        let attack = AttackPlan::identity(m);
        // The assumption must carry positive channel variance; the bit
        // interference term alpha^2 (n - 1) provides it.
        let assumption = ChannelAssumption {
            gamma: vec![1.0; m],
            sigma_delta: vec![0.0; m],
            alpha: plan.alpha.clone(),
            sigma_x: vec![0.0; m],
            n: 4,
        };
        let stats = monte_carlo_channel(&model, &plan, &attack, &assumption, 1000, 11).unwrap();
        assert_eq!(stats.ber, 0.0);
    }

    #[test]
    fn matched_variance_tracks_prediction() {
        // Small version of the variance-agreement check (the full-size one
        // lives in the acceptance suite).
        let m = 500;
        let n = 4;
        let model = SiteModel::with_unit_weights(vec![1.0; m]).unwrap();
        let plan = EmbeddingPlan {
            message: Message::random(n, 1).unwrap(),
            alpha: vec![0.3; m],
            code_seed: 10,
            postfilter: false,
        };
        let attack = AttackPlan::uniform(m, 1.0, 0.5, 0).unwrap();
        let assumption = ChannelAssumption::matched(&attack, &plan.alpha, &model, n).unwrap();
        let trials = 4000;
        let stats = monte_carlo_channel(&model, &plan, &attack, &assumption, trials, 77).unwrap();
        let predicted = {
            let code = plan.code(m).unwrap();
            let y = vec![0.0; m];
            let _ = &code;
            crate::extract::map_decode(&y, &code, &assumption)
                .unwrap()
                .sigma_b_sq
        };
        assert_relative_eq!(stats.var_soft, predicted, max_relative = 0.10);
        // Unbiasedness: per-bit means near the true bits.
        for (j, &b) in plan.message.bits().iter().enumerate() {
            let gap = (stats.mean_soft[j] - f64::from(b)).abs();
            assert!(
                gap < 4.0 * (predicted / trials as f64).sqrt(),
                "bit {j} biased: gap {gap}"
            );
        }
    }

    #[test]
    fn mismatched_assumption_increases_variance() {
        let m = 400;
        let n = 2;
        let model = SiteModel::with_unit_weights(vec![1.0; m]).unwrap();
        let plan = EmbeddingPlan {
            message: Message::random(n, 9).unwrap(),
            alpha: vec![0.4; m],
            code_seed: 12,
            postfilter: false,
        };
        // Channel applies a Wiener-like shrink with noise.
        let attack = AttackPlan::uniform(m, 0.6, 0.5, 0).unwrap();
        let matched = ChannelAssumption::matched(&attack, &plan.alpha, &model, n).unwrap();
        let mismatched = ChannelAssumption::no_attack(&plan.alpha, &model, n).unwrap();
        let trials = 3000;
        let good = monte_carlo_channel(&model, &plan, &attack, &matched, trials, 5).unwrap();
        let bad = monte_carlo_channel(&model, &plan, &attack, &mismatched, trials, 5).unwrap();
        assert!(
            bad.var_soft > good.var_soft,
            "mismatched {} should exceed matched {}",
            bad.var_soft,
            good.var_soft
        );
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec {
            gamma: (0.0, 1.0, 1),
            sigma_delta_sq: (0.0, 1.0, 4),
            refine_rounds: 0,
        }
        .validate()
        .is_err());
        assert!(GridSpec {
            gamma: (1.0, 0.5, 4),
            sigma_delta_sq: (0.0, 1.0, 4),
            refine_rounds: 0,
        }
        .validate()
        .is_err());
        assert!(AlphaGridSpec {
            points: 10,
            ..AlphaGridSpec::default()
        }
        .validate()
        .is_err());
    }
}
