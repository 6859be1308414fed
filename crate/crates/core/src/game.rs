//! The hider's side of the game: per-site optimal embedding strengths in
//! each attack regime, regime selection by payoff comparison, per-site
//! equilibrium solutions, and calibration of the two distortion multipliers
//! to distortion budgets.
//!
//! The hider maximizes leaked energy-per-bit minus `chi` times the weighted
//! embedding distortion, knowing the attacker will respond with the
//! closed-form optimal attack priced at `lambda`. All solves are per site
//! and independent, so the aggregate equilibrium is a deterministic
//! reduction over sites.

use crate::attack::{
    intermediate_margin, j_lambda, optimal_site_attack, regime_threshold, sawgn_variance,
    GameParams, Regime,
};
use crate::error::{Error, Result};
use crate::signal::SiteModel;
use crate::stats::NeumaierSum;
use rayon::prelude::*;

/// Which branch produced the intermediate-regime strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntermediateBranch {
    /// The quartic stationarity root, accepted inside its regime.
    Quartic,
    /// The root left the regime; the regime-boundary solution was used.
    Boundary,
}

/// Full result of the intermediate-regime solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntermediateSolve {
    /// The strength the hider should use.
    pub alpha: f64,
    /// The raw quartic root (equals `alpha` on the quartic branch).
    pub quartic_root: f64,
    /// Which branch `alpha` came from.
    pub branch: IntermediateBranch,
}

/// Stationarity polynomial of the intermediate regime:
/// `p(alpha) = mu^2 - mu * alpha - chi * n * phi^2 * alpha^4` with
/// `mu = sqrt(lambda) * phi * sigma_x^2`.
pub fn intermediate_polynomial(
    alpha: f64,
    lambda: f64,
    chi: f64,
    phi: f64,
    sigma_x: f64,
    n: usize,
) -> f64 {
    let mu = regime_threshold(lambda, phi, sigma_x);
    mu * mu - mu * alpha - chi * n as f64 * phi * phi * alpha.powi(4)
}

/// Bisection to absolute width `tol` followed by a few Newton steps,
/// clamped to `[lo, hi]`. `f` must change sign across the bracket.
fn bisect_then_polish(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> f64 {
    let f_lo = f(lo);
    debug_assert!(f_lo * f(hi) <= 0.0, "bracket must straddle a sign change");
    let rising = f_lo < 0.0;
    let mut iterations = 0;
    while hi - lo > tol && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = f(x) / d;
        if !step.is_finite() {
            break;
        }
        x = (x - step).clamp(lo.min(hi), hi.max(lo));
    }
    x
}

/// Optimal strength against the erase attack: the largest strength the
/// attacker will still bother erasing, `mu = sqrt(lambda) * phi * sigma_x^2`.
pub fn alpha_erase(lambda: f64, phi: f64, sigma_x: f64) -> f64 {
    regime_threshold(lambda, phi, sigma_x)
}

/// Optimal strength when embedding is followed by a Wiener post-filter:
/// the same threshold value as [`alpha_erase`].
pub fn alpha_postfilter(lambda: f64, phi: f64, sigma_x: f64) -> f64 {
    regime_threshold(lambda, phi, sigma_x)
}

/// Optimal strength inside the intermediate regime, with the boundary
/// fallback when the stationary point leaves the regime.
///
/// The stationarity root of `p(alpha) = mu^2 - mu alpha - chi n phi^2
/// alpha^4` is bracketed on `[0, mu]` (`p(0) = mu^2 > 0`, `p(mu) < 0`),
/// bisected to `1e-12` absolute and Newton-polished. If that root violates
/// the regime inequality, the strength solving the regime-boundary equation
/// `mu alpha^2 = (mu - alpha)(sigma_x^2 + n alpha^2)` is returned instead.
pub fn alpha_intermediate_solve(
    lambda: f64,
    chi: f64,
    phi: f64,
    sigma_x: f64,
    n: usize,
) -> IntermediateSolve {
    let mu = regime_threshold(lambda, phi, sigma_x);
    if mu == 0.0 {
        return IntermediateSolve {
            alpha: 0.0,
            quartic_root: 0.0,
            branch: IntermediateBranch::Quartic,
        };
    }
    let nf = n as f64;
    let p = |a: f64| mu * mu - mu * a - chi * nf * phi * phi * a.powi(4);
    let dp = |a: f64| -mu - 4.0 * chi * nf * phi * phi * a.powi(3);
    let root = bisect_then_polish(p, dp, 0.0, mu, 1e-12);
    if intermediate_margin(root, sigma_x, phi, lambda, n) >= 0.0 {
        return IntermediateSolve {
            alpha: root,
            quartic_root: root,
            branch: IntermediateBranch::Quartic,
        };
    }
    // The stationary point fell below the regime: use the boundary point,
    // where the margin vanishes. The margin rises from -mu sigma_x^2 at 0
    // to mu^3 at mu, so the bracket always straddles the root.
    let s2 = sigma_x * sigma_x;
    let margin = |a: f64| (a - mu) * (s2 + nf * a * a) + mu * a * a;
    let dmargin = |a: f64| (s2 + nf * a * a) + (a - mu) * 2.0 * nf * a + 2.0 * mu * a;
    let boundary = bisect_then_polish(margin, dmargin, 0.0, mu, 1e-12);
    IntermediateSolve {
        alpha: boundary,
        quartic_root: root,
        branch: IntermediateBranch::Boundary,
    }
}

/// Strength returned by the intermediate-regime solve (see
/// [`alpha_intermediate_solve`] for the branch detail).
pub fn alpha_intermediate(lambda: f64, chi: f64, phi: f64, sigma_x: f64, n: usize) -> f64 {
    alpha_intermediate_solve(lambda, chi, phi, sigma_x, n).alpha
}

/// Optimal strength against the Wiener attack.
///
/// Uses the closed form with both multipliers scaled by the message length
/// (`lambda' = n lambda`, `chi' = n chi`); the scaling absorbs the
/// interference-power approximation that replaces `n - 1` by `n`, so the
/// formula is exact only in the large-`n` limit. Returns 0 when the inner
/// numerator is non-positive: such sites are too strong to mark robustly.
pub fn alpha_wiener(lambda: f64, chi: f64, phi: f64, sigma_x: f64, n: usize) -> f64 {
    let nf = n as f64;
    let lambda_p = nf * lambda;
    let chi_p = nf * chi;
    let s2 = sigma_x * sigma_x;
    let numerator = sigma_x * (1.0 + lambda_p * phi * phi * s2).sqrt() - chi_p.sqrt() * phi * s2;
    if numerator <= 0.0 {
        return 0.0;
    }
    let denominator = chi_p.sqrt() * nf * phi;
    (numerator / denominator).sqrt()
}

/// Hider's per-site payoff at strength `alpha`: the attacker's optimal
/// objective minus the embedding-distortion penalty
/// `chi * n * phi^2 * alpha^2`.
pub fn site_payoff(alpha: f64, sigma_x: f64, phi: f64, lambda: f64, chi: f64, n: usize) -> f64 {
    let (g, sd2, _) = optimal_site_attack(alpha, sigma_x, phi, lambda, n)
        .expect("non-negative site parameters always classify");
    j_lambda(g, sd2, alpha, sigma_x, phi, lambda, n) - chi * n as f64 * phi * phi * alpha * alpha
}

/// Best embedding strength for one site and the attack regime it provokes.
///
/// Without the post-filter, the candidates are: no embedding at all, the
/// Wiener-regime closed form, the intermediate-regime solve, and the erase
/// threshold. Each is priced under the attacker's best response and the
/// argmax wins; ties break toward the smaller strength (less distortion at
/// equal payoff). With the post-filter, the threshold strength is used
/// directly.
pub fn optimal_alpha(
    lambda: f64,
    chi: f64,
    phi: f64,
    sigma_x: f64,
    n: usize,
    postfilter: bool,
) -> Result<(f64, Regime)> {
    GameParams { lambda, chi, n }.validate()?;
    if !(phi > 0.0) || !phi.is_finite() {
        return Err(Error::invalid(format!(
            "phi = {phi} must be positive and finite"
        )));
    }
    if !(sigma_x >= 0.0) || !sigma_x.is_finite() {
        return Err(Error::invalid(format!(
            "sigma_x = {sigma_x} must be non-negative and finite"
        )));
    }
    if postfilter {
        let alpha = alpha_postfilter(lambda, phi, sigma_x);
        let (_, _, regime) = optimal_site_attack(alpha, sigma_x, phi, lambda, n)?;
        return Ok((alpha, regime));
    }
    let mut candidates = [
        0.0,
        alpha_wiener(lambda, chi, phi, sigma_x, n),
        alpha_intermediate(lambda, chi, phi, sigma_x, n),
        alpha_erase(lambda, phi, sigma_x),
    ];
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("strengths are finite"));
    let mut best_alpha = candidates[0];
    let mut best_payoff = site_payoff(best_alpha, sigma_x, phi, lambda, chi, n);
    for &alpha in &candidates[1..] {
        if alpha == best_alpha {
            continue;
        }
        let payoff = site_payoff(alpha, sigma_x, phi, lambda, chi, n);
        if payoff > best_payoff {
            best_alpha = alpha;
            best_payoff = payoff;
        }
    }
    let (_, _, regime) = optimal_site_attack(best_alpha, sigma_x, phi, lambda, n)?;
    Ok((best_alpha, regime))
}

/// One site's solved game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteEquilibrium {
    /// Hider's strength.
    pub alpha: f64,
    /// Attacker's gain.
    pub gamma: f64,
    /// Attacker's noise power.
    pub sigma_delta_sq: f64,
    /// Attack regime at this site.
    pub regime: Regime,
    /// Leaked energy-per-bit contribution `alpha^2 gamma^2 / V`.
    pub rho: f64,
}

/// The solved game across all sites, with additive aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    /// Per-site solutions in site order.
    pub sites: Vec<SiteEquilibrium>,
    /// Expected weighted embedding distortion.
    pub d_xy: f64,
    /// Expected weighted attack distortion at the attacker's best response.
    pub d_xy_prime: f64,
    /// Total leaked energy-per-bit to noise ratio.
    pub eb_n0: f64,
    /// Attacker's multiplier the game was solved at.
    pub lambda: f64,
    /// Hider's multiplier the game was solved at.
    pub chi: f64,
    /// Whether the hider's strengths assume the post-filter.
    pub postfilter: bool,
    /// Message length.
    pub n: usize,
}

impl EquilibriumReport {
    /// Per-site strengths in site order.
    pub fn alphas(&self) -> Vec<f64> {
        self.sites.iter().map(|s| s.alpha).collect()
    }
}

fn solve_site(
    sigma_x: f64,
    phi: f64,
    params: &GameParams,
    postfilter: bool,
) -> Result<(SiteEquilibrium, f64, f64)> {
    let (alpha, _) = optimal_alpha(
        params.lambda,
        params.chi,
        phi,
        sigma_x,
        params.n,
        postfilter,
    )?;
    let (gamma, sigma_delta_sq, regime) =
        optimal_site_attack(alpha, sigma_x, phi, params.lambda, params.n)?;
    let v = sawgn_variance(gamma, sigma_delta_sq.sqrt(), alpha, sigma_x, params.n);
    let rho = if gamma * alpha == 0.0 || v == 0.0 {
        0.0
    } else {
        alpha * alpha * gamma * gamma / v
    };
    let nf = params.n as f64;
    let phi2 = phi * phi;
    let s2 = sigma_x * sigma_x;
    let w = nf * alpha * alpha;
    let d_xy = if postfilter {
        if s2 + w > 0.0 {
            phi2 * s2 * w / (s2 + w)
        } else {
            0.0
        }
    } else {
        phi2 * w
    };
    let d_xy_prime = phi2
        * (s2 * (1.0 - gamma) * (1.0 - gamma)
            + nf * gamma * gamma * alpha * alpha
            + sigma_delta_sq);
    Ok((
        SiteEquilibrium {
            alpha,
            gamma,
            sigma_delta_sq,
            regime,
            rho,
        },
        d_xy,
        d_xy_prime,
    ))
}

/// Solve the game at fixed multipliers: the hider's best strength per site,
/// the attacker's best response to it, and the additive aggregates.
pub fn equilibrium(
    model: &SiteModel,
    params: &GameParams,
    postfilter: bool,
) -> Result<EquilibriumReport> {
    params.validate()?;
    let solved: Vec<(SiteEquilibrium, f64, f64)> = model
        .sigma_x
        .par_iter()
        .zip(model.phi.par_iter())
        .map(|(&s, &p)| solve_site(s, p, params, postfilter))
        .collect::<Result<_>>()?;
    let mut d_xy = NeumaierSum::new();
    let mut d_xy_prime = NeumaierSum::new();
    let mut eb = NeumaierSum::new();
    let mut sites = Vec::with_capacity(solved.len());
    for (site, dx, dxp) in solved {
        d_xy.add(dx);
        d_xy_prime.add(dxp);
        eb.add(site.rho);
        sites.push(site);
    }
    Ok(EquilibriumReport {
        sites,
        d_xy: d_xy.total(),
        d_xy_prime: d_xy_prime.total(),
        eb_n0: eb.total(),
        lambda: params.lambda,
        chi: params.chi,
        postfilter,
        n: params.n,
    })
}

const SCAN_LO: f64 = 1e-8;
const SCAN_HI: f64 = 1e4;
const SCAN_POINTS: usize = 13;
const BUDGET_REL_TOL: f64 = 1e-3;
const MAX_BISECTIONS: usize = 200;

/// Logarithmically spaced scan values over the multiplier range.
fn scan_values() -> Vec<f64> {
    let lo = SCAN_LO.log10();
    let hi = SCAN_HI.log10();
    (0..SCAN_POINTS)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (SCAN_POINTS - 1) as f64))
        .collect()
}

/// Find `x` in the log-spaced scan range with `value(x)` within the relative
/// budget tolerance of `target`, assuming `value` falls as `x` rises.
///
/// The scan locates a bracket and samples the assumed monotonicity; a
/// sampled violation switches to a golden-section minimization of
/// `|value - target|` around the best scan point (and logs it), so a locally
/// non-monotone response still calibrates. Returns the evaluation made at
/// the accepted point alongside it.
fn calibrate_axis<T>(
    axis: &str,
    target: f64,
    mut value: impl FnMut(f64) -> Result<Option<(f64, T)>>,
) -> Result<(f64, T)> {
    let xs = scan_values();
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(xs.len());
    let mut best: Option<(f64, f64, T)> = None;
    for &x in &xs {
        if let Some((v, payload)) = value(x)? {
            let better = best
                .as_ref()
                .map(|(_, bv, _)| (v - target).abs() < (bv - target).abs())
                .unwrap_or(true);
            if better {
                best = Some((x, v, payload));
            }
            samples.push((x, v));
        }
    }
    let Some((mut best_x, mut best_v, mut best_payload)) = best else {
        return Err(Error::InfeasibleBudget {
            target,
            lo: f64::NAN,
            hi: f64::NAN,
        });
    };
    let min_v = samples
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::INFINITY, f64::min);
    let max_v = samples
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let monotone = samples
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9) + 1e-12);
    if monotone {
        // Locate the bracket [x_k, x_{k+1}] with value crossing the target.
        let mut bracket = None;
        for w in samples.windows(2) {
            if w[0].1 >= target && target >= w[1].1 {
                bracket = Some((w[0].0, w[1].0));
                break;
            }
        }
        let Some((mut lo, mut hi)) = bracket else {
            return Err(Error::InfeasibleBudget {
                target,
                lo: min_v,
                hi: max_v,
            });
        };
        for _ in 0..MAX_BISECTIONS {
            if (best_v - target).abs() <= BUDGET_REL_TOL * target {
                break;
            }
            let mid = (lo * hi).sqrt();
            let Some((v, payload)) = value(mid)? else {
                break;
            };
            if (v - target).abs() < (best_v - target).abs() {
                best_x = mid;
                best_v = v;
                best_payload = payload;
            }
            if v >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    } else {
        eprintln!(
            "calibration: {axis} response is not monotone over the scan; \
             falling back to golden-section search"
        );
        // Golden-section minimization of |value - target| on the log axis,
        // bracketed by the scan neighbors of the best sample.
        let idx = samples.iter().position(|&(x, _)| x == best_x).unwrap_or(0);
        let lo = samples[idx.saturating_sub(1)].0.ln();
        let hi = samples[(idx + 1).min(samples.len() - 1)].0.ln();
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut eval = |lx: f64, best: &mut (f64, f64, Option<T>)| -> Result<f64> {
            let x = lx.exp();
            match value(x)? {
                Some((v, payload)) => {
                    if (v - target).abs() < (best.1 - target).abs() {
                        *best = (x, v, Some(payload));
                    }
                    Ok((v - target).abs())
                }
                None => Ok(f64::INFINITY),
            }
        };
        let mut tracked = (best_x, best_v, None);
        let mut fc = eval(c, &mut tracked)?;
        let mut fd = eval(d, &mut tracked)?;
        for _ in 0..MAX_BISECTIONS {
            if (b - a).abs() < 1e-12 {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = eval(c, &mut tracked)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = eval(d, &mut tracked)?;
            }
            if (tracked.1 - target).abs() <= BUDGET_REL_TOL * target {
                break;
            }
        }
        if let (x, v, Some(payload)) = tracked {
            best_x = x;
            best_v = v;
            best_payload = payload;
        }
    }
    if (best_v - target).abs() > BUDGET_REL_TOL * target {
        return Err(Error::InfeasibleBudget {
            target,
            lo: min_v.min(best_v),
            hi: max_v.max(best_v),
        });
    }
    Ok((best_x, best_payload))
}

/// Calibrate the hider's multiplier so the equilibrium embedding distortion
/// meets `d_xy_max` at the given attacker multiplier.
///
/// This is the inner loop of [`calibrate_multipliers`]; it is also useful on
/// its own when the attacker's price is part of the scenario (for example a
/// fixed design point) and only the embedding budget must be met.
pub fn calibrate_chi(
    model: &SiteModel,
    n: usize,
    lambda: f64,
    d_xy_max: f64,
    postfilter: bool,
) -> Result<(f64, EquilibriumReport)> {
    calibrate_axis("embedding-distortion (chi)", d_xy_max, |chi| {
        let report = equilibrium(model, &GameParams { lambda, chi, n }, postfilter)?;
        // Larger chi prices distortion higher, so D_xy falls as chi rises;
        // present the axis to the solver in falling orientation.
        Ok(Some((report.d_xy, report)))
    })
}

/// Calibrate both multipliers to distortion budgets: the outer loop sets the
/// attacker's multiplier so the equilibrium attack distortion meets
/// `d_xy_prime_max`, re-calibrating the hider's multiplier to `d_xy_max`
/// at every probe.
///
/// Budget errors are driven below `1e-3` relative (or 200 iterations per
/// axis). An unreachable budget is reported with the achievable range.
pub fn calibrate_multipliers(
    model: &SiteModel,
    n: usize,
    d_xy_max: f64,
    d_xy_prime_max: f64,
    postfilter: bool,
) -> Result<(f64, f64, EquilibriumReport)> {
    if !(d_xy_max > 0.0) || !(d_xy_prime_max > 0.0) {
        return Err(Error::invalid(
            "distortion budgets must be positive".to_string(),
        ));
    }
    // Larger lambda prices attack distortion higher, so D_xy' falls as
    // lambda rises: the same falling-axis solver applies.
    let (lambda, (chi, report)) = calibrate_axis(
        "attack-distortion (lambda)",
        d_xy_prime_max,
        |lambda| match calibrate_chi(model, n, lambda, d_xy_max, postfilter) {
            Ok((chi, report)) => Ok(Some((report.d_xy_prime, (chi, report)))),
            Err(Error::InfeasibleBudget { .. }) => Ok(None),
            Err(e) => Err(e),
        },
    )?;
    Ok((lambda, chi, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::VarianceProfile;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Shared reference parameters: perceptual weight at sigma_x = 10.
    const FIG_PHI: f64 = 0.301_511_344_577_763_62; // (1 + 10)^(-1/2)

    #[test]
    fn erase_strength_reference_points() {
        assert_eq!(alpha_erase(1.0, 1.0, 1.0), 1.0);
        assert_relative_eq!(
            alpha_erase(0.002, FIG_PHI, 10.0),
            1.348_399_724_926_484_3,
            max_relative = 1e-14
        );
        assert_eq!(alpha_erase(0.002, FIG_PHI, 0.0), 0.0);
        assert_eq!(alpha_postfilter(1.0, 1.0, 1.0), alpha_erase(1.0, 1.0, 1.0));
    }

    #[test]
    fn intermediate_strength_reference_point() {
        let solve = alpha_intermediate_solve(1.0, 0.1, 1.0, 1.0, 1);
        assert_eq!(solve.branch, IntermediateBranch::Quartic);
        assert_relative_eq!(solve.alpha, 0.926_359_305_731_173_2, max_relative = 1e-11);
        let residual = intermediate_polynomial(solve.quartic_root, 1.0, 0.1, 1.0, 1.0, 1);
        assert!(residual.abs() < 1e-12, "residual = {residual}");
        // The accepted root satisfies the regime inequality.
        assert!(intermediate_margin(solve.alpha, 1.0, 1.0, 1.0, 1) >= 0.0);
    }

    #[test]
    fn intermediate_strength_approaches_threshold_as_chi_vanishes() {
        let mu = alpha_erase(1.0, 1.0, 1.0);
        for k in 4..10 {
            let chi = 10f64.powi(-k);
            let alpha = alpha_intermediate(1.0, chi, 1.0, 1.0, 1);
            assert!((mu - alpha).abs() < 10f64.powi(-k + 1));
        }
    }

    #[test]
    fn intermediate_boundary_fallback_reference_point() {
        // At the bold-curve parameters and sigma_x = 10 the quartic root
        // leaves the regime and the boundary solution takes over.
        let solve = alpha_intermediate_solve(0.002, 0.0028, FIG_PHI, 10.0, 100);
        assert_eq!(solve.branch, IntermediateBranch::Boundary);
        assert_relative_eq!(solve.alpha, 1.339_740_221_797_773_9, max_relative = 1e-10);
        // The boundary point sits on the regime edge: margin ~ 0.
        let margin = intermediate_margin(solve.alpha, 10.0, FIG_PHI, 0.002, 100);
        assert!(margin.abs() < 1e-8, "margin = {margin}");
        // The rejected quartic root lies outside the regime.
        assert!(intermediate_margin(solve.quartic_root, 10.0, FIG_PHI, 0.002, 100) < 0.0);
    }

    #[test]
    fn wiener_strength_reference_point() {
        assert_relative_eq!(
            alpha_wiener(0.002, 0.0028, FIG_PHI, 10.0, 100),
            0.228_491_929_000_353_48,
            max_relative = 1e-13
        );
    }

    #[test]
    fn wiener_strength_clamps_on_strong_hosts() {
        // The numerator changes sign near sigma_x ~ 13.43 at the bold-curve
        // parameters; beyond it no robust embedding exists.
        let phi = |s: f64| 1.0 / (1.0 + s).sqrt();
        assert!(alpha_wiener(0.002, 0.0028, phi(13.0), 13.0, 100) > 0.0);
        assert_eq!(alpha_wiener(0.002, 0.0028, phi(14.0), 14.0, 100), 0.0);
    }

    #[test]
    fn optimal_alpha_picks_wiener_candidate_at_reference_point() {
        let (alpha, regime) = optimal_alpha(0.002, 0.0028, FIG_PHI, 10.0, 100, false).unwrap();
        assert_relative_eq!(alpha, 0.228_491_929_000_353_48, max_relative = 1e-13);
        assert_eq!(regime, Regime::Wiener);
        // Candidate payoffs at this point, frozen from an independent
        // evaluation: erase -0.028099, boundary -0.027548, wiener +6.96e-5.
        let erase = site_payoff(1.348_399_724_926_484_3, 10.0, FIG_PHI, 0.002, 0.0028, 100);
        assert_relative_eq!(erase, -0.028_099_173_553_719_01, max_relative = 1e-11);
        let boundary = site_payoff(1.339_740_221_797_773_9, 10.0, FIG_PHI, 0.002, 0.0028, 100);
        assert_relative_eq!(boundary, -0.027_548_421_479_455_885, max_relative = 1e-9);
        let wiener = site_payoff(alpha, 10.0, FIG_PHI, 0.002, 0.0028, 100);
        assert_relative_eq!(wiener, 6.962_863_515_227_167e-5, max_relative = 1e-9);
    }

    #[test]
    fn optimal_alpha_is_zero_when_distortion_is_priced_out() {
        let (alpha, _) = optimal_alpha(0.002, 1e9, FIG_PHI, 10.0, 100, false).unwrap();
        assert_eq!(alpha, 0.0);
    }

    #[test]
    fn optimal_alpha_curve_rises_peaks_and_dies() {
        // Strength as a function of host scale at the bold-curve parameters:
        // rises from ~0, peaks, and returns to exactly 0 for strong hosts.
        let alphas: Vec<f64> = (1..=40)
            .map(|k| {
                let s = k as f64 * 0.5;
                let phi = 1.0 / (1.0 + s).sqrt();
                optimal_alpha(0.002, 0.0028, phi, s, 100, false).unwrap().0
            })
            .collect();
        let peak = alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let peak_idx = alphas.iter().position(|&a| a == peak).unwrap();
        assert!(peak > alphas[0]);
        assert!(peak_idx > 0 && peak_idx < alphas.len() - 1);
        assert_eq!(*alphas.last().unwrap(), 0.0);
        // Zero tail persists once it starts.
        let first_zero = alphas.iter().position(|&a| a == 0.0).unwrap();
        assert!(first_zero > peak_idx);
        assert!(alphas[first_zero..].iter().all(|&a| a == 0.0));
    }

    #[test]
    fn postfilter_strength_is_the_threshold() {
        let (alpha, _) = optimal_alpha(0.002, 0.0028, FIG_PHI, 10.0, 100, true).unwrap();
        assert_relative_eq!(alpha, 1.348_399_724_926_484_3, max_relative = 1e-14);
    }

    #[test]
    fn equilibrium_aggregates_are_per_site_sums() {
        let sigma = VarianceProfile::LinearRamp { lo: 1.0, hi: 30.0 }
            .materialize(64)
            .unwrap();
        let phi = crate::signal::perceptual_weights(&sigma, crate::signal::WeightRule::Perceptual);
        let model = SiteModel::new(sigma, phi).unwrap();
        let params = GameParams {
            lambda: 0.002,
            chi: 0.0028,
            n: 100,
        };
        let report = equilibrium(&model, &params, false).unwrap();
        assert_eq!(report.sites.len(), 64);
        let eb: f64 = report.sites.iter().map(|s| s.rho).sum();
        assert_relative_eq!(eb, report.eb_n0, max_relative = 1e-12);
        let mut d_xy = 0.0;
        let mut d_xy_prime = 0.0;
        for (site, (&s, &p)) in report
            .sites
            .iter()
            .zip(model.sigma_x.iter().zip(&model.phi))
        {
            let w = 100.0 * site.alpha * site.alpha;
            d_xy += p * p * w;
            d_xy_prime += p
                * p
                * (s * s * (1.0 - site.gamma).powi(2)
                    + site.gamma * site.gamma * w
                    + site.sigma_delta_sq);
            // Reported attack parameters are the attacker's best response.
            let (g, sd2, regime) =
                optimal_site_attack(site.alpha, s, p, params.lambda, params.n).unwrap();
            assert_eq!(g, site.gamma);
            assert_eq!(sd2, site.sigma_delta_sq);
            assert_eq!(regime, site.regime);
        }
        assert_relative_eq!(d_xy, report.d_xy, max_relative = 1e-12);
        assert_relative_eq!(d_xy_prime, report.d_xy_prime, max_relative = 1e-12);
    }

    #[test]
    fn prohibitive_chi_switches_everything_off() {
        let model = SiteModel::with_unit_weights(vec![1.0, 5.0, 20.0]).unwrap();
        let report = equilibrium(
            &model,
            &GameParams {
                lambda: 0.02,
                chi: 1e12,
                n: 16,
            },
            false,
        )
        .unwrap();
        assert!(report.sites.iter().all(|s| s.alpha == 0.0));
        assert_eq!(report.d_xy, 0.0);
        assert_eq!(report.eb_n0, 0.0);
    }

    #[test]
    fn calibration_meets_both_budgets_at_small_scale() {
        let m = 512;
        let sigma = VarianceProfile::LinearRamp { lo: 1.0, hi: 30.0 }
            .materialize(m)
            .unwrap();
        let phi = crate::signal::perceptual_weights(&sigma, crate::signal::WeightRule::Perceptual);
        let model = SiteModel::new(sigma, phi).unwrap();
        let d_xy_max = m as f64;
        let d_xy_prime_max = 2.0 * m as f64;
        let (lambda, chi, report) =
            calibrate_multipliers(&model, 156, d_xy_max, d_xy_prime_max, false).unwrap();
        assert!(lambda > 0.0 && chi > 0.0);
        assert!(
            (report.d_xy - d_xy_max).abs() <= 1e-3 * d_xy_max,
            "embedding budget missed: {} vs {}",
            report.d_xy,
            d_xy_max
        );
        assert!(
            (report.d_xy_prime - d_xy_prime_max).abs() <= 1e-3 * d_xy_prime_max,
            "attack budget missed: {} vs {}",
            report.d_xy_prime,
            d_xy_prime_max
        );
        assert!(report.eb_n0 > 0.0);
    }

    #[test]
    fn unreachable_budget_reports_achievable_range() {
        let model = SiteModel::with_unit_weights(vec![1.0; 16]).unwrap();
        // An embedding budget far beyond what any multiplier in the scan
        // range can produce.
        let err = calibrate_multipliers(&model, 4, 1e12, 32.0, false).unwrap_err();
        assert!(matches!(err, Error::InfeasibleBudget { .. }), "got {err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// The quartic solve's raw root always has a tiny residual and lies
        /// inside the bracket.
        #[test]
        fn quartic_residuals_are_tiny(
            lambda in 1e-3f64..2.0,
            chi in 1e-3f64..2.0,
            sigma_x in 0.1f64..20.0,
            n in 1usize..200,
        ) {
            let phi = 1.0 / (1.0 + sigma_x).sqrt();
            let solve = alpha_intermediate_solve(lambda, chi, phi, sigma_x, n);
            let mu = alpha_erase(lambda, phi, sigma_x);
            prop_assert!(solve.quartic_root >= 0.0 && solve.quartic_root <= mu);
            let residual = intermediate_polynomial(solve.quartic_root, lambda, chi, phi, sigma_x, n);
            // Residual scale: the polynomial's terms are O(mu^2).
            prop_assert!(
                residual.abs() <= 1e-10 * (1.0 + mu * mu),
                "residual {residual} at mu {mu}"
            );
        }

        /// The returned strength never loses to the other closed-form
        /// candidates.
        #[test]
        fn optimal_alpha_dominates_candidates(
            lambda in 1e-3f64..1.0,
            chi in 1e-3f64..1.0,
            sigma_x in 0.1f64..20.0,
            n in 1usize..200,
        ) {
            let phi = 1.0 / (1.0 + sigma_x).sqrt();
            let (alpha, _) = optimal_alpha(lambda, chi, phi, sigma_x, n, false).unwrap();
            let best = site_payoff(alpha, sigma_x, phi, lambda, chi, n);
            for candidate in [
                0.0,
                alpha_erase(lambda, phi, sigma_x),
                alpha_intermediate(lambda, chi, phi, sigma_x, n),
                alpha_wiener(lambda, chi, phi, sigma_x, n),
            ] {
                let p = site_payoff(candidate, sigma_x, phi, lambda, chi, n);
                prop_assert!(best >= p - 1e-12 * (1.0 + p.abs()));
            }
        }
    }
}
