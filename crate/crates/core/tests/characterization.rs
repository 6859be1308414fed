//! Measured behavior pinned as regression bounds, beyond the hard
//! correctness gates: how fast the strength solver's long-message
//! approximation converges.
//!
//! The shrink-regime strength formula scales both multipliers by the message
//! length to absorb an interference-power approximation, so it is exact only
//! as the message grows. The solver always re-prices every candidate under
//! the attacker's true best response, which keeps the damage second-order,
//! but short messages still forfeit measurable payoff against brute force.
//! This test measures that forfeit per message-length bracket and fails if
//! it ever regresses past the recorded envelope.

use sawmark::game::{optimal_alpha, site_payoff};
use sawmark::oracle::{grid_alpha_search, AlphaGridSpec};
use sawmark::rng::CounterRng;

/// Draws per message-length bracket.
const CASES: usize = 120;

/// `(n_lo, n_hi, bound)` — the bound is the measured worst relative payoff
/// shortfall for the bracket, doubled for headroom against float wiggle;
/// the seeds below make the measurement itself reproducible.
const BRACKETS: &[(usize, usize, f64)] = &[
    (1, 4, 3.0e-1),
    (5, 8, 2.3e-2),
    (9, 16, 4.3e-3),
    (17, 32, 1.4e-3),
    (33, 64, 5.6e-4),
    (65, 128, 1.9e-4),
    (129, 256, 2.6e-5),
];

#[test]
fn solver_shortfall_shrinks_with_message_length() {
    let spec = AlphaGridSpec {
        points: 4000,
        refine_rounds: 3,
        closed_form_response: true,
        response_points: 0,
        response_refine_rounds: 0,
    };
    let mut worst_by_bracket = Vec::new();
    for (b, &(n_lo, n_hi, bound)) in BRACKETS.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for case in 0..CASES {
            let rng = CounterRng::new(0x5EED_0001, (b * CASES + case) as u64);
            let sigma_x = (0.5f64.ln() + rng.uniform_open01(0) * 40.0f64.ln()).exp();
            let phi = 0.3 + 0.7 * rng.uniform_open01(1);
            let lambda = (1e-3f64.ln() + rng.uniform_open01(2) * 500.0f64.ln()).exp();
            let chi = lambda * (0.25f64.ln() + rng.uniform_open01(3) * 16.0f64.ln()).exp();
            let n = n_lo + (rng.uniform_open01(4) * (n_hi - n_lo + 1) as f64) as usize;
            let n = n.min(n_hi);

            let (alpha, _) = optimal_alpha(lambda, chi, phi, sigma_x, n, false).unwrap();
            let solved = site_payoff(alpha, sigma_x, phi, lambda, chi, n);
            let (_, brute) = grid_alpha_search(lambda, chi, phi, sigma_x, n, &spec).unwrap();
            let shortfall = (brute - solved) / brute.abs().max(f64::MIN_POSITIVE);
            worst = worst.max(shortfall);
        }
        println!(
            "message length {n_lo:>3}..{n_hi:>3}: worst payoff shortfall {worst:.3e} (bound {bound:.1e})"
        );
        assert!(
            worst <= bound,
            "bracket {n_lo}..{n_hi} regressed: shortfall {worst:.3e} > bound {bound:.1e}"
        );
        worst_by_bracket.push(worst);
    }
    // The approximation must keep converging: the longest bracket forfeits
    // orders of magnitude less than the shortest.
    let first = worst_by_bracket[0];
    let last = *worst_by_bracket.last().unwrap();
    assert!(
        last < first / 100.0,
        "no convergence: shortfall {first:.3e} at short messages vs {last:.3e} at long ones"
    );
}
