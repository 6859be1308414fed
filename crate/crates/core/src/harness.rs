//! Command implementations behind the CLI.
//!
//! Every command consumes a resolved [`ExperimentConfig`] and produces a CSV
//! string whose header embeds the full configuration, so any output can be
//! traced back to — and replayed from — the exact settings that made it.
//! Reruns with identical configuration are byte-identical: nothing here
//! reads clocks, environment, or unordered containers.

use crate::attack::{
    apply_attack, classify_domain, expected_attack_distortion, optimal_attack, optimal_site_attack,
    quantization_attack, sawgn_variance, wiener_gain, AttackPlan, GameParams, Regime,
};
use crate::config::{AlphaSpec, AttackSpec, ExperimentConfig, SweepAttackKind};
use crate::embed::{embed, embedding_distortion, empirical_weighted_mse, EmbeddingPlan};
use crate::error::{Error, Result};
use crate::extract::{map_decode, ChannelAssumption};
use crate::game::{calibrate_multipliers, equilibrium, optimal_alpha, site_payoff};
use crate::image::{embed_image, extract_image, ImagePipelineConfig};
use crate::oracle::{grid_alpha_search, grid_attack_search, AlphaGridSpec, GridSpec};
use crate::pgm::{read_pgm, write_pgm};
use crate::rng::{CounterRng, STREAM_DRAW, STREAM_TRIAL};
use crate::signal::{gen_host, sample_host, Message, SiteModel, SpreadingCode};
use crate::stats::{normal_cdf, NeumaierSum};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Render a real number with 17 significant digits (round-trip exact).
fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// The `# key=value` header block: the command name, the full resolved
/// configuration, then any command-specific result lines.
fn csv_header(command: &str, config: &ExperimentConfig, extra: &[(String, String)]) -> String {
    let mut out = format!("# sawmark {command}\n");
    for (key, value) in config.to_pairs() {
        let _ = writeln!(out, "# {key}={value}");
    }
    for (key, value) in extra {
        let _ = writeln!(out, "# {key}={value}");
    }
    out
}

/// Append a column-name line and comma-joined rows.
fn csv_body(out: &mut String, columns: &[&str], rows: &[Vec<String>]) {
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
}

/// A parsed CSV: column names and numeric rows (header comments skipped).
struct CsvTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvTable {
    fn read(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
        let columns: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Config(format!("{path}: no column line found")))?
            .split(',')
            .map(|c| c.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (number, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|cell| {
                    let cell = cell.trim();
                    if cell.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        cell.parse::<f64>().map_err(|_| {
                            Error::Config(format!(
                                "{path}: row {}: {cell:?} is not a number",
                                number + 1
                            ))
                        })
                    }
                })
                .collect::<Result<_>>()?;
            if row.len() != columns.len() {
                return Err(Error::Config(format!(
                    "{path}: row {} has {} cells, expected {}",
                    number + 1,
                    row.len(),
                    columns.len()
                )));
            }
            rows.push(row);
        }
        Ok(CsvTable { columns, rows })
    }

    fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name).ok_or_else(|| {
            Error::Config(format!(
                "input lacks column {name:?} (found: {})",
                self.columns.join(", ")
            ))
        })?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }
}

/// Rebuild the site model carried by a chained CSV.
fn model_from_table(table: &CsvTable) -> Result<SiteModel> {
    SiteModel::new(table.column("sigma_x")?, table.column("phi")?)
}

/// The message a run embeds and checks against: explicit bits when given,
/// otherwise a seeded random draw of length `n`.
fn resolve_message(config: &ExperimentConfig) -> Result<Message> {
    match &config.message_bits {
        Some(text) => Message::from_text(text),
        None => Message::random(config.n, config.message_seed),
    }
}

/// Per-site strengths under the configured rule.
fn resolve_alphas(
    config: &ExperimentConfig,
    model: &SiteModel,
    x: &[f64],
    n: usize,
) -> Result<Vec<f64>> {
    match config.alpha {
        AlphaSpec::Optimal => (0..model.len())
            .into_par_iter()
            .map(|i| {
                optimal_alpha(
                    config.lambda,
                    config.chi,
                    model.phi[i],
                    model.sigma_x[i],
                    n,
                    config.postfilter,
                )
                .map(|(a, _)| a)
            })
            .collect(),
        AlphaSpec::Const(c) => {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::invalid(format!(
                    "constant strength {c} must be non-negative and finite"
                )));
            }
            Ok(vec![c; model.len()])
        }
        AlphaSpec::Prop(c) => {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::invalid(format!(
                    "proportional strength factor {c} must be non-negative and finite"
                )));
            }
            Ok(x.iter().map(|&v| c * v.abs()).collect())
        }
    }
}

fn required_input<'a>(config: &'a ExperimentConfig, what: &str) -> Result<&'a str> {
    config
        .input
        .as_deref()
        .ok_or_else(|| Error::Config(format!("this command needs input=<{what}>")))
}

/// Draw a synthetic population and host realization.
///
/// Columns: `site,value,sigma_x,phi`.
pub fn cmd_gen(config: &ExperimentConfig) -> Result<String> {
    let (mut model, x) = gen_host(config.m, &config.profile, config.seed)?;
    model.set_weights(config.weight_rule);
    let rows: Vec<Vec<String>> = (0..model.len())
        .map(|i| {
            vec![
                i.to_string(),
                fmt_real(x[i]),
                fmt_real(model.sigma_x[i]),
                fmt_real(model.phi[i]),
            ]
        })
        .collect();
    let mut out = csv_header("gen", config, &[]);
    csv_body(&mut out, &["site", "value", "sigma_x", "phi"], &rows);
    Ok(out)
}

/// Embed the configured message into a generated host.
///
/// Reads the `gen` CSV named by `input`; emits the marked values along with
/// the model and the strengths used, so the attack and extraction commands
/// can chain off the output. Columns: `site,value,sigma_x,phi,alpha`.
pub fn cmd_embed(config: &ExperimentConfig) -> Result<String> {
    let table = CsvTable::read(required_input(config, "gen csv")?)?;
    let model = model_from_table(&table)?;
    let x = table.column("value")?;
    let message = resolve_message(config)?;
    let alpha = resolve_alphas(config, &model, &x, message.len())?;
    let plan = EmbeddingPlan {
        message: message.clone(),
        alpha: alpha.clone(),
        code_seed: config.code_seed,
        postfilter: config.postfilter,
    };
    let y = embed(&x, &plan, &model)?;
    let expected = embedding_distortion(&plan, &model)?;
    let realized = empirical_weighted_mse(&x, &y, &model.phi)?;
    let extra = vec![
        ("message".to_string(), message.to_text()),
        ("expected_distortion".to_string(), fmt_real(expected)),
        ("realized_distortion".to_string(), fmt_real(realized)),
    ];
    let rows: Vec<Vec<String>> = (0..model.len())
        .map(|i| {
            vec![
                i.to_string(),
                fmt_real(y[i]),
                fmt_real(model.sigma_x[i]),
                fmt_real(model.phi[i]),
                fmt_real(alpha[i]),
            ]
        })
        .collect();
    let mut out = csv_header("embed", config, &extra);
    csv_body(
        &mut out,
        &["site", "value", "sigma_x", "phi", "alpha"],
        &rows,
    );
    Ok(out)
}

/// Run the configured channel over a marked signal.
///
/// Reads the `embed` CSV named by `input`; emits the attacked values plus
/// the channel parameters the extractor may assume.
/// Columns: `site,value,sigma_x,phi,alpha,gamma,sigma_delta`.
pub fn cmd_attack(config: &ExperimentConfig) -> Result<String> {
    let table = CsvTable::read(required_input(config, "embed csv")?)?;
    let model = model_from_table(&table)?;
    let y = table.column("value")?;
    let alpha = table.column("alpha")?;
    let n = resolve_message(config)?.len();
    let m = model.len();

    let (y_prime, plan, extra_distortion) = match config.attack {
        AttackSpec::Quantize { step } => {
            let q = quantization_attack(&y, step)?;
            let realized = empirical_weighted_mse(&y, &q, &model.phi)?;
            // The extractor has no channel model for quantization; report
            // the identity assumption alongside the realized distortion.
            (
                q,
                AttackPlan::identity(m),
                ("realized_attack_distortion".to_string(), fmt_real(realized)),
            )
        }
        ref spec => {
            let plan = match spec {
                AttackSpec::None => AttackPlan::identity(m),
                AttackSpec::Erase => AttackPlan::erase(m),
                AttackSpec::Wiener => {
                    let mut gains = Vec::with_capacity(m);
                    for i in 0..m {
                        let s2 = model.sigma_x[i] * model.sigma_x[i];
                        let w = n as f64 * alpha[i] * alpha[i];
                        gains.push(if s2 + w == 0.0 {
                            1.0
                        } else {
                            wiener_gain(s2, w)?
                        });
                    }
                    let mut plan = AttackPlan::custom(gains, vec![0.0; m], config.noise_seed)?;
                    plan.regime = vec![Regime::Wiener; m];
                    plan
                }
                AttackSpec::Optimal => optimal_attack(&alpha, &model, config.lambda, n)?
                    .with_noise_seed(config.noise_seed),
                AttackSpec::Sawgn { gamma, sigma_delta } => {
                    AttackPlan::uniform(m, *gamma, *sigma_delta, config.noise_seed)?
                }
                AttackSpec::Quantize { .. } => unreachable!("handled above"),
            };
            let expected = expected_attack_distortion(&plan, &alpha, &model, n)?;
            let y_prime = apply_attack(&y, &plan)?;
            (
                y_prime,
                plan,
                ("expected_attack_distortion".to_string(), fmt_real(expected)),
            )
        }
    };

    let rows: Vec<Vec<String>> = (0..m)
        .map(|i| {
            vec![
                i.to_string(),
                fmt_real(y_prime[i]),
                fmt_real(model.sigma_x[i]),
                fmt_real(model.phi[i]),
                fmt_real(alpha[i]),
                fmt_real(plan.gamma[i]),
                fmt_real(plan.sigma_delta[i]),
            ]
        })
        .collect();
    let mut out = csv_header("attack", config, &[extra_distortion]);
    csv_body(
        &mut out,
        &[
            "site",
            "value",
            "sigma_x",
            "phi",
            "alpha",
            "gamma",
            "sigma_delta",
        ],
        &rows,
    );
    Ok(out)
}

/// Decode a (possibly attacked) signal.
///
/// Reads an `embed` or `attack` CSV named by `input`. The channel assumption
/// comes from the `gamma`/`sigma_delta` columns when present, overridden by
/// `assume_gamma`/`assume_sigma_delta`, defaulting to the identity channel.
/// Columns: `bit,soft,hard,truth`; the estimate variance, energy ratio, and
/// error rate land in the header.
pub fn cmd_extract(config: &ExperimentConfig) -> Result<String> {
    let table = CsvTable::read(required_input(config, "embed or attack csv")?)?;
    let model = model_from_table(&table)?;
    let y_prime = table.column("value")?;
    let alpha = table.column("alpha")?;
    let m = model.len();
    let message = resolve_message(config)?;
    let n = message.len();

    let gamma = match config.assume_gamma {
        Some(g) => vec![g; m],
        None if table.has_column("gamma") => table.column("gamma")?,
        None => vec![1.0; m],
    };
    let sigma_delta = match config.assume_sigma_delta {
        Some(s) => vec![s; m],
        None if table.has_column("sigma_delta") => table.column("sigma_delta")?,
        None => vec![0.0; m],
    };
    let assumption = ChannelAssumption {
        gamma,
        sigma_delta,
        alpha,
        sigma_x: model.sigma_x.clone(),
        n,
    };
    let code = SpreadingCode::new(m, n, config.code_seed)?;
    let report = map_decode(&y_prime, &code, &assumption)?.with_truth(&message)?;

    let extra = vec![
        ("sigma_b_sq".to_string(), fmt_real(report.sigma_b_sq)),
        ("eb_n0".to_string(), fmt_real(report.eb_n0)),
        (
            "ber".to_string(),
            fmt_real(report.ber.expect("truth was attached")),
        ),
    ];
    let rows: Vec<Vec<String>> = (0..n)
        .map(|j| {
            vec![
                j.to_string(),
                fmt_real(report.soft[j]),
                report.hard[j].to_string(),
                message.bits()[j].to_string(),
            ]
        })
        .collect();
    let mut out = csv_header("extract", config, &extra);
    csv_body(&mut out, &["bit", "soft", "hard", "truth"], &rows);
    Ok(out)
}

/// Solve the embedding game over a synthetic population.
///
/// With both distortion budgets set, calibrates the multipliers first;
/// otherwise solves at the configured multipliers. Per-site columns:
/// `site,sigma_x,phi,regime,alpha,gamma,sigma_delta_sq,rho`; the resolved
/// multipliers and additive aggregates land in the header.
pub fn cmd_optimize(config: &ExperimentConfig) -> Result<String> {
    let (mut model, _) = gen_host(config.m, &config.profile, config.seed)?;
    model.set_weights(config.weight_rule);
    let report = match (config.d_xy_max, config.d_xy_prime_max) {
        (Some(d_xy), Some(d_xy_prime)) => {
            let (_, _, report) =
                calibrate_multipliers(&model, config.n, d_xy, d_xy_prime, config.postfilter)?;
            report
        }
        (None, None) => {
            let params = GameParams {
                lambda: config.lambda,
                chi: config.chi,
                n: config.n,
            };
            equilibrium(&model, &params, config.postfilter)?
        }
        _ => {
            return Err(Error::Config(
                "set both d_xy_max and d_xy_prime_max to calibrate, or neither to \
                 solve at the configured lambda and chi"
                    .to_string(),
            ));
        }
    };
    let extra = vec![
        ("resolved_lambda".to_string(), fmt_real(report.lambda)),
        ("resolved_chi".to_string(), fmt_real(report.chi)),
        ("d_xy".to_string(), fmt_real(report.d_xy)),
        ("d_xy_prime".to_string(), fmt_real(report.d_xy_prime)),
        ("eb_n0".to_string(), fmt_real(report.eb_n0)),
    ];
    let rows: Vec<Vec<String>> = report
        .sites
        .iter()
        .enumerate()
        .map(|(i, site)| {
            vec![
                i.to_string(),
                fmt_real(model.sigma_x[i]),
                fmt_real(model.phi[i]),
                site.regime.name().to_string(),
                fmt_real(site.alpha),
                fmt_real(site.gamma),
                fmt_real(site.sigma_delta_sq),
                fmt_real(site.rho),
            ]
        })
        .collect();
    let mut out = csv_header("optimize", config, &extra);
    csv_body(
        &mut out,
        &[
            "site",
            "sigma_x",
            "phi",
            "regime",
            "alpha",
            "gamma",
            "sigma_delta_sq",
            "rho",
        ],
        &rows,
    );
    Ok(out)
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Map the attacker's best-response regime over a strength/scale grid.
///
/// Columns: `alpha,sigma_x,regime,j_e,j_w,j_i,gamma_star,sigma_delta_sq_star`
/// (`j_i` is blank outside the intermediate regime, where it is undefined).
pub fn cmd_sweep_domains(config: &ExperimentConfig) -> Result<String> {
    let alphas = linspace(config.alpha_min, config.alpha_max, config.alpha_steps);
    let sigmas = linspace(config.sigma_min, config.sigma_max, config.sigma_steps);
    let mut rows = Vec::with_capacity(alphas.len() * sigmas.len());
    for &sigma in &sigmas {
        let phi = config.weight_rule.weight(sigma);
        for &alpha in &alphas {
            let regime = classify_domain(alpha, sigma, phi, config.lambda, config.n);
            let j_e = crate::attack::attack_cost(
                Regime::Erase,
                alpha,
                sigma,
                phi,
                config.lambda,
                config.n,
            )?;
            let j_w = crate::attack::attack_cost(
                Regime::Wiener,
                alpha,
                sigma,
                phi,
                config.lambda,
                config.n,
            )?;
            let j_i = if regime == Regime::Intermediate {
                fmt_real(crate::attack::attack_cost(
                    Regime::Intermediate,
                    alpha,
                    sigma,
                    phi,
                    config.lambda,
                    config.n,
                )?)
            } else {
                String::new()
            };
            let (gamma_star, sigma_delta_sq_star, _) =
                optimal_site_attack(alpha, sigma, phi, config.lambda, config.n)?;
            rows.push(vec![
                fmt_real(alpha),
                fmt_real(sigma),
                regime.name().to_string(),
                fmt_real(j_e),
                fmt_real(j_w),
                j_i,
                fmt_real(gamma_star),
                fmt_real(sigma_delta_sq_star),
            ]);
        }
    }
    let mut out = csv_header("sweep-domains", config, &[]);
    csv_body(
        &mut out,
        &[
            "alpha",
            "sigma_x",
            "regime",
            "j_e",
            "j_w",
            "j_i",
            "gamma_star",
            "sigma_delta_sq_star",
        ],
        &rows,
    );
    Ok(out)
}

/// Optimal strength as a function of host power, with and without the
/// post-filter. Columns:
/// `sigma_x_sq,alpha_no_postfilter,alpha_postfilter,regime`.
pub fn cmd_sweep_alpha(config: &ExperimentConfig) -> Result<String> {
    let powers = linspace(
        config.sigma_sq_min,
        config.sigma_sq_max,
        config.sigma_sq_steps,
    );
    let rows: Vec<Vec<String>> = powers
        .par_iter()
        .map(|&s2| -> Result<Vec<String>> {
            let sigma = s2.sqrt();
            let phi = config.weight_rule.weight(sigma);
            let (plain, regime) =
                optimal_alpha(config.lambda, config.chi, phi, sigma, config.n, false)?;
            let (filtered, _) =
                optimal_alpha(config.lambda, config.chi, phi, sigma, config.n, true)?;
            Ok(vec![
                fmt_real(s2),
                fmt_real(plain),
                fmt_real(filtered),
                regime.name().to_string(),
            ])
        })
        .collect::<Result<_>>()?;
    let mut out = csv_header("sweep-alpha", config, &[]);
    csv_body(
        &mut out,
        &[
            "sigma_x_sq",
            "alpha_no_postfilter",
            "alpha_postfilter",
            "regime",
        ],
        &rows,
    );
    Ok(out)
}

/// Total leaked energy ratio under a per-site best-response attack at
/// multiplier `lambda_att` against the fixed strengths `alpha`.
fn best_response_ebn0_and_distortion(
    alpha: &[f64],
    model: &SiteModel,
    lambda_att: f64,
    n: usize,
) -> Result<(f64, f64)> {
    let mut rho_sum = NeumaierSum::new();
    let mut distortion = NeumaierSum::new();
    let nf = n as f64;
    for i in 0..model.len() {
        let (g, sd2, _) =
            optimal_site_attack(alpha[i], model.sigma_x[i], model.phi[i], lambda_att, n)?;
        let v = sawgn_variance(g, sd2.sqrt(), alpha[i], model.sigma_x[i], n);
        if g * alpha[i] > 0.0 && v > 0.0 {
            rho_sum.add(alpha[i] * alpha[i] * g * g / v);
        }
        let s2 = model.sigma_x[i] * model.sigma_x[i];
        let phi2 = model.phi[i] * model.phi[i];
        distortion
            .add(phi2 * (s2 * (1.0 - g) * (1.0 - g) + nf * g * g * alpha[i] * alpha[i] + sd2));
    }
    Ok((rho_sum.total(), distortion.total()))
}

/// Identity-channel leaked energy ratio for fixed strengths.
fn identity_ebn0(alpha: &[f64], model: &SiteModel, n: usize) -> f64 {
    let mut rho_sum = NeumaierSum::new();
    for i in 0..model.len() {
        let v = sawgn_variance(1.0, 0.0, alpha[i], model.sigma_x[i], n);
        if alpha[i] > 0.0 && v > 0.0 {
            rho_sum.add(alpha[i] * alpha[i] / v);
        }
    }
    rho_sum.total()
}

/// Predicted bit-error rate of a matched linear decoder at total energy
/// ratio `ebn0`.
fn predicted_ber(ebn0: f64) -> f64 {
    if ebn0 <= 0.0 {
        0.5
    } else {
        normal_cdf(-ebn0.sqrt())
    }
}

/// Empirical channel statistics for one scheme under quantization.
struct QuantizeOutcome {
    ebn0: f64,
    ber: f64,
}

/// Monte-Carlo statistics of embed-quantize-decode for a strength policy.
///
/// `alpha_of` maps a host draw to the strengths used for it, so policies
/// that track the host (proportional marking) recompute per trial. Host
/// and spreading code are redrawn each trial; the message stays fixed.
fn quantize_mc(
    model: &SiteModel,
    message: &Message,
    postfilter: bool,
    alpha_of: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    step: f64,
    trials: usize,
    seed: u64,
) -> Result<QuantizeOutcome> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let n = message.len();
    let m = model.len();
    let seeder = CounterRng::new(seed, STREAM_TRIAL);
    let per_trial: Vec<(Vec<f64>, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<(Vec<f64>, usize)> {
            let x = sample_host(model, seeder.sub_seed(2 * t));
            let trial_code_seed = seeder.sub_seed(2 * t + 1);
            let alpha = alpha_of(&x);
            let plan = EmbeddingPlan {
                message: message.clone(),
                alpha: alpha.clone(),
                code_seed: trial_code_seed,
                postfilter,
            };
            let y = embed(&x, &plan, model)?;
            let y_prime = if step > 0.0 {
                quantization_attack(&y, step)?
            } else {
                y
            };
            let assumption = ChannelAssumption::no_attack(&alpha, model, n)?;
            let code = SpreadingCode::new(m, n, trial_code_seed)?;
            let report = map_decode(&y_prime, &code, &assumption)?;
            let errors = report
                .hard
                .iter()
                .zip(message.bits())
                .filter(|(h, b)| h != b)
                .count();
            Ok((report.soft, errors))
        })
        .collect::<Result<_>>()?;
    let mut squares = NeumaierSum::new();
    let mut errors = 0usize;
    for (soft, errs) in &per_trial {
        for (j, &s) in soft.iter().enumerate() {
            let r = s - f64::from(message.bits()[j]);
            squares.add(r * r);
        }
        errors += errs;
    }
    let mse = squares.total() / (trials * n) as f64;
    Ok(QuantizeOutcome {
        ebn0: if mse > 0.0 { 1.0 / mse } else { f64::INFINITY },
        ber: errors as f64 / (trials * n) as f64,
    })
}

/// Compare the game-optimal strengths against fixed and host-proportional
/// strength policies, all calibrated to the same embedding distortion,
/// under an escalating attack.
///
/// Columns: `attack_strength,attack_distortion_per_site,ebn0_proposed,
/// ebn0_const_alpha,ebn0_prop_alpha,ber_proposed,ber_const_alpha,
/// ber_prop_alpha`. The first row is the identity channel. For the
/// gain-and-noise sweep the strength column is the attacker's multiplier,
/// iterated descending (so attack distortion ascends) with closed-form
/// statistics and predicted error rates; for the quantization sweep it is
/// the step, ascending, with Monte-Carlo statistics.
pub fn cmd_sweep_attack(config: &ExperimentConfig) -> Result<String> {
    if config.postfilter {
        return Err(Error::Config(
            "the attack sweep compares unfiltered embeddings; unset postfilter".to_string(),
        ));
    }
    let (mut model, x) = gen_host(config.m, &config.profile, config.seed)?;
    model.set_weights(config.weight_rule);
    let m = model.len();
    let n = config.n;
    let nf = n as f64;

    // Proposed scheme: per-site game-optimal strengths.
    let params = GameParams {
        lambda: config.lambda,
        chi: config.chi,
        n,
    };
    let eq = equilibrium(&model, &params, false)?;
    let alpha_proposed = eq.alphas();
    let budget = eq.d_xy;

    // Comparator: one constant strength, equal expected distortion.
    let phi_sq_sum: f64 = model.phi.iter().map(|p| p * p).sum();
    let alpha_const = if budget > 0.0 && phi_sq_sum > 0.0 {
        (budget / (nf * phi_sq_sum)).sqrt()
    } else {
        0.0
    };
    let alpha_const_vec = vec![alpha_const; m];

    // Comparator: strength proportional to the host magnitude, calibrated
    // on the drawn host to the same realized distortion.
    let weighted_energy: f64 = (0..m)
        .map(|i| model.phi[i] * model.phi[i] * x[i] * x[i])
        .sum();
    let prop_factor = if budget > 0.0 && weighted_energy > 0.0 {
        (budget / (nf * weighted_energy)).sqrt()
    } else {
        0.0
    };
    let alpha_prop_vec: Vec<f64> = x.iter().map(|&v| prop_factor * v.abs()).collect();

    let schemes: [&Vec<f64>; 3] = [&alpha_proposed, &alpha_const_vec, &alpha_prop_vec];
    let extra = vec![
        ("d_xy_proposed".to_string(), fmt_real(budget)),
        ("alpha_const".to_string(), fmt_real(alpha_const)),
        ("prop_factor".to_string(), fmt_real(prop_factor)),
    ];

    let columns = [
        "attack_strength",
        "attack_distortion_per_site",
        "ebn0_proposed",
        "ebn0_const_alpha",
        "ebn0_prop_alpha",
        "ber_proposed",
        "ber_const_alpha",
        "ber_prop_alpha",
    ];
    let mut rows = Vec::new();

    match config.attack_kind {
        SweepAttackKind::Sawgn => {
            if !(config.strength_min > 0.0) || config.strength_max < config.strength_min {
                return Err(Error::Config(
                    "the multiplier sweep needs 0 < strength_min <= strength_max".to_string(),
                ));
            }
            // Identity row: zero strength, distortion equal to the
            // embedding distortion.
            let ebn0s: Vec<f64> = schemes
                .iter()
                .map(|a| identity_ebn0(a, &model, n))
                .collect();
            rows.push(build_sweep_row(0.0, budget / m as f64, &ebn0s));
            // Multiplier descending: cheaper distortion, harsher attack.
            let count = config.strength_steps.max(1);
            let ratio = if count == 1 {
                1.0
            } else {
                (config.strength_min / config.strength_max).powf(1.0 / (count - 1) as f64)
            };
            for k in 0..count {
                let lambda_att = config.strength_max * ratio.powi(k as i32);
                let mut ebn0s = Vec::with_capacity(3);
                let mut proposed_distortion = 0.0;
                for (idx, alpha) in schemes.iter().enumerate() {
                    let (rho, distortion) =
                        best_response_ebn0_and_distortion(alpha, &model, lambda_att, n)?;
                    if idx == 0 {
                        proposed_distortion = distortion;
                    }
                    ebn0s.push(rho);
                }
                rows.push(build_sweep_row(
                    lambda_att,
                    proposed_distortion / m as f64,
                    &ebn0s,
                ));
            }
        }
        SweepAttackKind::Quantize => {
            if !(config.strength_min >= 0.0) || config.strength_max < config.strength_min {
                return Err(Error::Config(
                    "the quantization sweep needs 0 <= strength_min <= strength_max".to_string(),
                ));
            }
            let message = resolve_message(config)?;
            if message.len() != n {
                return Err(Error::Config(format!(
                    "message length {} does not match n={n}",
                    message.len()
                )));
            }
            let mut steps = vec![0.0];
            steps.extend(linspace(
                config.strength_min,
                config.strength_max,
                config.strength_steps.max(1),
            ));
            let alpha_of_proposed = {
                let alpha = alpha_proposed.clone();
                move |_: &[f64]| alpha.clone()
            };
            let alpha_of_const = {
                let alpha = alpha_const_vec.clone();
                move |_: &[f64]| alpha.clone()
            };
            // The proportional policy tracks each trial's host, calibrated
            // per draw to the same realized distortion.
            let alpha_of_prop = {
                let phi = model.phi.clone();
                move |host: &[f64]| -> Vec<f64> {
                    let energy: f64 = host
                        .iter()
                        .zip(phi.iter())
                        .map(|(&v, &p)| p * p * v * v)
                        .sum();
                    let c = if budget > 0.0 && energy > 0.0 {
                        (budget / (nf * energy)).sqrt()
                    } else {
                        0.0
                    };
                    host.iter().map(|&v| c * v.abs()).collect()
                }
            };
            for &step in &steps {
                let mut ebn0s = Vec::with_capacity(3);
                let mut bers = Vec::with_capacity(3);
                let policies: [&(dyn Fn(&[f64]) -> Vec<f64> + Sync); 3] =
                    [&alpha_of_proposed, &alpha_of_const, &alpha_of_prop];
                for policy in &policies {
                    let outcome = quantize_mc(
                        &model,
                        &message,
                        false,
                        policy,
                        step,
                        config.trials,
                        config.seed,
                    )?;
                    ebn0s.push(outcome.ebn0);
                    bers.push(outcome.ber);
                }
                let distortion = if step == 0.0 {
                    budget / m as f64
                } else {
                    // Uniform-quantization noise power per coefficient.
                    step * step / 12.0
                };
                rows.push(vec![
                    fmt_real(step),
                    fmt_real(distortion),
                    fmt_real(ebn0s[0]),
                    fmt_real(ebn0s[1]),
                    fmt_real(ebn0s[2]),
                    fmt_real(bers[0]),
                    fmt_real(bers[1]),
                    fmt_real(bers[2]),
                ]);
            }
        }
    }

    let mut out = csv_header("sweep-attack", config, &extra);
    csv_body(&mut out, &columns, &rows);
    Ok(out)
}

fn build_sweep_row(strength: f64, distortion_per_site: f64, ebn0s: &[f64]) -> Vec<String> {
    vec![
        fmt_real(strength),
        fmt_real(distortion_per_site),
        fmt_real(ebn0s[0]),
        fmt_real(ebn0s[1]),
        fmt_real(ebn0s[2]),
        fmt_real(predicted_ber(ebn0s[0])),
        fmt_real(predicted_ber(ebn0s[1])),
        fmt_real(predicted_ber(ebn0s[2])),
    ]
}

/// Build the shared transform-domain pipeline settings.
fn pipeline_config(config: &ExperimentConfig) -> ImagePipelineConfig {
    ImagePipelineConfig {
        levels: config.levels,
        window: config.window,
        floor: config.floor,
        lambda: config.lambda,
        chi: config.chi,
        d_xy_per_site: config.d_xy_per_site,
        weight_rule: config.weight_rule,
        code_seed: config.code_seed,
        step: config.step,
    }
}

/// Embed the configured message into a PGM image.
///
/// Reads `input`, writes the marked image to `output`, and reports the
/// distortion accounting as a one-row CSV.
pub fn cmd_image_embed(config: &ExperimentConfig) -> Result<String> {
    let input = required_input(config, "pgm image")?;
    let output = config
        .output
        .as_deref()
        .ok_or_else(|| Error::Config("this command needs output=<pgm path>".to_string()))?;
    let image = read_pgm(input)?;
    let message = resolve_message(config)?;
    let pipe = pipeline_config(config);
    let report = embed_image(&image, &message, &pipe)?;
    write_pgm(output, &report.image)?;
    let within = report.mean_abs_change <= config.max_mean_abs_change;
    let extra = vec![("message".to_string(), message.to_text())];
    let rows = vec![vec![
        report.sites.to_string(),
        fmt_real(report.expected_distortion),
        fmt_real(report.dwt_distortion),
        fmt_real(report.pixel_distortion),
        fmt_real(report.mean_abs_change),
        fmt_real(config.max_mean_abs_change),
        i32::from(within).to_string(),
    ]];
    let mut out = csv_header("image-embed", config, &extra);
    csv_body(
        &mut out,
        &[
            "sites",
            "expected_distortion",
            "dwt_distortion",
            "pixel_distortion",
            "mean_abs_change",
            "max_mean_abs_change",
            "within_bound",
        ],
        &rows,
    );
    Ok(out)
}

/// Blindly extract the message from a PGM image.
///
/// Columns: `bit,soft,hard,truth`; the estimate variance, energy ratio, and
/// error rate against the configured message land in the header.
pub fn cmd_image_extract(config: &ExperimentConfig) -> Result<String> {
    let input = required_input(config, "pgm image")?;
    let image = read_pgm(input)?;
    let message = resolve_message(config)?;
    let pipe = pipeline_config(config);
    let report = extract_image(&image, message.len(), &pipe)?;
    let decode = report.decode.with_truth(&message)?;
    let extra = vec![
        ("sites".to_string(), report.sites.to_string()),
        ("sigma_b_sq".to_string(), fmt_real(decode.sigma_b_sq)),
        ("eb_n0".to_string(), fmt_real(decode.eb_n0)),
        (
            "ber".to_string(),
            fmt_real(decode.ber.expect("truth was attached")),
        ),
    ];
    let rows: Vec<Vec<String>> = (0..message.len())
        .map(|j| {
            vec![
                j.to_string(),
                fmt_real(decode.soft[j]),
                decode.hard[j].to_string(),
                message.bits()[j].to_string(),
            ]
        })
        .collect();
    let mut out = csv_header("image-extract", config, &extra);
    csv_body(&mut out, &["bit", "soft", "hard", "truth"], &rows);
    Ok(out)
}

/// One verification case: the drawn parameters, the closed-form and
/// brute-force values, and the relative gap.
struct CheckCase {
    kind: &'static str,
    case: usize,
    alpha: f64,
    sigma_x: f64,
    phi: f64,
    lambda: f64,
    chi: f64,
    n: usize,
    closed: f64,
    grid: f64,
    gap: f64,
}

/// Cross-check every closed form against brute-force search.
///
/// Attack cases compare the closed-form best response against a grid search
/// (two-sided relative gap); strength cases compare the game value of the
/// closed-form strength against a strength-grid maximum (one-sided gap —
/// the closed form beating the grid is a pass). Returns the CSV and whether
/// every gap stayed within `tolerance`.
pub fn cmd_oracle_check(config: &ExperimentConfig) -> Result<(String, bool)> {
    let draw = CounterRng::new(config.seed, STREAM_DRAW);
    let attack_cases: Vec<CheckCase> = (0..config.cases)
        .into_par_iter()
        .map(|k| -> Result<CheckCase> {
            let rng = CounterRng::from_key(draw.sub_seed(k as u64));
            let sigma_x = (0.3f64.ln() + rng.uniform_open01(0) * 10.0f64.ln()).exp();
            let phi = 0.3 + 0.7 * rng.uniform_open01(1);
            let lambda = (0.05f64.ln() + rng.uniform_open01(2) * 100.0f64.ln()).exp();
            let n = 1 + (rng.uniform_open01(3) * 16.0) as usize;
            // Strengths straddle the erase threshold so all three regimes
            // appear across the draw.
            let mu = lambda.sqrt() * phi * sigma_x * sigma_x;
            let alpha = mu * (0.05 + 1.45 * rng.uniform_open01(4));
            let (g, sd2, _) = optimal_site_attack(alpha, sigma_x, phi, lambda, n)?;
            let closed = crate::attack::j_lambda(g, sd2, alpha, sigma_x, phi, lambda, n);
            let base = GridSpec::default_for(alpha, sigma_x, n);
            let spec = GridSpec {
                gamma: (base.gamma.0, base.gamma.1, config.grid_points),
                sigma_delta_sq: (
                    base.sigma_delta_sq.0,
                    base.sigma_delta_sq.1,
                    config.grid_points,
                ),
                refine_rounds: config.refine_rounds,
            };
            let (_, _, grid) = grid_attack_search(alpha, sigma_x, phi, lambda, n, &spec)?;
            let gap = (closed - grid).abs() / grid.abs().max(f64::MIN_POSITIVE);
            Ok(CheckCase {
                kind: "attack",
                case: k,
                alpha,
                sigma_x,
                phi,
                lambda,
                chi: 0.0,
                n,
                closed,
                grid,
                gap,
            })
        })
        .collect::<Result<_>>()?;

    // The closed-form attacker response feeds the strength search only
    // after the attack cases above have all validated it.
    let attack_ok = attack_cases.iter().all(|c| c.gap <= config.tolerance);
    let alpha_spec = AlphaGridSpec {
        points: 1000,
        refine_rounds: 2,
        closed_form_response: attack_ok,
        response_points: 200,
        response_refine_rounds: 2,
    };
    let alpha_cases: Vec<CheckCase> = (0..config.alpha_cases())
        .into_par_iter()
        .map(|k| -> Result<CheckCase> {
            let rng = CounterRng::from_key(draw.sub_seed((config.cases + k) as u64));
            let sigma_x = (0.5f64.ln() + rng.uniform_open01(0) * 40.0f64.ln()).exp();
            let phi = 0.3 + 0.7 * rng.uniform_open01(1);
            let lambda = (1e-3f64.ln() + rng.uniform_open01(2) * 500.0f64.ln()).exp();
            let chi = lambda * (0.25f64.ln() + rng.uniform_open01(3) * 16.0f64.ln()).exp();
            let n = 100 + (rng.uniform_open01(4) * 157.0) as usize;
            let (alpha, _) = optimal_alpha(lambda, chi, phi, sigma_x, n, false)?;
            let closed = site_payoff(alpha, sigma_x, phi, lambda, chi, n);
            let (_, grid) = grid_alpha_search(lambda, chi, phi, sigma_x, n, &alpha_spec)?;
            let gap = (grid - closed) / grid.abs().max(f64::MIN_POSITIVE);
            Ok(CheckCase {
                kind: "alpha",
                case: k,
                alpha,
                sigma_x,
                phi,
                lambda,
                chi,
                n,
                closed,
                grid,
                gap,
            })
        })
        .collect::<Result<_>>()?;

    let mut all_pass = true;
    let mut rows = Vec::with_capacity(attack_cases.len() + alpha_cases.len());
    for case in attack_cases.iter().chain(alpha_cases.iter()) {
        let pass = case.gap <= config.tolerance;
        all_pass &= pass;
        rows.push(vec![
            case.kind.to_string(),
            case.case.to_string(),
            fmt_real(case.alpha),
            fmt_real(case.sigma_x),
            fmt_real(case.phi),
            fmt_real(case.lambda),
            fmt_real(case.chi),
            case.n.to_string(),
            fmt_real(case.closed),
            fmt_real(case.grid),
            fmt_real(case.gap),
            i32::from(pass).to_string(),
        ]);
    }
    let extra = vec![("all_pass".to_string(), i32::from(all_pass).to_string())];
    let mut out = csv_header("oracle-check", config, &extra);
    csv_body(
        &mut out,
        &[
            "kind", "case", "alpha", "sigma_x", "phi", "lambda", "chi", "n", "closed", "grid",
            "gap", "pass",
        ],
        &rows,
    );
    Ok((out, all_pass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        path.to_string_lossy().into_owned()
    }

    fn data_rows(csv: &str) -> Vec<&str> {
        csv.lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .collect()
    }

    fn header_value<'a>(csv: &'a str, key: &str) -> &'a str {
        let prefix = format!("# {key}=");
        csv.lines()
            .find_map(|l| l.strip_prefix(&prefix))
            .unwrap_or_else(|| panic!("header lacks {key}"))
    }

    #[test]
    fn gen_is_deterministic_and_echoes_config() {
        let mut config = ExperimentConfig::for_command("gen");
        config.m = 8;
        let a = cmd_gen(&config).unwrap();
        let b = cmd_gen(&config).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("# sawmark gen\n"));
        assert!(a.contains("# m=8\n"));
        assert_eq!(data_rows(&a).len(), 8);
    }

    #[test]
    fn chained_pipeline_recovers_the_message() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::default();
        config.m = 400;
        config.n = 8;
        config.profile = crate::signal::VarianceProfile::Constant(1.0);
        config.lambda = 1.0;
        config.chi = 0.1;

        let gen_csv = cmd_gen(&config).unwrap();
        let gen_path = write_temp(&dir, "gen.csv", &gen_csv);

        config.input = Some(gen_path);
        let embed_csv = cmd_embed(&config).unwrap();
        let embed_path = write_temp(&dir, "embed.csv", &embed_csv);

        config.input = Some(embed_path);
        config.attack = crate::config::AttackSpec::Sawgn {
            gamma: 0.8,
            sigma_delta: 0.2,
        };
        let attack_csv = cmd_attack(&config).unwrap();
        let attack_path = write_temp(&dir, "attack.csv", &attack_csv);

        config.input = Some(attack_path);
        let extract_csv = cmd_extract(&config).unwrap();
        let ber: f64 = header_value(&extract_csv, "ber").parse().unwrap();
        assert_eq!(ber, 0.0, "{extract_csv}");
        // Hard decisions match the truth column.
        for row in data_rows(&extract_csv) {
            let cells: Vec<&str> = row.split(',').collect();
            assert_eq!(cells[2], cells[3]);
        }
    }

    #[test]
    fn extract_needs_an_input() {
        let config = ExperimentConfig::default();
        assert!(cmd_extract(&config).is_err());
    }

    #[test]
    fn sweep_domains_regimes_are_self_consistent() {
        let mut config = ExperimentConfig::for_command("sweep-domains");
        config.alpha_steps = 12;
        config.sigma_steps = 10;
        let csv = cmd_sweep_domains(&config).unwrap();
        let rows = data_rows(&csv);
        assert_eq!(rows.len(), 120);
        let mut seen = std::collections::BTreeSet::new();
        for row in rows {
            let cells: Vec<&str> = row.split(',').collect();
            let alpha: f64 = cells[0].parse().unwrap();
            let sigma: f64 = cells[1].parse().unwrap();
            let regime = cells[2];
            seen.insert(regime.to_string());
            let expected = classify_domain(alpha, sigma, 1.0, config.lambda, config.n);
            assert_eq!(regime, expected.name());
            // The intermediate cost column is filled exactly inside its
            // regime, and undercuts both pure strategies there.
            if regime == "intermediate" {
                let j_e: f64 = cells[3].parse().unwrap();
                let j_w: f64 = cells[4].parse().unwrap();
                let j_i: f64 = cells[5].parse().unwrap();
                assert!(j_i <= j_e + 1e-12 && j_i <= j_w + 1e-12);
            } else {
                assert!(cells[5].is_empty());
            }
        }
        assert_eq!(seen.len(), 3, "regimes seen: {seen:?}");
    }

    #[test]
    fn sweep_alpha_matches_the_closed_forms() {
        let mut config = ExperimentConfig::for_command("sweep-alpha");
        config.sigma_sq_min = 100.0;
        config.sigma_sq_max = 100.0;
        config.sigma_sq_steps = 1;
        let csv = cmd_sweep_alpha(&config).unwrap();
        let rows = data_rows(&csv);
        assert_eq!(rows.len(), 1);
        let cells: Vec<&str> = rows[0].split(',').collect();
        let plain: f64 = cells[1].parse().unwrap();
        let filtered: f64 = cells[2].parse().unwrap();
        assert!((plain - 0.22849).abs() < 1e-4, "plain {plain}");
        let phi = (1.0f64 + 10.0).sqrt().recip();
        assert!((filtered - (0.002f64).sqrt() * phi * 100.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_attack_zero_row_reports_the_embedding_distortion() {
        let mut config = ExperimentConfig::for_command("sweep-attack");
        config.m = 60;
        config.strength_steps = 6;
        let csv = cmd_sweep_attack(&config).unwrap();
        let rows = data_rows(&csv);
        assert_eq!(rows.len(), 7);
        let budget: f64 = header_value(&csv, "d_xy_proposed").parse().unwrap();
        let first: Vec<&str> = rows[0].split(',').collect();
        let strength: f64 = first[0].parse().unwrap();
        let distortion: f64 = first[1].parse().unwrap();
        assert_eq!(strength, 0.0);
        assert!((distortion - budget / 60.0).abs() <= 1e-12 * budget.max(1.0));

        // Energy ratios never increase as the sweep escalates, for all
        // three schemes, and strictly fall overall.
        let mut previous: Option<(f64, f64, f64)> = None;
        for row in &rows[1..] {
            let cells: Vec<&str> = row.split(',').collect();
            let now: (f64, f64, f64) = (
                cells[2].parse().unwrap(),
                cells[3].parse().unwrap(),
                cells[4].parse().unwrap(),
            );
            if let Some(prev) = previous {
                assert!(now.0 <= prev.0 + 1e-12);
                assert!(now.1 <= prev.1 + 1e-12);
                assert!(now.2 <= prev.2 + 1e-12);
            }
            previous = Some(now);
        }
        let first_row: Vec<&str> = rows[1].split(',').collect();
        let last_row: Vec<&str> = rows[rows.len() - 1].split(',').collect();
        let first_ebn0: f64 = first_row[2].parse().unwrap();
        let last_ebn0: f64 = last_row[2].parse().unwrap();
        assert!(last_ebn0 < first_ebn0);
    }

    #[test]
    fn oracle_check_is_deterministic_and_passes_small_cases() {
        let mut config = ExperimentConfig::default();
        config.cases = 4;
        config.alpha_cases = Some(2);
        config.grid_points = 120;
        config.refine_rounds = 3;
        let (csv_a, pass_a) = cmd_oracle_check(&config).unwrap();
        let (csv_b, pass_b) = cmd_oracle_check(&config).unwrap();
        assert_eq!(csv_a, csv_b);
        assert!(pass_a && pass_b, "{csv_a}");

        // Zero tolerance exercises the failure path.
        config.tolerance = 0.0;
        let (csv_fail, pass_fail) = cmd_oracle_check(&config).unwrap();
        assert!(!pass_fail);
        assert!(header_value(&csv_fail, "all_pass") == "0");
    }

    #[test]
    fn optimize_solves_and_calibrates() {
        let mut config = ExperimentConfig::default();
        config.m = 24;
        config.n = 12;
        config.profile = crate::signal::VarianceProfile::LinearRamp { lo: 1.0, hi: 6.0 };
        config.weight_rule = crate::signal::WeightRule::Perceptual;
        config.lambda = 0.05;
        config.chi = 0.05;
        let csv = cmd_optimize(&config).unwrap();
        assert_eq!(data_rows(&csv).len(), 24);
        let eb: f64 = header_value(&csv, "eb_n0").parse().unwrap();
        assert!(eb >= 0.0);

        // Calibration honors the budgets it reports.
        config.d_xy_max = Some(12.0);
        config.d_xy_prime_max = Some(14.0);
        let csv = cmd_optimize(&config).unwrap();
        let d_xy: f64 = header_value(&csv, "d_xy").parse().unwrap();
        let d_xy_prime: f64 = header_value(&csv, "d_xy_prime").parse().unwrap();
        assert!((d_xy - 12.0).abs() / 12.0 <= 1e-3, "d_xy {d_xy}");
        assert!(
            (d_xy_prime - 14.0).abs() / 14.0 <= 1e-3,
            "d_xy_prime {d_xy_prime}"
        );

        // An unattainable attack budget reports the achievable range.
        config.d_xy_prime_max = Some(1e6);
        match cmd_optimize(&config) {
            Err(crate::error::Error::InfeasibleBudget { lo, hi, .. }) => {
                assert!(lo < hi);
            }
            other => panic!("expected an infeasible-budget error, got {other:?}"),
        }

        // One budget alone is a configuration error.
        config.d_xy_prime_max = None;
        assert!(cmd_optimize(&config).is_err());
    }
}
