//! Experiment configuration: a flat `key=value` dialect with typed fields,
//! strict unknown-key rejection, and a canonical echo so every run can embed
//! its full resolved configuration in its output header.

use crate::error::{Error, Result};
use crate::signal::{VarianceProfile, WeightRule};
use std::path::Path;

/// How per-site embedding strengths are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSpec {
    /// Per-site game-optimal strengths at the configured multipliers.
    Optimal,
    /// The same fixed strength at every site.
    Const(f64),
    /// Strength proportional to the host magnitude, `alpha_i = c |x_i|`.
    Prop(f64),
}

impl AlphaSpec {
    fn parse(text: &str) -> Result<Self> {
        match call_parts(text)? {
            ("optimal", args) if args.is_empty() => Ok(AlphaSpec::Optimal),
            ("const", args) if args.len() == 1 => Ok(AlphaSpec::Const(args[0])),
            ("prop", args) if args.len() == 1 => Ok(AlphaSpec::Prop(args[0])),
            _ => Err(Error::Config(format!(
                "strength rule {text:?} is not one of: optimal, const(x), prop(c)"
            ))),
        }
    }

    fn canonical(&self) -> String {
        match self {
            AlphaSpec::Optimal => "optimal".into(),
            AlphaSpec::Const(x) => format!("const({x})"),
            AlphaSpec::Prop(c) => format!("prop({c})"),
        }
    }
}

/// Which channel the attack command applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackSpec {
    /// Identity channel.
    None,
    /// Zero out every site.
    Erase,
    /// Per-site Wiener shrink toward zero, no added noise.
    Wiener,
    /// The attacker's best response at the configured multiplier.
    Optimal,
    /// Uniform gain and additive-noise level at every site.
    Sawgn { gamma: f64, sigma_delta: f64 },
    /// Uniform quantization of every site value.
    Quantize { step: f64 },
}

impl AttackSpec {
    fn parse(text: &str) -> Result<Self> {
        match call_parts(text)? {
            ("none", args) if args.is_empty() => Ok(AttackSpec::None),
            ("erase", args) if args.is_empty() => Ok(AttackSpec::Erase),
            ("wiener", args) if args.is_empty() => Ok(AttackSpec::Wiener),
            ("optimal", args) if args.is_empty() => Ok(AttackSpec::Optimal),
            ("sawgn", args) if args.len() == 2 => Ok(AttackSpec::Sawgn {
                gamma: args[0],
                sigma_delta: args[1],
            }),
            ("quantize", args) if args.len() == 1 => Ok(AttackSpec::Quantize { step: args[0] }),
            _ => Err(Error::Config(format!(
                "attack {text:?} is not one of: none, erase, wiener, optimal, \
                 sawgn(gamma,sigma_delta), quantize(step)"
            ))),
        }
    }

    fn canonical(&self) -> String {
        match self {
            AttackSpec::None => "none".into(),
            AttackSpec::Erase => "erase".into(),
            AttackSpec::Wiener => "wiener".into(),
            AttackSpec::Optimal => "optimal".into(),
            AttackSpec::Sawgn { gamma, sigma_delta } => format!("sawgn({gamma},{sigma_delta})"),
            AttackSpec::Quantize { step } => format!("quantize({step})"),
        }
    }
}

/// Which axis the attack-strength sweep walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAttackKind {
    /// Gain-and-noise channels at the attacker's best response, swept over
    /// the attacker's multiplier (descending, so distortion ascends).
    Sawgn,
    /// Uniform quantization swept over the step (ascending).
    Quantize,
}

impl SweepAttackKind {
    fn parse(text: &str) -> Result<Self> {
        match text {
            "sawgn" => Ok(SweepAttackKind::Sawgn),
            "quantize" => Ok(SweepAttackKind::Quantize),
            _ => Err(Error::Config(format!(
                "attack kind {text:?} is not one of: sawgn, quantize"
            ))),
        }
    }

    fn canonical(&self) -> &'static str {
        match self {
            SweepAttackKind::Sawgn => "sawgn",
            SweepAttackKind::Quantize => "quantize",
        }
    }
}

fn parse_profile(text: &str) -> Result<VarianceProfile> {
    // piecewise(scale:count,scale:count,...) has non-numeric arguments,
    // so it is peeled off before the generic call parser.
    if let Some(rest) = text.trim().strip_prefix("piecewise(") {
        let inner = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::Config(format!("malformed piecewise profile {text:?}")))?;
        let mut segments = Vec::new();
        for part in inner.split(',') {
            let (scale, count) = part.split_once(':').ok_or_else(|| {
                Error::Config(format!("piecewise segment {part:?} is not scale:count"))
            })?;
            let scale: f64 = scale
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("piecewise scale {scale:?} is not a number")))?;
            let count: usize = count.trim().parse().map_err(|_| {
                Error::Config(format!("piecewise count {count:?} is not an integer"))
            })?;
            segments.push((scale, count));
        }
        return Ok(VarianceProfile::Piecewise(segments));
    }
    let (name, args) = call_parts(text)?;
    match (name, args.as_slice()) {
        ("constant", [s]) => Ok(VarianceProfile::Constant(*s)),
        ("ramp", [lo, hi]) => Ok(VarianceProfile::LinearRamp { lo: *lo, hi: *hi }),
        ("power", [lo, hi, exponent]) => Ok(VarianceProfile::PowerLaw {
            lo: *lo,
            hi: *hi,
            exponent: *exponent,
        }),
        _ => Err(Error::Config(format!(
            "profile {text:?} is not one of: constant(s), ramp(lo,hi), \
             power(lo,hi,exponent), piecewise(s:count,...)"
        ))),
    }
}

fn canonical_profile(profile: &VarianceProfile) -> String {
    match profile {
        VarianceProfile::Constant(s) => format!("constant({s})"),
        VarianceProfile::LinearRamp { lo, hi } => format!("ramp({lo},{hi})"),
        VarianceProfile::PowerLaw { lo, hi, exponent } => format!("power({lo},{hi},{exponent})"),
        VarianceProfile::Piecewise(segments) => {
            let inner: Vec<String> = segments.iter().map(|(s, c)| format!("{s}:{c}")).collect();
            format!("piecewise({})", inner.join(","))
        }
    }
}

fn parse_weight_rule(text: &str) -> Result<WeightRule> {
    match text {
        "unit" => Ok(WeightRule::Unit),
        "perceptual" => Ok(WeightRule::Perceptual),
        _ => Err(Error::Config(format!(
            "weight rule {text:?} is not one of: unit, perceptual"
        ))),
    }
}

fn canonical_weight_rule(rule: WeightRule) -> &'static str {
    match rule {
        WeightRule::Unit => "unit",
        WeightRule::Perceptual => "perceptual",
    }
}

/// Split `name(a,b,...)` or a bare `name` into the name and numeric args.
fn call_parts(text: &str) -> Result<(&str, Vec<f64>)> {
    let text = text.trim();
    match text.split_once('(') {
        None => Ok((text, Vec::new())),
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::Config(format!("missing ')' in {text:?}")))?;
            let mut args = Vec::new();
            for part in inner.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                args.push(part.parse::<f64>().map_err(|_| {
                    Error::Config(format!("argument {part:?} in {text:?} is not a number"))
                })?);
            }
            Ok((name.trim(), args))
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}={value:?} is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}={value:?} is not a non-negative integer")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}={value:?} is not a non-negative integer")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}={value:?} is not a boolean"))),
    }
}

/// Every key the configuration understands, in echo order.
pub const VALID_KEYS: &[&str] = &[
    "alpha",
    "alpha_cases",
    "alpha_max",
    "alpha_min",
    "alpha_steps",
    "assume_gamma",
    "assume_sigma_delta",
    "attack",
    "attack_kind",
    "cases",
    "chi",
    "code_seed",
    "d_xy_max",
    "d_xy_per_site",
    "d_xy_prime_max",
    "floor",
    "grid_points",
    "input",
    "lambda",
    "levels",
    "m",
    "max_mean_abs_change",
    "message_bits",
    "message_seed",
    "n",
    "noise_seed",
    "output",
    "postfilter",
    "profile",
    "ref",
    "refine_rounds",
    "seed",
    "sigma_max",
    "sigma_min",
    "sigma_sq_max",
    "sigma_sq_min",
    "sigma_sq_steps",
    "sigma_steps",
    "step",
    "strength_max",
    "strength_min",
    "strength_steps",
    "tolerance",
    "trials",
    "weight_rule",
    "window",
];

/// A fully resolved experiment configuration.
///
/// Construct one with [`ExperimentConfig::for_command`] (which bakes in the
/// per-command defaults), then layer a config file and explicit overrides on
/// top with [`apply_file`](Self::apply_file) / [`apply`](Self::apply).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Number of sites.
    pub m: usize,
    /// Number of message bits.
    pub n: usize,
    /// Host-draw and Monte-Carlo master seed.
    pub seed: u64,
    /// Seed of the random message.
    pub message_seed: u64,
    /// Seed of the attack's additive-noise stream.
    pub noise_seed: u64,
    /// Seed of the spreading code.
    pub code_seed: u64,
    /// Per-site scale profile.
    pub profile: VarianceProfile,
    /// Rule mapping scales to perceptual weights.
    pub weight_rule: WeightRule,
    /// Attacker's distortion multiplier.
    pub lambda: f64,
    /// Embedder's distortion multiplier.
    pub chi: f64,
    /// Embedding-distortion budget (enables calibration when set).
    pub d_xy_max: Option<f64>,
    /// Attack-distortion budget (enables calibration when set).
    pub d_xy_prime_max: Option<f64>,
    /// Image pipeline's average embedding distortion per marked coefficient
    /// (`0` falls back to the fixed embedder multiplier).
    pub d_xy_per_site: Option<f64>,
    /// Whether the embedder's strengths assume the post-filter.
    pub postfilter: bool,
    /// Strength rule for the embed command.
    pub alpha: AlphaSpec,
    /// Channel for the attack command.
    pub attack: AttackSpec,
    /// Monte-Carlo trial count.
    pub trials: usize,
    /// Explicit message as a `1`/`0` (or `+`/`-`) string.
    pub message_bits: Option<String>,
    /// Extractor's assumed uniform channel gain (overrides input columns).
    pub assume_gamma: Option<f64>,
    /// Extractor's assumed uniform noise level (overrides input columns).
    pub assume_sigma_delta: Option<f64>,
    /// Strength-axis lower bound of the regime sweep.
    pub alpha_min: f64,
    /// Strength-axis upper bound of the regime sweep.
    pub alpha_max: f64,
    /// Strength-axis point count of the regime sweep.
    pub alpha_steps: usize,
    /// Scale-axis lower bound of the regime sweep.
    pub sigma_min: f64,
    /// Scale-axis upper bound of the regime sweep.
    pub sigma_max: f64,
    /// Scale-axis point count of the regime sweep.
    pub sigma_steps: usize,
    /// Power-axis lower bound of the strength-curve sweep.
    pub sigma_sq_min: f64,
    /// Power-axis upper bound of the strength-curve sweep.
    pub sigma_sq_max: f64,
    /// Power-axis point count of the strength-curve sweep.
    pub sigma_sq_steps: usize,
    /// Which axis the attack sweep walks.
    pub attack_kind: SweepAttackKind,
    /// Attack-sweep axis lower bound (multiplier or quantization step).
    /// The default multiplier window brackets the default design
    /// multiplier (`lambda = 2e-3`) by well over a decade on each side, so
    /// the sweep's extremes show the attacks the strengths were not
    /// designed against; quantization sweeps should set their own range in
    /// signal units.
    pub strength_min: f64,
    /// Attack-sweep axis upper bound.
    pub strength_max: f64,
    /// Attack-sweep point count (excluding the leading identity row).
    pub strength_steps: usize,
    /// Input path (CSV or PGM depending on the command).
    pub input: Option<String>,
    /// Output path; stdout when unset.
    pub output: Option<String>,
    /// Reference path (original image for comparisons).
    pub reference: Option<String>,
    /// Transform depth of the image pipeline.
    pub levels: usize,
    /// Scale-estimator window of the image pipeline.
    pub window: usize,
    /// Scale-estimator floor of the image pipeline.
    pub floor: f64,
    /// Quantization step of the image pipeline's attack (0 = none).
    pub step: f64,
    /// Reporting bound on the mean per-pixel absolute change.
    pub max_mean_abs_change: f64,
    /// Number of attack-response verification cases.
    pub cases: usize,
    /// Number of strength verification cases (`cases / 10` when unset).
    pub alpha_cases: Option<usize>,
    /// Relative tolerance of the verification command.
    pub tolerance: f64,
    /// Grid resolution per axis of the verification searches.
    pub grid_points: usize,
    /// Refinement rounds of the verification searches.
    pub refine_rounds: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            m: 1000,
            n: 100,
            seed: 1,
            message_seed: 2,
            noise_seed: 3,
            code_seed: 4,
            profile: VarianceProfile::Constant(1.0),
            weight_rule: WeightRule::Unit,
            lambda: 0.002,
            chi: 0.0028,
            d_xy_max: None,
            d_xy_prime_max: None,
            d_xy_per_site: Some(1.0),
            postfilter: false,
            alpha: AlphaSpec::Optimal,
            attack: AttackSpec::None,
            trials: 1000,
            message_bits: None,
            assume_gamma: None,
            assume_sigma_delta: None,
            alpha_min: 0.01,
            alpha_max: 2.0,
            alpha_steps: 100,
            sigma_min: 0.05,
            sigma_max: 2.0,
            sigma_steps: 100,
            sigma_sq_min: 1.0,
            sigma_sq_max: 400.0,
            sigma_sq_steps: 100,
            attack_kind: SweepAttackKind::Sawgn,
            strength_min: 2e-4,
            strength_max: 8e-2,
            strength_steps: 11,
            input: None,
            output: None,
            reference: None,
            levels: 3,
            window: 9,
            floor: 1e-6,
            step: 0.0,
            max_mean_abs_change: 8.0,
            cases: 1000,
            alpha_cases: None,
            tolerance: 1e-4,
            grid_points: 400,
            refine_rounds: 3,
        }
    }
}

impl ExperimentConfig {
    /// Defaults tuned per command (sweep commands pin the multiplier and
    /// weight choices their reference curves were drawn at).
    pub fn for_command(command: &str) -> Self {
        let mut config = ExperimentConfig::default();
        match command {
            "sweep-domains" => {
                config.lambda = 0.2;
                config.chi = 0.002;
                config.n = 1;
                config.weight_rule = WeightRule::Unit;
            }
            "sweep-alpha" => {
                config.lambda = 0.002;
                config.chi = 0.0028;
                config.n = 100;
                config.weight_rule = WeightRule::Perceptual;
            }
            "sweep-attack" => {
                config.lambda = 0.002;
                config.chi = 0.0028;
                config.n = 100;
                config.weight_rule = WeightRule::Perceptual;
                config.profile = VarianceProfile::LinearRamp { lo: 1.0, hi: 30.0 };
            }
            "image-embed" | "image-extract" => {
                config.n = 156;
            }
            _ => {}
        }
        config
    }

    /// Set one key from its text value.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "m" => self.m = parse_usize(key, value)?,
            "n" => self.n = parse_usize(key, value)?,
            "seed" => self.seed = parse_u64(key, value)?,
            "message_seed" => self.message_seed = parse_u64(key, value)?,
            "noise_seed" => self.noise_seed = parse_u64(key, value)?,
            "code_seed" => self.code_seed = parse_u64(key, value)?,
            "profile" => self.profile = parse_profile(value)?,
            "weight_rule" => self.weight_rule = parse_weight_rule(value)?,
            "lambda" => self.lambda = parse_f64(key, value)?,
            "chi" => self.chi = parse_f64(key, value)?,
            "d_xy_max" => self.d_xy_max = Some(parse_f64(key, value)?),
            "d_xy_prime_max" => self.d_xy_prime_max = Some(parse_f64(key, value)?),
            "d_xy_per_site" => {
                self.d_xy_per_site = match parse_f64(key, value)? {
                    v if v == 0.0 => None,
                    v => Some(v),
                }
            }
            "postfilter" => self.postfilter = parse_bool(key, value)?,
            "alpha" => self.alpha = AlphaSpec::parse(value)?,
            "attack" => self.attack = AttackSpec::parse(value)?,
            "trials" => self.trials = parse_usize(key, value)?,
            "message_bits" => self.message_bits = Some(value.to_string()),
            "assume_gamma" => self.assume_gamma = Some(parse_f64(key, value)?),
            "assume_sigma_delta" => self.assume_sigma_delta = Some(parse_f64(key, value)?),
            "alpha_min" => self.alpha_min = parse_f64(key, value)?,
            "alpha_max" => self.alpha_max = parse_f64(key, value)?,
            "alpha_steps" => self.alpha_steps = parse_usize(key, value)?,
            "sigma_min" => self.sigma_min = parse_f64(key, value)?,
            "sigma_max" => self.sigma_max = parse_f64(key, value)?,
            "sigma_steps" => self.sigma_steps = parse_usize(key, value)?,
            "sigma_sq_min" => self.sigma_sq_min = parse_f64(key, value)?,
            "sigma_sq_max" => self.sigma_sq_max = parse_f64(key, value)?,
            "sigma_sq_steps" => self.sigma_sq_steps = parse_usize(key, value)?,
            "attack_kind" => self.attack_kind = SweepAttackKind::parse(value)?,
            "strength_min" => self.strength_min = parse_f64(key, value)?,
            "strength_max" => self.strength_max = parse_f64(key, value)?,
            "strength_steps" => self.strength_steps = parse_usize(key, value)?,
            "input" => self.input = Some(value.to_string()),
            "output" => self.output = Some(value.to_string()),
            "ref" => self.reference = Some(value.to_string()),
            "levels" => self.levels = parse_usize(key, value)?,
            "window" => self.window = parse_usize(key, value)?,
            "floor" => self.floor = parse_f64(key, value)?,
            "step" => self.step = parse_f64(key, value)?,
            "max_mean_abs_change" => self.max_mean_abs_change = parse_f64(key, value)?,
            "cases" => self.cases = parse_usize(key, value)?,
            "alpha_cases" => self.alpha_cases = Some(parse_usize(key, value)?),
            "tolerance" => self.tolerance = parse_f64(key, value)?,
            "grid_points" => self.grid_points = parse_usize(key, value)?,
            "refine_rounds" => self.refine_rounds = parse_usize(key, value)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key {key:?}; valid keys: {}",
                    VALID_KEYS.join(", ")
                )));
            }
        }
        Ok(())
    }

    /// Layer a `key=value` file onto this configuration.
    ///
    /// Lines are UTF-8, one `key=value` per line. Blank lines are skipped.
    /// `#` starts a comment (a full line or a trailing remark).
    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let text = std::fs::read_to_string(path.as_ref())?;
        self.apply_text(&text)
    }

    /// Layer `key=value` text onto this configuration.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (number, raw) in text.lines().enumerate() {
            let line = match raw.split_once('#') {
                Some((before, _)) => before.trim(),
                None => raw.trim(),
            };
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: {raw:?} is not key=value", number + 1))
            })?;
            self.apply(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", number + 1)))?;
        }
        Ok(())
    }

    /// Parse one `key=value` override (the CLI's `--set` argument form).
    pub fn apply_set(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {pair:?} is not key=value")))?;
        self.apply(key.trim(), value)
    }

    /// Effective number of strength verification cases.
    pub fn alpha_cases(&self) -> usize {
        self.alpha_cases.unwrap_or(self.cases / 10)
    }

    /// The full resolved configuration as sorted `(key, value)` pairs.
    ///
    /// Unset optional paths and assumptions are omitted; everything else is
    /// echoed in its canonical parseable form, so a header can be replayed
    /// as a config file.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let mut pairs: Vec<(&'static str, String)> = vec![
            ("alpha", self.alpha.canonical()),
            ("alpha_max", self.alpha_max.to_string()),
            ("alpha_min", self.alpha_min.to_string()),
            ("alpha_steps", self.alpha_steps.to_string()),
            ("attack", self.attack.canonical()),
            ("attack_kind", self.attack_kind.canonical().to_string()),
            ("cases", self.cases.to_string()),
            ("chi", self.chi.to_string()),
            ("code_seed", self.code_seed.to_string()),
            (
                "d_xy_per_site",
                self.d_xy_per_site.unwrap_or(0.0).to_string(),
            ),
            ("floor", self.floor.to_string()),
            ("grid_points", self.grid_points.to_string()),
            ("lambda", self.lambda.to_string()),
            ("levels", self.levels.to_string()),
            ("m", self.m.to_string()),
            ("max_mean_abs_change", self.max_mean_abs_change.to_string()),
            ("message_seed", self.message_seed.to_string()),
            ("n", self.n.to_string()),
            ("noise_seed", self.noise_seed.to_string()),
            ("postfilter", self.postfilter.to_string()),
            ("profile", canonical_profile(&self.profile)),
            ("refine_rounds", self.refine_rounds.to_string()),
            ("seed", self.seed.to_string()),
            ("sigma_max", self.sigma_max.to_string()),
            ("sigma_min", self.sigma_min.to_string()),
            ("sigma_sq_max", self.sigma_sq_max.to_string()),
            ("sigma_sq_min", self.sigma_sq_min.to_string()),
            ("sigma_sq_steps", self.sigma_sq_steps.to_string()),
            ("sigma_steps", self.sigma_steps.to_string()),
            ("step", self.step.to_string()),
            ("strength_max", self.strength_max.to_string()),
            ("strength_min", self.strength_min.to_string()),
            ("strength_steps", self.strength_steps.to_string()),
            ("tolerance", self.tolerance.to_string()),
            ("trials", self.trials.to_string()),
            (
                "weight_rule",
                canonical_weight_rule(self.weight_rule).to_string(),
            ),
            ("window", self.window.to_string()),
        ];
        if let Some(v) = self.alpha_cases {
            pairs.push(("alpha_cases", v.to_string()));
        }
        if let Some(v) = self.d_xy_max {
            pairs.push(("d_xy_max", v.to_string()));
        }
        if let Some(v) = self.d_xy_prime_max {
            pairs.push(("d_xy_prime_max", v.to_string()));
        }
        if let Some(v) = &self.message_bits {
            pairs.push(("message_bits", v.clone()));
        }
        if let Some(v) = self.assume_gamma {
            pairs.push(("assume_gamma", v.to_string()));
        }
        if let Some(v) = self.assume_sigma_delta {
            pairs.push(("assume_sigma_delta", v.to_string()));
        }
        if let Some(v) = &self.input {
            pairs.push(("input", v.clone()));
        }
        if let Some(v) = &self.output {
            pairs.push(("output", v.clone()));
        }
        if let Some(v) = &self.reference {
            pairs.push(("ref", v.clone()));
        }
        pairs.sort_by(|a, b| a.0.cmp(b.0));
        pairs
    }
}
