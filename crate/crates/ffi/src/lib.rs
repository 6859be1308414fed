//! C interface to the spread-spectrum marking library.
//!
//! Conventions, mirrored in the generated `include/sawmark.h`:
//!
//! - The site population lives behind the opaque [`SawmarkModel`] handle;
//!   create it with `sawmark_model_new`, release it with
//!   `sawmark_model_free`.
//! - Every fallible call returns a [`SawmarkStatus`] and writes results
//!   through caller-allocated out-pointers. Array parameters are plain
//!   pointers whose lengths are implied by the model (`m` sites) or passed
//!   explicitly (`n` bits).
//! - On failure a human-readable message is kept per thread; fetch it with
//!   `sawmark_last_error`. Panics never unwind across the boundary — they
//!   surface as `SAWMARK_STATUS_PANIC`.

use sawmark::attack::{
    apply_attack, expected_attack_distortion, optimal_attack, AttackPlan, GameParams, Regime,
};
use sawmark::embed::{embed, embedding_distortion, EmbeddingPlan};
use sawmark::extract::{map_decode, ChannelAssumption};
use sawmark::game::{calibrate_multipliers, equilibrium, optimal_alpha};
use sawmark::signal::{sample_host, Message, SiteModel, SpreadingCode, WeightRule};
use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result of every fallible library call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SawmarkStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or otherwise invalid.
    InvalidArgument = 2,
    /// Two related buffers disagreed about their length.
    LengthMismatch = 3,
    /// A site's channel variance vanished where it must not.
    DegenerateChannel = 4,
    /// Every site was erased; nothing carries the message.
    NoWatermarkEnergy = 5,
    /// A requested distortion budget is outside the attainable range.
    InfeasibleBudget = 6,
    /// A closed form was evaluated outside its regime.
    RegimeMismatch = 7,
    /// A configuration value could not be applied.
    Config = 8,
    /// An image was malformed or unsupported.
    Image = 9,
    /// The underlying I/O operation failed.
    Io = 10,
    /// The library caught an internal panic.
    Panic = 11,
}

/// Per-site weighting rule for the perceptual distortion measure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SawmarkWeightRule {
    /// Every site weighs 1.
    Unit = 0,
    /// Weight decays with the site scale as `(1 + sigma)^(-1/2)`.
    Perceptual = 1,
}

/// Attacker regime reported alongside optimal strengths.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SawmarkRegime {
    /// The attacker erases the site.
    Erase = 0,
    /// The attacker applies the Wiener gain with no extra noise.
    Wiener = 1,
    /// The attacker mixes partial gain with additive noise.
    Intermediate = 2,
    /// No closed-form regime applies (for example, an unmarked site).
    Custom = 3,
}

impl From<Regime> for SawmarkRegime {
    fn from(value: Regime) -> Self {
        match value {
            Regime::Erase => SawmarkRegime::Erase,
            Regime::Wiener => SawmarkRegime::Wiener,
            Regime::Intermediate => SawmarkRegime::Intermediate,
            Regime::Custom => SawmarkRegime::Custom,
        }
    }
}

/// Opaque handle over a site population (scales and weights).
pub struct SawmarkModel {
    inner: SiteModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|slot| {
        let mut bytes = message.into_bytes();
        bytes.push(0);
        *slot.borrow_mut() = bytes;
    });
}

fn status_of(err: &sawmark::Error) -> SawmarkStatus {
    use sawmark::Error;
    match err {
        Error::InvalidArgument(_) => SawmarkStatus::InvalidArgument,
        Error::LengthMismatch { .. } => SawmarkStatus::LengthMismatch,
        Error::DegenerateChannel { .. } => SawmarkStatus::DegenerateChannel,
        Error::NoWatermarkEnergy => SawmarkStatus::NoWatermarkEnergy,
        Error::InfeasibleBudget { .. } => SawmarkStatus::InfeasibleBudget,
        Error::RegimeMismatch(_) => SawmarkStatus::RegimeMismatch,
        Error::Config(_) => SawmarkStatus::Config,
        Error::Image(_) => SawmarkStatus::Image,
        Error::Io(_) => SawmarkStatus::Io,
    }
}

type FfiError = (SawmarkStatus, String);
type FfiResult = Result<(), FfiError>;

fn core_err(err: sawmark::Error) -> FfiError {
    (status_of(&err), err.to_string())
}

fn null_err(what: &str) -> FfiError {
    (
        SawmarkStatus::NullPointer,
        format!("{what} must not be null"),
    )
}

fn run(body: impl FnOnce() -> FfiResult) -> SawmarkStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SawmarkStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("unexpected panic inside the library".to_string());
            SawmarkStatus::Panic
        }
    }
}

unsafe fn in_slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], FfiError> {
    if ptr.is_null() {
        Err(null_err(what))
    } else {
        Ok(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn in_slice_i8<'a>(ptr: *const i8, len: usize, what: &str) -> Result<&'a [i8], FfiError> {
    if ptr.is_null() {
        Err(null_err(what))
    } else {
        Ok(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn write_out(ptr: *mut f64, values: &[f64], what: &str) -> FfiResult {
    if ptr.is_null() {
        return Err(null_err(what));
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), ptr, values.len());
    Ok(())
}

unsafe fn write_scalar<T>(ptr: *mut T, value: T, what: &str) -> FfiResult {
    if ptr.is_null() {
        return Err(null_err(what));
    }
    ptr.write(value);
    Ok(())
}

unsafe fn model_ref<'a>(model: *const SawmarkModel) -> Result<&'a SiteModel, FfiError> {
    if model.is_null() {
        Err(null_err("model"))
    } else {
        Ok(&(*model).inner)
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sawmark_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the current thread's last error message into `buffer`.
///
/// Returns the full message length in bytes (excluding the terminator).
/// The copied portion is always NUL-terminated when `capacity > 0`. A
/// return of 0 means no error has been recorded on this thread.
#[no_mangle]
pub unsafe extern "C" fn sawmark_last_error(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let bytes = slot.borrow();
        if bytes.is_empty() {
            return 0;
        }
        let message_len = bytes.len() - 1;
        if !buffer.is_null() && capacity > 0 {
            let copy = message_len.min(capacity - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buffer, copy);
            *buffer.add(copy) = 0;
        }
        message_len
    })
}

/// Create a site population from `len` per-site scales and weights.
///
/// `phi` may be null, which assigns unit weights. The handle must be
/// released with `sawmark_model_free`.
#[no_mangle]
pub unsafe extern "C" fn sawmark_model_new(
    sigma_x: *const f64,
    phi: *const f64,
    len: usize,
    out_model: *mut *mut SawmarkModel,
) -> SawmarkStatus {
    run(|| {
        if out_model.is_null() {
            return Err(null_err("out_model"));
        }
        let sigma_x = in_slice(sigma_x, len, "sigma_x")?.to_vec();
        let inner = if phi.is_null() {
            SiteModel::with_unit_weights(sigma_x).map_err(core_err)?
        } else {
            let phi = in_slice(phi, len, "phi")?.to_vec();
            SiteModel::new(sigma_x, phi).map_err(core_err)?
        };
        out_model.write(Box::into_raw(Box::new(SawmarkModel { inner })));
        Ok(())
    })
}

/// Release a model handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sawmark_model_free(model: *mut SawmarkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of sites in the model.
#[no_mangle]
pub unsafe extern "C" fn sawmark_model_len(
    model: *const SawmarkModel,
    out_len: *mut usize,
) -> SawmarkStatus {
    run(|| {
        let inner = model_ref(model)?;
        write_scalar(out_len, inner.len(), "out_len")
    })
}

/// Recompute the model's weights from its scales under `rule`.
#[no_mangle]
pub unsafe extern "C" fn sawmark_model_set_weights(
    model: *mut SawmarkModel,
    rule: SawmarkWeightRule,
) -> SawmarkStatus {
    run(|| {
        if model.is_null() {
            return Err(null_err("model"));
        }
        let rule = match rule {
            SawmarkWeightRule::Unit => WeightRule::Unit,
            SawmarkWeightRule::Perceptual => WeightRule::Perceptual,
        };
        (*model).inner.set_weights(rule);
        Ok(())
    })
}

/// Draw one host realization into `out_host` (length = model sites).
#[no_mangle]
pub unsafe extern "C" fn sawmark_gen_host(
    model: *const SawmarkModel,
    seed: u64,
    out_host: *mut f64,
) -> SawmarkStatus {
    run(|| {
        let inner = model_ref(model)?;
        let host = sample_host(inner, seed);
        write_out(out_host, &host, "out_host")
    })
}

/// Embed an `n`-bit message (entries ±1) into the host `x`.
///
/// `x`, `alpha`, and `out_marked` all have one entry per model site.
#[no_mangle]
pub unsafe extern "C" fn sawmark_embed(
    model: *const SawmarkModel,
    x: *const f64,
    alpha: *const f64,
    bits: *const i8,
    n: usize,
    code_seed: u64,
    postfilter: bool,
    out_marked: *mut f64,
) -> SawmarkStatus {
    run(|| {
        let inner = model_ref(model)?;
        let m = inner.len();
        let x = in_slice(x, m, "x")?;
        let alpha = in_slice(alpha, m, "alpha")?.to_vec();
        let bits = in_slice_i8(bits, n, "bits")?.to_vec();
        let plan = EmbeddingPlan {
            message: Message::from_bits(bits).map_err(core_err)?,
            alpha,
            code_seed,
            postfilter,
        };
        let marked = embed(x, &plan, inner).map_err(core_err)?;
        write_out(out_marked, &marked, "out_marked")
    })
}

/// Expected weighted embedding distortion for the given strengths.
#[no_mangle]
pub unsafe extern "C" fn sawmark_embedding_distortion(
    model: *const SawmarkModel,
    alpha: *const f64,
    n: usize,
    postfilter: bool,
    out_distortion: *mut f64,
) -> SawmarkStatus {
    run(|| {
        let inner = model_ref(model)?;
        let alpha = in_slice(alpha, inner.len(), "alpha")?.to_vec();
        let plan = EmbeddingPlan {
            message: Message::from_bits(vec![1; n]).map_err(core_err)?,
            alpha,
            code_seed: 0,
            postfilter,
        };
        let d = embedding_distortion(&plan, inner).map_err(core_err)?;
        write_scalar(out_distortion, d, "out_distortion")
    })
}

/// Game-optimal marking strength for one site.
///
/// `out_regime` receives the attacker's best-response regime at that
/// strength; it may be null if only the strength is wanted.
#[no_mangle]
pub unsafe extern "C" fn sawmark_optimal_alpha(
    lambda: f64,
    chi: f64,
    phi: f64,
    sigma_x: f64,
    n: usize,
    postfilter: bool,
    out_alpha: *mut f64,
    out_regime: *mut SawmarkRegime,
) -> SawmarkStatus {
    run(|| {
        let (alpha, regime) =
            optimal_alpha(lambda, chi, phi, sigma_x, n, postfilter).map_err(core_err)?;
        write_scalar(out_alpha, alpha, "out_alpha")?;
        if !out_regime.is_null() {
            out_regime.write(regime.into());
        }
        Ok(())
    })
}

/// Attacker's best response to the given strengths at multiplier `lambda`.
///
/// Writes per-site gains and noise scales (standard deviations).
#[no_mangle]
pub unsafe extern "C" fn sawmark_optimal_attack(
    model: *const SawmarkModel,
    alpha: *const f64,
    lambda: f64,
    n: usize,
    out_gamma: *mut f64,
    out_sigma_delta: *mut f64,
) -> SawmarkStatus {
    run(|| {
        let inner = model_ref(model)?;
        let alpha = in_slice(alpha, inner.len(), "alpha")?;
        let plan = optimal_attack(alpha, inner, lambda, n).map_err(core_err)?;
        write_out(out_gamma, &plan.gamma, "out_gamma")?;
        write_out(out_sigma_delta, &plan.sigma_delta, "out_sigma_delta")
    })
}

/// Apply a gain-and-noise channel to `len` values.
///
/// `gamma` and `sigma_delta` are per-value gains and noise standard
/// deviations; the noise is reproducible from `noise_seed`.
#[no_mangle]
pub unsafe extern "C" fn sawmark_apply_attack(
    values: *const f64,
    gamma: *const f64,
    sigma_delta: *const f64,
    len: usize,
    noise_seed: u64,
    out_attacked: *mut f64,
) -> SawmarkStatus {
    run(|| {
        let values = in_slice(values, len, "values")?;
        let gamma = in_slice(gamma, len, "gamma")?.to_vec();
        let sigma_delta = in_slice(sigma_delta, len, "sigma_delta")?.to_vec();
        let plan = AttackPlan::custom(gamma, sigma_delta, noise_seed).map_err(core_err)?;
        let attacked = apply_attack(values, &plan).map_err(core_err)?;
        write_out(out_attacked, &attacked, "out_attacked")
    })
}

/// Expected weighted distortion between the original host and the attacked
/// signal under the given channel.
#[no_mangle]
pub unsafe extern "C" fn sawmark_attack_distortion(
    model: *const SawmarkModel,
    alpha: *const f64,
    gamma: *const f64,
    sigma_delta: *const f64,
    n: usize,
    out_distortion: *mut f64,
) -> SawmarkStatus {
    run(|| {
        let inner = model_ref(model)?;
        let m = inner.len();
        let alpha = in_slice(alpha, m, "alpha")?;
        let gamma = in_slice(gamma, m, "gamma")?.to_vec();
        let sigma_delta = in_slice(sigma_delta, m, "sigma_delta")?.to_vec();
        let plan = AttackPlan::custom(gamma, sigma_delta, 0).map_err(core_err)?;
        let d = expected_attack_distortion(&plan, alpha, inner, n).map_err(core_err)?;
        write_scalar(out_distortion, d, "out_distortion")
    })
}

/// Decode `n` bits from a received signal.
///
/// `gamma` and `sigma_delta` describe the channel the decoder assumes; pass
/// null for both to assume no attack. `out_soft`, `out_hard` (each length
/// `n`), `out_sigma_b_sq`, and `out_eb_n0` are optional individually —
/// null skips that output.
#[no_mangle]
pub unsafe extern "C" fn sawmark_map_decode(
    model: *const SawmarkModel,
    received: *const f64,
    alpha: *const f64,
    gamma: *const f64,
    sigma_delta: *const f64,
    n: usize,
    code_seed: u64,
    out_soft: *mut f64,
    out_hard: *mut i8,
    out_sigma_b_sq: *mut f64,
    out_eb_n0: *mut f64,
) -> SawmarkStatus {
    run(|| {
        let inner = model_ref(model)?;
        let m = inner.len();
        let received = in_slice(received, m, "received")?;
        let alpha = in_slice(alpha, m, "alpha")?.to_vec();
        let gamma = if gamma.is_null() {
            vec![1.0; m]
        } else {
            in_slice(gamma, m, "gamma")?.to_vec()
        };
        let sigma_delta = if sigma_delta.is_null() {
            vec![0.0; m]
        } else {
            in_slice(sigma_delta, m, "sigma_delta")?.to_vec()
        };
        let assumption = ChannelAssumption {
            gamma,
            sigma_delta,
            alpha,
            sigma_x: inner.sigma_x.clone(),
            n,
        };
        let code = SpreadingCode::new(m, n, code_seed).map_err(core_err)?;
        let report = map_decode(received, &code, &assumption).map_err(core_err)?;
        if !out_soft.is_null() {
            write_out(out_soft, &report.soft, "out_soft")?;
        }
        if !out_hard.is_null() {
            std::ptr::copy_nonoverlapping(report.hard.as_ptr(), out_hard, n);
        }
        if !out_sigma_b_sq.is_null() {
            out_sigma_b_sq.write(report.sigma_b_sq);
        }
        if !out_eb_n0.is_null() {
            out_eb_n0.write(report.eb_n0);
        }
        Ok(())
    })
}

/// Solve the per-site marking game at fixed multipliers.
///
/// Writes per-site optimal strengths; `out_gamma`, `out_sigma_delta_sq`
/// (the attacker's response), and `out_eb_n0` may each be null.
#[no_mangle]
pub unsafe extern "C" fn sawmark_equilibrium(
    model: *const SawmarkModel,
    lambda: f64,
    chi: f64,
    n: usize,
    postfilter: bool,
    out_alpha: *mut f64,
    out_gamma: *mut f64,
    out_sigma_delta_sq: *mut f64,
    out_eb_n0: *mut f64,
) -> SawmarkStatus {
    run(|| {
        let inner = model_ref(model)?;
        let params = GameParams { lambda, chi, n };
        let report = equilibrium(inner, &params, postfilter).map_err(core_err)?;
        write_out(out_alpha, &report.alphas(), "out_alpha")?;
        if !out_gamma.is_null() {
            let gamma: Vec<f64> = report.sites.iter().map(|s| s.gamma).collect();
            write_out(out_gamma, &gamma, "out_gamma")?;
        }
        if !out_sigma_delta_sq.is_null() {
            let sd: Vec<f64> = report.sites.iter().map(|s| s.sigma_delta_sq).collect();
            write_out(out_sigma_delta_sq, &sd, "out_sigma_delta_sq")?;
        }
        if !out_eb_n0.is_null() {
            out_eb_n0.write(report.eb_n0);
        }
        Ok(())
    })
}

/// Calibrate the game multipliers to distortion budgets, then solve.
///
/// Writes the resolved multipliers; `out_alpha` (length = model sites) and
/// `out_eb_n0` may be null.
#[no_mangle]
pub unsafe extern "C" fn sawmark_calibrate(
    model: *const SawmarkModel,
    n: usize,
    d_xy_max: f64,
    d_xy_prime_max: f64,
    postfilter: bool,
    out_lambda: *mut f64,
    out_chi: *mut f64,
    out_alpha: *mut f64,
    out_eb_n0: *mut f64,
) -> SawmarkStatus {
    run(|| {
        let inner = model_ref(model)?;
        let (lambda, chi, report) =
            calibrate_multipliers(inner, n, d_xy_max, d_xy_prime_max, postfilter)
                .map_err(core_err)?;
        write_scalar(out_lambda, lambda, "out_lambda")?;
        write_scalar(out_chi, chi, "out_chi")?;
        if !out_alpha.is_null() {
            write_out(out_alpha, &report.alphas(), "out_alpha")?;
        }
        if !out_eb_n0.is_null() {
            out_eb_n0.write(report.eb_n0);
        }
        Ok(())
    })
}
