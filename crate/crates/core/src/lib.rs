//! Spread-spectrum information hiding over scaling-plus-additive-noise
//! channels.
//!
//! The crate models a complete hide/attack/extract pipeline on Gaussian host
//! signals with independent, non-identically distributed sites:
//!
//! * [`signal`] — host models (per-site standard deviations and perceptual
//!   weights), deterministic host sampling, sliding-window variance
//!   estimation, spreading codes, and messages.
//! * [`embed`] — additive spread-spectrum embedding, expected and empirical
//!   weighted distortion, and an optional Wiener post-filter on the marked
//!   signal.
//! * [`attack`] — the scaling-plus-additive-white-Gaussian-noise attack
//!   channel, per-site attack-regime classification, closed-form optimal
//!   attacks, their costs, and a scalar quantization attack.
//! * [`extract`] — linear minimum-error soft extraction under a channel
//!   assumption, per-bit variance, energy-per-bit accounting, hard decisions
//!   and bit-error rate.
//! * [`game`] — the hider/attacker game: closed-form optimal embedding
//!   amplitudes per attack regime, per-site equilibrium solutions, and
//!   calibration of the distortion multipliers to distortion budgets.
//! * [`oracle`] — brute-force verifiers: dense grid searches over attack and
//!   embedding parameters and a Monte-Carlo channel simulator, kept
//!   independent of the closed-form solvers so they can check them.
//! * [`dwt`] — orthonormal Haar wavelet analysis/synthesis for images.
//! * [`pgm`] — minimal binary PGM (P5) image I/O.
//! * [`image`] — the image pipeline: transform, per-subband host modelling,
//!   embedding in detail coefficients, and blind extraction.
//! * [`config`] / [`harness`] — the key=value experiment configuration and
//!   the CSV-producing commands behind the `sawmark` binary.
//!
//! Everything is deterministic: all randomness flows through counter-mode
//! generators in [`rng`], so identical seeds give identical results
//! regardless of thread count or call order.

pub mod attack;
pub mod config;
pub mod dwt;
pub mod embed;
pub mod error;
pub mod extract;
pub mod game;
pub mod harness;
pub mod image;
pub mod oracle;
pub mod pgm;
pub mod rng;
pub mod signal;
pub mod stats;

pub use error::{Error, Result};
