//! Deterministic counter-mode randomness.
//!
//! Every random quantity in the crate is a pure function of
//! `(seed, stream, index)`: a keyed counter pushed through the SplitMix64
//! finalizer. There is no mutable generator state, so parallel evaluation
//! order cannot change any value, and the i-th draw of a stream can be
//! recomputed in isolation. Gaussian variates use Box–Muller on two
//! consecutive counter positions.

/// Stream tag for host-signal samples.
pub const STREAM_HOST: u64 = 1;
/// Stream tag for attack-noise samples.
pub const STREAM_NOISE: u64 = 2;
/// Stream tag for spreading-code entries.
pub const STREAM_CODE: u64 = 3;
/// Stream tag for message bits.
pub const STREAM_MESSAGE: u64 = 4;
/// Stream tag for deriving per-trial sub-seeds in Monte-Carlo runs.
pub const STREAM_TRIAL: u64 = 5;
/// Stream tag for random parameter draws in verification sweeps.
pub const STREAM_DRAW: u64 = 6;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a bijective 64-bit mixer with good avalanche.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stateless keyed generator addressed by counter index.
///
/// Two generators built from the same `(seed, stream)` pair are
/// interchangeable; values at distinct indices are independent for all
/// practical purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    /// Derive the generator for `stream` under `seed`.
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix64(mix64(seed ^ GOLDEN).wrapping_add(stream));
        CounterRng { key }
    }

    /// Build a generator directly from a raw key (used for hierarchical
    /// sub-streams such as per-row spreading-code keys).
    pub fn from_key(key: u64) -> Self {
        CounterRng { key }
    }

    /// Uniform 64-bit word at counter position `index`.
    #[inline]
    pub fn uniform_u64(&self, index: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))),
        )
    }

    /// Uniform double in the half-open interval `(0, 1]`.
    ///
    /// The lower end is excluded so that `ln(u)` is always finite.
    #[inline]
    pub fn uniform_open01(&self, index: u64) -> f64 {
        (((self.uniform_u64(index) >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal variate at position `index` via Box–Muller on the
    /// uniforms at counter positions `2 * index` and `2 * index + 1`.
    #[inline]
    pub fn normal(&self, index: u64) -> f64 {
        let u1 = self.uniform_open01(index.wrapping_mul(2));
        let u2 = self.uniform_open01(index.wrapping_mul(2).wrapping_add(1));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fresh 64-bit seed for a derived sub-stream (e.g. one Monte-Carlo
    /// trial), decorrelated from the parent stream.
    #[inline]
    pub fn sub_seed(&self, index: u64) -> u64 {
        self.uniform_u64(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_values() {
        let a = CounterRng::new(42, STREAM_HOST);
        let b = CounterRng::new(42, STREAM_HOST);
        for i in 0..100 {
            assert_eq!(a.uniform_u64(i), b.uniform_u64(i));
            assert_eq!(a.normal(i).to_bits(), b.normal(i).to_bits());
        }
    }

    #[test]
    fn streams_and_seeds_decorrelate() {
        let a = CounterRng::new(42, STREAM_HOST);
        let b = CounterRng::new(42, STREAM_NOISE);
        let c = CounterRng::new(43, STREAM_HOST);
        let hits_ab = (0..1000)
            .filter(|&i| a.uniform_u64(i) == b.uniform_u64(i))
            .count();
        let hits_ac = (0..1000)
            .filter(|&i| a.uniform_u64(i) == c.uniform_u64(i))
            .count();
        assert_eq!(hits_ab, 0);
        assert_eq!(hits_ac, 0);
    }

    #[test]
    fn uniform_open01_stays_in_half_open_interval() {
        let rng = CounterRng::new(7, STREAM_NOISE);
        for i in 0..10_000 {
            let u = rng.uniform_open01(i);
            assert!(u > 0.0 && u <= 1.0, "u = {u}");
        }
        // The all-ones word maps exactly to 1.0 and the all-zeros word to 2^-53.
        let top = ((u64::MAX >> 11) + 1) as f64 / 9_007_199_254_740_992.0;
        assert_eq!(top, 1.0);
    }

    #[test]
    fn normals_have_unit_moments() {
        let rng = CounterRng::new(123, STREAM_HOST);
        let m = 200_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..m {
            let z = rng.normal(i);
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / m as f64;
        let var = sumsq / m as f64 - mean * mean;
        // Standard error of the mean is 1/sqrt(m) ~ 0.0022; allow 5 sigma.
        assert!(mean.abs() < 5.0 / (m as f64).sqrt(), "mean = {mean}");
        // Var(sample variance) ~ 2/m for normals; allow 5 sigma.
        assert!(
            (var - 1.0).abs() < 5.0 * (2.0 / m as f64).sqrt(),
            "var = {var}"
        );
    }

    #[test]
    fn order_of_evaluation_is_irrelevant() {
        let rng = CounterRng::new(9, STREAM_CODE);
        let forward: Vec<u64> = (0..64).map(|i| rng.uniform_u64(i)).collect();
        let backward: Vec<u64> = (0..64).rev().map(|i| rng.uniform_u64(i)).collect();
        let reversed: Vec<u64> = backward.into_iter().rev().collect();
        assert_eq!(forward, reversed);
    }
}
