//! Shared numeric helpers: compensated summation, the standard-normal CDF,
//! and a Kolmogorov–Smirnov normality check used by the test suites.

/// Streaming Neumaier-compensated accumulator.
///
/// Sequential compensated sums keep the crate's aggregate statistics
/// reproducible to the last bit and accurate for long, mixed-magnitude
/// series.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    /// Empty accumulator.
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one term.
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Current compensated total.
    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator of terms.
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = NeumaierSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.total()
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Sample mean.
pub fn sample_mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    neumaier_sum(xs.iter().copied()) / xs.len() as f64
}

/// Unbiased sample variance (denominator `len - 1`).
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = sample_mean(xs);
    neumaier_sum(xs.iter().map(|&x| (x - mean) * (x - mean))) / (xs.len() - 1) as f64
}

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against the standard
/// normal distribution.
pub fn ks_statistic_normal(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not contain NaN"));
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = normal_cdf(x);
        let above = (i + 1) as f64 / nf - cdf;
        let below = cdf - i as f64 / nf;
        d = d.max(above).max(below);
    }
    d
}

/// Asymptotic two-sided Kolmogorov–Smirnov critical value at significance
/// `level` for `n` samples: `sqrt(-ln(level / 2) / 2) / sqrt(n)`.
pub fn ks_critical(n: usize, level: f64) -> f64 {
    assert!(n > 0 && level > 0.0 && level < 1.0);
    (-(level / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
