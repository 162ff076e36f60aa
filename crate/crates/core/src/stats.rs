//! Confidence bounds used by the sampling-based estimators.

use statrs::distribution::{Beta, ContinuousCDF, Normal};

/// Confidence level of every interval reported by the crate.
pub const CONFIDENCE: f64 = 0.99;

/// Two-sided standard-normal quantile `z_{1 − α/2}` for `level = 1 − α`.
pub fn normal_quantile_two_sided(level: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.inverse_cdf(0.5 + level / 2.0)
}

/// One-sided Clopper–Pearson upper bound on a binomial proportion.
pub fn clopper_pearson_upper(failures: u64, trials: u64, level: f64) -> f64 {
    assert!(trials > 0 && failures <= trials);
    if failures == trials {
        return 1.0;
    }
    let beta = Beta::new(failures as f64 + 1.0, (trials - failures) as f64).expect("valid shape");
    beta.inverse_cdf(level).clamp(0.0, 1.0)
}

/// Below this many successes or failures (pooled) the normal approximation is not used.
const MIN_NORMAL_COUNT: u64 = 10;

/// Half-width of a two-sample confidence interval on `p̂_a − p̂_b`.
///
/// Uses the pooled normal approximation `z·√(p̂(1−p̂)(1/n_a + 1/n_b))` when
/// both pooled counts reach [`MIN_NORMAL_COUNT`], and the two-sample
/// Hoeffding bound `√(ln(2/α)/2 · (1/n_a + 1/n_b))` otherwise.
pub fn two_sample_half_width(accepts_a: u64, n_a: u64, accepts_b: u64, n_b: u64, level: f64) -> f64 {
    let inv = 1.0 / n_a as f64 + 1.0 / n_b as f64;
    let total = n_a + n_b;
    let hits = accepts_a + accepts_b;
    if hits.min(total - hits) < MIN_NORMAL_COUNT {
        let alpha = 1.0 - level;
        return ((2.0 / alpha).ln() / 2.0 * inv).sqrt();
    }
    let p = hits as f64 / total as f64;
    normal_quantile_two_sided(level) * (p * (1.0 - p) * inv).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn z_quantile() {
        assert_abs_diff_eq!(normal_quantile_two_sided(0.99), 2.5758293, epsilon = 1e-6);
    }

    #[test]
    fn clopper_pearson_zero_failures() {
        // closed form for k = 0: 1 − α^{1/n}
        let n = 1000;
        let expected = 1.0 - 0.01f64.powf(1.0 / n as f64);
        assert_abs_diff_eq!(clopper_pearson_upper(0, n, 0.99), expected, epsilon = 1e-9);
        assert_eq!(clopper_pearson_upper(5, 5, 0.99), 1.0);
    }

    #[test]
    fn clopper_pearson_dominates_point_estimate() {
        for k in [1, 10, 30, 50] {
            assert!(clopper_pearson_upper(k, 100, 0.99) > k as f64 / 100.0);
        }
    }

    #[test]
    fn hoeffding_fallback_for_degenerate_counts() {
        let w = two_sample_half_width(0, 100, 0, 100, 0.99);
        let expected = ((2.0f64 / 0.01).ln() / 2.0 * 0.02).sqrt();
        assert_abs_diff_eq!(w, expected, epsilon = 1e-15);
        assert!(two_sample_half_width(50, 100, 50, 100, 0.99) < w);
    }
}
