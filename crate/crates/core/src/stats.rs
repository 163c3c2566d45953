//! Small-sample statistics: exact binomial confidence bounds, order
//! statistic intervals for the median, moments.

use statrs::function::beta::beta_reg;

/// `P[X ≤ k]` for `X ~ Binomial(n, p)`.
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> f64 {
    if k >= n || p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    beta_reg((n - k) as f64, (k + 1) as f64, 1.0 - p)
}

const CP_ITERS: usize = 200;

/// Exact (Clopper–Pearson) one-sided upper bound at level `1 - alpha` on a
/// binomial proportion after `k` successes in `n` trials.
pub fn clopper_pearson_upper(k: u64, n: u64, alpha: f64) -> f64 {
    assert!(k <= n && n > 0);
    if k == n {
        return 1.0;
    }
    let (mut lo, mut hi) = (k as f64 / n as f64, 1.0);
    for _ in 0..CP_ITERS {
        let mid = 0.5 * (lo + hi);
        if binomial_cdf(k, n, mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    hi
}

/// Exact one-sided lower bound at level `1 - alpha`.
pub fn clopper_pearson_lower(k: u64, n: u64, alpha: f64) -> f64 {
    assert!(k <= n && n > 0);
    if k == 0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, k as f64 / n as f64);
    for _ in 0..CP_ITERS {
        let mid = 0.5 * (lo + hi);
        // P[X ≥ k] at mid
        if 1.0 - binomial_cdf(k - 1, n, mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    lo
}

/// Two-sided Clopper–Pearson interval with the given coverage.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    let a = 0.5 * (1.0 - confidence);
    (clopper_pearson_lower(k, n, a), clopper_pearson_upper(k, n, a))
}

/// Lower median, the order statistic `⌈M/2⌉` of a sorted sample.
pub fn lower_median(sorted: &[f64]) -> f64 {
    sorted[sorted.len().div_ceil(2) - 1]
}

/// Distribution-free interval `[x_(l), x_(M+1-l)]` covering the median
/// with probability at least `confidence`.
pub fn median_ci(sorted: &[f64], confidence: f64) -> (f64, f64) {
    let m = sorted.len() as u64;
    let a = 0.5 * (1.0 - confidence);
    // largest l with P[B ≤ l-1] ≤ a, B ~ Bin(M, 1/2)
    let mut l = 0u64;
    while l < m / 2 && binomial_cdf(l, m, 0.5) <= a {
        l += 1;
    }
    if l == 0 {
        return (sorted[0], sorted[sorted.len() - 1]);
    }
    let u = m + 1 - l;
    (sorted[(l - 1) as usize], sorted[(u - 1) as usize])
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (divisor `M - 1`).
pub fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let mu = mean(x);
    (x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

/// Two-sided standard normal quantile for the given coverage.
pub fn normal_quantile(confidence: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(0.5 + 0.5 * confidence)
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}
