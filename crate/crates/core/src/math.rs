//! Scalar helpers over `libm`, so results do not depend on the platform libm.

pub use libm::{exp, fabs as abs, log as ln, pow, sqrt};

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `ln(sum(exp(xs)))`, stable for large magnitudes. `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| exp(x - max)).sum();
    max + ln(sum)
}

/// In-place softmax; returns the log-normalizer.
pub fn softmax_in_place(xs: &mut [f64]) -> f64 {
    let lse = log_sum_exp(xs);
    for x in xs.iter_mut() {
        *x = exp(*x - lse);
    }
    lse
}

pub fn dot_sparse(dense: &[f64], sparse: &[(u16, f64)]) -> f64 {
    sparse.iter().map(|&(i, v)| dense[i as usize] * v).sum()
}

pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * ln(p))
        .sum::<f64>()
}

pub fn l2_norm(xs: &[f64]) -> f64 {
    sqrt(xs.iter().map(|x| x * x).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_is_symmetric_and_stable() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(3.0) + logistic(-3.0) - 1.0).abs() < 1e-15);
        assert!(logistic(-800.0) >= 0.0);
        assert!(logistic(800.0) <= 1.0);
    }

    #[test]
    fn softmax_two_scores() {
        let mut s = [1.0, 0.0];
        softmax_in_place(&mut s);
        assert!((s[0] - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!((s[0] + s[1] - 1.0).abs() < 1e-15);
    }
}
