//! Small numeric helpers shared across modules.

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation. The association order depends only on the
/// slice length, so totals are reproducible regardless of how the terms were
/// produced.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Round to `digits` significant decimal digits.
pub(crate) fn round_significant(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    s.parse().unwrap_or(x)
}
