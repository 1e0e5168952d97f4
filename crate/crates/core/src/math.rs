//! Log-domain helpers. All code lengths in this crate are in bits.

use std::f64::consts::LN_2;

/// `ln Γ(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `log2 Σ 2^v` without overflow or underflow.
///
/// Returns `-inf` for an empty slice or when every term is `-inf`.
pub fn log2_sum_exp2(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max == f64::INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp2()).sum();
    max + sum.log2()
}

/// Converts a natural-log quantity to bits.
#[inline]
pub fn nats_to_bits(x: f64) -> f64 {
    x / LN_2
}
