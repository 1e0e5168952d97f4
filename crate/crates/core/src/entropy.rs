//! Empirical Shannon entropy and related information measures.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sample::{count_contexts, ContextCounts, Sample};

/// Empirical order-`k` entropy `h*_k` of a (possibly multi-piece) sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub order: usize,
    pub value_bits_per_symbol: f64,
    /// `Σᵢ max(tᵢ − k, 0)`, the number of counted windows.
    pub effective_length: u64,
}

impl EntropyEstimate {
    /// `effective_length · h*_k`, the total empirical code length in bits.
    pub fn total_bits(&self) -> f64 {
        self.value_bits_per_symbol * self.effective_length as f64
    }
}

/// `−Σ_{v,a} ν(va) log₂(ν(va)/ν̄(v))` with `0·log 0 = 0`.
///
/// Unlike [`empirical_entropy`] this is defined (as zero) when no window was
/// counted.
pub fn empirical_entropy_bits(counts: &ContextCounts) -> f64 {
    counts
        .transitions()
        .map(|(n, total)| n as f64 * (total as f64 / n as f64).log2())
        .sum()
}

pub fn empirical_entropy(counts: &ContextCounts) -> Result<EntropyEstimate> {
    let effective_length = counts.total_windows();
    if effective_length == 0 {
        return Err(Error::Domain(format!(
            "sample too short for order {}",
            counts.order()
        )));
    }
    let max = (counts.alphabet_size() as f64).log2();
    let value = (empirical_entropy_bits(counts) / effective_length as f64).min(max);
    Ok(EntropyEstimate {
        order: counts.order(),
        value_bits_per_symbol: value,
        effective_length,
    })
}

/// Shorthand for `empirical_entropy(&count_contexts(sample, order))`.
pub fn sample_entropy(sample: &Sample, order: usize) -> Result<EntropyEstimate> {
    empirical_entropy(&count_contexts(sample, order))
}

/// Kullback-Leibler divergence `Σ p(b) log₂(p(b)/q(b))` in bits.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Domain(format!(
            "distributions have different lengths ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    if p.iter().chain(q).any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Domain("probabilities must lie in [0, 1]".into()));
    }
    let mass: f64 = p.iter().sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("p sums to {mass}, not 1")));
    }
    let mut sum = 0.0;
    for (i, (&pb, &qb)) in p.iter().zip(q).enumerate() {
        if pb == 0.0 {
            continue;
        }
        if qb == 0.0 {
            return Err(Error::Domain(format!(
                "q vanishes at index {i} where p is positive"
            )));
        }
        sum += pb * (pb / qb).log2();
    }
    Ok(sum.max(0.0))
}

/// `−(t − r·m)·h*_m(x¹◇…◇x^r)`: the log₂ of an upper bound on the
/// probability any order-`m` Markov measure can assign to the sample.
pub fn markov_probability_bound(sample: &Sample, order: usize) -> Result<f64> {
    if let Some(len) = sample.piece_lengths().into_iter().find(|&l| l < order) {
        return Err(Error::Domain(format!(
            "piece of length {len} is shorter than order {order}"
        )));
    }
    Ok(-empirical_entropy_bits(&count_contexts(sample, order)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{Alphabet, Symbol};

    fn bin(s: &str) -> Vec<Symbol> {
        s.bytes().map(|b| (b - b'0') as Symbol).collect()
    }

    fn sample(pieces: &[&str]) -> Sample {
        Sample::new(Alphabet::binary(), pieces.iter().map(|p| bin(p)).collect()).unwrap()
    }

    #[test]
    fn constant_sequence_has_zero_entropy() {
        let s = sample(&["0000000000"]);
        for k in 0..5 {
            assert_eq!(sample_entropy(&s, k).unwrap().value_bits_per_symbol, 0.0);
        }
    }

    #[test]
    fn alternating_sequence_order_zero() {
        let s = sample(&["0101010101010101"]);
        let h = sample_entropy(&s, 0).unwrap();
        assert!((h.value_bits_per_symbol - 1.0).abs() < 1e-15);
        assert_eq!(h.effective_length, 16);
        // Fully predictable given one symbol of context.
        assert_eq!(sample_entropy(&s, 1).unwrap().value_bits_per_symbol, 0.0);
    }

    #[test]
    fn order_zero_of_000100() {
        // -(5/6)log(5/6) - (1/6)log(1/6)
        let h = sample_entropy(&sample(&["000100"]), 0).unwrap();
        assert!((h.value_bits_per_symbol - 0.650_022_421_648_354_1).abs() < 1e-14);
    }

    #[test]
    fn multi_piece_order_one() {
        // 0010 ◇ 011, k = 1: ν(00)=1, ν(01)=2, ν(10)=1, ν(11)=1 over 5 windows.
        // context 0: (1, 2) of 3; context 1: (1, 1) of 2.
        let h = sample_entropy(&sample(&["0010", "011"]), 1).unwrap();
        let ctx0 = -(1.0 / 3.0 * (1.0f64 / 3.0).log2() + 2.0 / 3.0 * (2.0f64 / 3.0).log2());
        let expected = (3.0 * ctx0 + 2.0 * 1.0) / 5.0;
        assert_eq!(h.effective_length, 5);
        assert!((h.value_bits_per_symbol - expected).abs() < 1e-15);
    }

    #[test]
    fn too_short_is_domain_error() {
        let err = sample_entropy(&sample(&["01"]), 2).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert!((kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).is_err());
        assert!(kl_divergence(&[0.5, 0.5], &[0.5]).is_err());
    }

    #[test]
    fn markov_probability_bound_requires_long_pieces() {
        assert!(markov_probability_bound(&sample(&["0110", "1"]), 2).is_err());
        let b = markov_probability_bound(&sample(&["0110", "11"]), 2).unwrap();
        assert!(b <= 0.0);
    }
}
