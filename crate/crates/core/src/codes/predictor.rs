//! Laplace (add-one) and Krichevsky-Trofimov (add-half) predictors and their
//! order-`m` Markov extensions `L_m`, `K_m`.
//!
//! An order-`m` predictor splits the sequence into `|A|^m` interleaved
//! subsequences, one per preceding context, and runs the i.i.d. predictor on
//! each. The first `m` symbols of every piece have no full context and cost
//! `log₂|A|` bits each. Contexts accumulate across pieces in one shared model.
//!
//! Because the i.i.d. predictors are exchangeable, the sequential product of
//! conditionals collapses to a closed form in the final counts:
//!
//! ```text
//! L(x) = Π_a ν(a)! · (|A|−1)! / (t+|A|−1)!
//! K(x) = Γ(|A|/2)/Γ(1/2)^|A| · Π_a Γ(ν(a)+1/2) / Γ(t+|A|/2)
//! ```
//!
//! [`PredictorModel::log2_measure`] evaluates that closed form through
//! `ln Γ`; [`PredictorModel::sequential_log2_measure`] multiplies the
//! conditionals one symbol at a time. The two must agree.

use std::collections::HashMap;

use serde::Serialize;

use super::{Code, CodeLength};
use crate::error::Result;
use crate::math::{ln_gamma, nats_to_bits};
use crate::sample::{count_contexts, Sample, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    Laplace,
    Krichevsky,
}

impl PredictorKind {
    /// Pseudo-count added to every symbol.
    fn prior(self) -> f64 {
        match self {
            Self::Laplace => 1.0,
            Self::Krichevsky => 0.5,
        }
    }
}

/// `(ν(a) + 1) / (ν̄ + |A|)` for every symbol `a`; `counts.len()` is `|A|`.
pub fn laplace_conditional(counts: &[u64]) -> Vec<f64> {
    add_constant(counts, 1.0)
}

/// `(ν(a) + 1/2) / (ν̄ + |A|/2)` for every symbol `a`; `counts.len()` is `|A|`.
pub fn krichevsky_conditional(counts: &[u64]) -> Vec<f64> {
    add_constant(counts, 0.5)
}

fn add_constant(counts: &[u64], prior: f64) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let denom = total as f64 + prior * counts.len() as f64;
    counts.iter().map(|&n| (n as f64 + prior) / denom).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PredictorModel {
    pub kind: PredictorKind,
    pub order: usize,
}

impl PredictorModel {
    pub fn new(kind: PredictorKind, order: usize) -> Self {
        Self { kind, order }
    }

    pub fn laplace(order: usize) -> Self {
        Self::new(PredictorKind::Laplace, order)
    }

    pub fn krichevsky(order: usize) -> Self {
        Self::new(PredictorKind::Krichevsky, order)
    }

    pub fn conditional(&self, counts: &[u64]) -> Vec<f64> {
        add_constant(counts, self.kind.prior())
    }

    /// `log₂` of the model's probability of `sample`, from the closed form.
    pub fn log2_measure(&self, sample: &Sample) -> f64 {
        let size = sample.alphabet().size() as f64;
        let head: usize = sample
            .pieces()
            .iter()
            .map(|p| p.len().min(self.order))
            .sum();
        let counts = count_contexts(sample, self.order);

        let prior = self.kind.prior();
        let ln_prior = ln_gamma(prior);
        let per_context = ln_gamma(prior * size);
        let words: f64 = counts
            .word_counts()
            .map(|n| ln_gamma(n as f64 + prior) - ln_prior)
            .sum();
        let contexts: f64 = counts
            .context_totals()
            .map(|total| per_context - ln_gamma(total as f64 + prior * size))
            .sum();

        -(head as f64) * size.log2() + nats_to_bits(words + contexts)
    }

    /// `log₂` of the model's probability of `sample`, as the running product
    /// of conditional predictions.
    ///
    /// Keeps a dense count vector per observed context, so it is meant for
    /// small alphabets and cross-checks rather than bulk work.
    pub fn sequential_log2_measure(&self, sample: &Sample) -> f64 {
        let size = sample.alphabet().size();
        let mut table: HashMap<&[Symbol], Vec<u64>> = HashMap::new();
        let mut log2 = 0.0;
        for piece in sample.pieces() {
            for (i, &symbol) in piece.iter().enumerate() {
                if i < self.order {
                    log2 -= (size as f64).log2();
                    continue;
                }
                let counts = table
                    .entry(&piece[i - self.order..i])
                    .or_insert_with(|| vec![0; size]);
                log2 += self.conditional(counts)[symbol as usize].log2();
                counts[symbol as usize] += 1;
            }
        }
        log2
    }
}

impl Code for PredictorModel {
    fn id(&self) -> String {
        match self.kind {
            PredictorKind::Laplace => format!("laplace:{}", self.order),
            PredictorKind::Krichevsky => format!("kt:{}", self.order),
        }
    }

    fn code_length(&self, sample: &Sample) -> Result<CodeLength> {
        Ok(CodeLength {
            bits: -self.log2_measure(sample),
            source: self.id(),
        })
    }
}
