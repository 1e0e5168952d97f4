//! Weighted combinations of codes: the `R` universal code over all Markov
//! orders, and general mixtures of arbitrary codes.

use serde::Serialize;

use super::{Code, CodeLength, PredictorModel};
use crate::error::{Error, Result};
use crate::math::log2_sum_exp2;
use crate::sample::Sample;

/// `ω_i = 1/log₂(i+1) − 1/log₂(i+2)` for `i ≥ 1`, so `ω_1 = 1 − 1/log₂3`.
///
/// The series telescopes to 1.
pub fn omega(i: usize) -> f64 {
    assert!(i >= 1, "omega is indexed from 1");
    let i = i as f64;
    1.0 / (i + 1.0).log2() - 1.0 / (i + 2.0).log2()
}

/// The first `N` weights of [`omega`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaWeights {
    values: Vec<f64>,
}

impl OmegaWeights {
    pub fn new(count: usize) -> Self {
        Self {
            values: (1..=count).map(omega).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `ω_i`, 1-based.
    pub fn get(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `Σ_{i>N} ω_i = 1/log₂(N+2)`, the mass left unspent by truncation.
    pub fn residual(&self) -> f64 {
        1.0 / ((self.values.len() + 2) as f64).log2()
    }
}

/// `R(x) = Σ_{i=0}^{N} ω_{i+1} K_i(x)`, truncated at order `N`.
///
/// The discarded tail is not renormalized, so `R` stays a sub-probability
/// measure and its lengths satisfy the Kraft inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RCode {
    pub max_order: usize,
}

impl RCode {
    pub const DEFAULT_MAX_ORDER: usize = 16;

    pub fn new(max_order: usize) -> Self {
        Self { max_order }
    }

    /// `log₂ R(x)`.
    pub fn log2_measure(&self, sample: &Sample) -> f64 {
        let terms: Vec<f64> = (0..=self.max_order)
            .map(|i| omega(i + 1).log2() + PredictorModel::krichevsky(i).log2_measure(sample))
            .collect();
        log2_sum_exp2(&terms)
    }
}

impl Default for RCode {
    fn default() -> Self {
        Self::new(Self::DEFAULT_MAX_ORDER)
    }
}

impl Code for RCode {
    fn id(&self) -> String {
        format!("r:{}", self.max_order)
    }

    fn code_length(&self, sample: &Sample) -> Result<CodeLength> {
        Ok(CodeLength {
            bits: -self.log2_measure(sample),
            source: self.id(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MixMode {
    /// `−log₂ Σ τᵢ 2^(−|φᵢ|)`.
    Mix,
    /// `minᵢ (|φᵢ| − log₂ τᵢ)`; never shorter than `Mix`.
    Mm,
}

/// A weighted family of codes combined into one.
pub struct MixtureCode {
    components: Vec<Box<dyn Code>>,
    weights: Vec<f64>,
    mode: MixMode,
}

impl MixtureCode {
    pub fn new(components: Vec<Box<dyn Code>>, weights: Vec<f64>, mode: MixMode) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Usage("a mixture needs at least one component code".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::Usage(format!(
                "{} weights given for {} component codes",
                weights.len(),
                components.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Usage("mixture weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::Usage(format!(
                "mixture weights sum to {total}, more than 1"
            )));
        }
        Ok(Self {
            components,
            weights,
            mode,
        })
    }

    /// Equal weights `1/l` over `l` components.
    pub fn uniform(components: Vec<Box<dyn Code>>, mode: MixMode) -> Result<Self> {
        let n = components.len().max(1);
        Self::new(components, vec![1.0 / n as f64; n], mode)
    }

    pub fn mode(&self) -> MixMode {
        self.mode
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Code for MixtureCode {
    fn id(&self) -> String {
        let mode = match self.mode {
            MixMode::Mix => "mix",
            MixMode::Mm => "mm",
        };
        let parts: Vec<String> = self
            .components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| format!("{w}*{}", c.id()))
            .collect();
        format!("{mode}:{}", parts.join("+"))
    }

    fn code_length(&self, sample: &Sample) -> Result<CodeLength> {
        let lengths = self
            .components
            .iter()
            .map(|c| c.code_length(sample).map(|l| l.bits))
            .collect::<Result<Vec<f64>>>()?;
        let bits = match self.mode {
            MixMode::Mix => {
                let terms: Vec<f64> = lengths
                    .iter()
                    .zip(&self.weights)
                    .map(|(len, w)| w.log2() - len)
                    .collect();
                -log2_sum_exp2(&terms)
            }
            MixMode::Mm => lengths
                .iter()
                .zip(&self.weights)
                .map(|(len, w)| len - w.log2())
                .fold(f64::INFINITY, f64::min),
        };
        Ok(CodeLength {
            bits,
            source: self.id(),
        })
    }
}
