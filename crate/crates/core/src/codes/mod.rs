//! Code-length providers.
//!
//! Every code here satisfies the Kraft inequality, which is all the tests need:
//! built-in codes report the idealized length `−log₂ μ(x̄)` of an exact
//! (sub-)probability measure, and external compressors report the size of
//! their actual output.

mod external;
mod mixture;
mod predictor;
mod spec;

use serde::Serialize;

use crate::error::Result;
use crate::sample::Sample;

pub use external::{ExternalCompressor, Serialization};
pub use mixture::{omega, MixMode, MixtureCode, OmegaWeights, RCode};
pub use predictor::{
    krichevsky_conditional, laplace_conditional, PredictorKind, PredictorModel,
};
pub use spec::CodeSpec;

/// Length in bits of one encoded sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodeLength {
    pub bits: f64,
    pub source: String,
}

/// Anything that can price a sample in bits.
///
/// Multi-piece samples must be priced as a whole; implementations decide how
/// pieces are combined, but the result must still satisfy the Kraft inequality.
pub trait Code: Send + Sync {
    fn id(&self) -> String;

    fn code_length(&self, sample: &Sample) -> Result<CodeLength>;
}

impl<C: Code + ?Sized> Code for Box<C> {
    fn id(&self) -> String {
        (**self).id()
    }

    fn code_length(&self, sample: &Sample) -> Result<CodeLength> {
        (**self).code_length(sample)
    }
}

impl<C: Code + ?Sized> Code for &C {
    fn id(&self) -> String {
        (**self).id()
    }

    fn code_length(&self, sample: &Sample) -> Result<CodeLength> {
        (**self).code_length(sample)
    }
}
