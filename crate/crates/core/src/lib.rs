//! Hypothesis tests for discrete time series built on universal codes.
//!
//! Any lossless code (a built-in predictor, a mixture of codes or an external
//! archiver) yields a test whose Type I error never exceeds the requested level:
//! a sample is declared non-conforming when it compresses by more than
//! `log2(1/alpha)` bits below the length its null hypothesis can explain.
//!
//! Four tests are provided ([`hypothesis`]): identity (goodness of fit),
//! serial independence (Markov order), independence of the components of a
//! product alphabet, and homogeneity of several samples, plus a wrapper that
//! applies any of them to continuous data through a sequence of partitions.

pub mod codes;
pub mod entropy;
pub mod error;
pub mod harness;
pub mod hypothesis;
pub mod math;
pub mod sample;
pub mod sources;

pub use codes::{Code, CodeLength, CodeSpec};
pub use error::{Error, Result};
pub use hypothesis::{Decision, KnownSource, TestKind, TestReport};
pub use sample::{Alphabet, ContextCounts, ProductAlphabet, Sample, SampleFormat, Symbol};
