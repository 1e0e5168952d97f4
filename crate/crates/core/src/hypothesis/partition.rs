//! Tests for continuous or large-alphabet data through a finite sequence of
//! partitions.
//!
//! Partition `i` (1-based) quantizes the raw values into cells and runs the
//! base test at level `α·ωᵢ`. The overall hypothesis is rejected when any
//! partition rejects, so the total level is at most `α·Σωᵢ < α`.

use std::sync::Arc;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{
    entropy_term, homogeneity_test, identity_test, independence_test, serial_independence_test,
    threshold_bits, Decision, KnownSource, TestKind, TestReport,
};
use crate::codes::{Code, OmegaWeights};
use crate::error::{Error, Result};
use crate::sample::{split_components, Alphabet, ProductAlphabet, Sample, Symbol};

/// Maps raw values to cell indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Quantizer {
    /// Cells `[e₀,e₁), [e₁,e₂), …, [e_{s−1}, e_s]` over the domain `[e₀, e_s]`.
    Intervals { edges: Vec<f64> },
    /// One quantizer per coordinate; the cell is the tuple of component cells.
    Product(Vec<Quantizer>),
}

impl Quantizer {
    pub fn intervals(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 3 {
            return Err(Error::Spec("a partition needs at least two cells".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Spec(
                "partition edges must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self::Intervals { edges })
    }

    /// `cells` equal-width intervals covering `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if cells < 2 || !(lo < hi) {
            return Err(Error::Spec(format!(
                "cannot split [{lo}, {hi}] into {cells} cells"
            )));
        }
        let width = (hi - lo) / cells as f64;
        let mut edges: Vec<f64> = (0..cells).map(|j| lo + j as f64 * width).collect();
        edges.push(hi);
        Self::intervals(edges)
    }

    pub fn product(components: Vec<Quantizer>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::Spec("a product partition needs two or more components".into()));
        }
        if components.iter().any(|q| matches!(q, Quantizer::Product(_))) {
            return Err(Error::Spec("product partitions cannot be nested".into()));
        }
        Ok(Self::Product(components))
    }

    /// Number of raw coordinates per observation.
    pub fn dim(&self) -> usize {
        match self {
            Self::Intervals { .. } => 1,
            Self::Product(parts) => parts.len(),
        }
    }

    pub fn cells(&self) -> usize {
        match self {
            Self::Intervals { edges } => edges.len() - 1,
            Self::Product(parts) => parts.iter().map(Quantizer::cells).product(),
        }
    }

    fn interval_cell(edges: &[f64], value: f64) -> Result<Symbol> {
        let (lo, hi) = (edges[0], edges[edges.len() - 1]);
        if !(lo..=hi).contains(&value) {
            return Err(Error::Input(format!(
                "value {value} lies outside the partition domain [{lo}, {hi}]"
            )));
        }
        let inner = &edges[1..edges.len() - 1];
        Ok(inner.partition_point(|&e| e <= value) as Symbol)
    }

    /// Cell of one observation of `dim()` coordinates.
    pub fn cell(&self, observation: &[f64]) -> Result<Symbol> {
        match self {
            Self::Intervals { edges } => Self::interval_cell(edges, observation[0]),
            Self::Product(parts) => {
                let mut joint = 0u64;
                for (q, &v) in parts.iter().zip(observation) {
                    joint = joint * q.cells() as u64 + q.cell(&[v])? as u64;
                }
                Ok(joint as Symbol)
            }
        }
    }

    /// Quantizes every piece of `series`.
    pub fn quantize(&self, series: &RawSeries) -> Result<Sample> {
        if series.dim != self.dim() {
            return Err(Error::Usage(format!(
                "partition expects {}-dimensional observations, data has {}",
                self.dim(),
                series.dim
            )));
        }
        let pieces = series
            .pieces
            .iter()
            .map(|p| p.chunks(series.dim).map(|obs| self.cell(obs)).collect())
            .collect::<Result<Vec<Vec<Symbol>>>>()?;
        match self {
            Self::Intervals { .. } => Sample::new(Alphabet::new(self.cells())?, pieces),
            Self::Product(parts) => {
                let sizes: Vec<usize> = parts.iter().map(Quantizer::cells).collect();
                Sample::over_product(ProductAlphabet::from_sizes(&sizes)?, pieces)
            }
        }
    }
}

/// The finite, ordered list `Λ₁, Λ₂, …` of partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSequence {
    partitions: Vec<Quantizer>,
}

impl PartitionSequence {
    pub fn new(partitions: Vec<Quantizer>) -> Result<Self> {
        let first = partitions
            .first()
            .ok_or_else(|| Error::Usage("the partition list is empty".into()))?;
        if partitions.iter().any(|q| q.dim() != first.dim()) {
            return Err(Error::Usage(
                "all partitions must quantize the same number of coordinates".into(),
            ));
        }
        Ok(Self { partitions })
    }

    /// Uniform grids of `2, 4, …, 2^depth` cells over `[lo, hi]`.
    pub fn dyadic(lo: f64, hi: f64, depth: u32) -> Result<Self> {
        Self::new(
            (1..=depth)
                .map(|k| Quantizer::uniform(lo, hi, 1 << k))
                .collect::<Result<_>>()?,
        )
    }

    pub fn partitions(&self) -> &[Quantizer] {
        &self.partitions
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }
}

/// Real-valued observations, `dim` coordinates each, split into independent
/// pieces. Each piece is stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub dim: usize,
    pub pieces: Vec<Vec<f64>>,
}

impl RawSeries {
    pub fn new(dim: usize, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 || pieces.iter().any(|p| p.len() % dim != 0) {
            return Err(Error::Input(format!(
                "piece lengths must be multiples of the dimension {dim}"
            )));
        }
        Ok(Self { dim, pieces })
    }

    pub fn scalar(values: Vec<f64>) -> Self {
        Self {
            dim: 1,
            pieces: vec![values],
        }
    }

    /// Reads whitespace- or comma-separated reals, `dim` per line. Blank lines
    /// separate pieces and `#` starts a comment.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let mut pieces = vec![Vec::new()];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                if raw.trim().is_empty() && !pieces.last().unwrap().is_empty() {
                    pieces.push(Vec::new());
                }
                continue;
            }
            let values = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|v| !v.is_empty())
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Input(format!("line {}: {e}", lineno + 1)))?;
            if values.len() != dim {
                return Err(Error::Input(format!(
                    "line {}: expected {dim} values, found {}",
                    lineno + 1,
                    values.len()
                )));
            }
            pieces.last_mut().unwrap().extend(values);
        }
        if pieces.last().is_some_and(Vec::is_empty) {
            pieces.pop();
        }
        Self::new(dim, pieces)
    }

    /// Observations per piece.
    pub fn piece_lengths(&self) -> Vec<usize> {
        self.pieces.iter().map(|p| p.len() / self.dim).collect()
    }
}

/// Cumulative distribution function of a one-dimensional null hypothesis.
pub type NullCdf = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The test applied to each quantized sample, always with `m = 0`.
#[derive(Clone)]
pub enum BaseTest {
    /// Identity to the i.i.d. null with the given CDF.
    Identity { null_cdf: NullCdf },
    Serial,
    /// Independence of coordinates; needs product partitions.
    Independence,
    /// Homogeneity of two or more series.
    Homogeneity,
}

impl BaseTest {
    pub fn kind(&self) -> TestKind {
        match self {
            Self::Identity { .. } => TestKind::Identity,
            Self::Serial => TestKind::Serial,
            Self::Independence => TestKind::Independence,
            Self::Homogeneity => TestKind::Homogeneity,
        }
    }
}

impl std::fmt::Debug for BaseTest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.kind())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionOutcome {
    pub aggregate: TestReport,
    pub per_partition: Vec<TestReport>,
}

fn cell_probabilities(quantizer: &Quantizer, cdf: &NullCdf) -> Result<Vec<f64>> {
    match quantizer {
        Quantizer::Intervals { edges } => Ok(edges
            .windows(2)
            .map(|w| (cdf(w[1]) - cdf(w[0])).max(0.0))
            .collect()),
        Quantizer::Product(_) => Err(Error::Usage(
            "the identity base test takes one-dimensional partitions".into(),
        )),
    }
}

/// Largest value the statistic can take, attained by a zero-length code.
fn statistic_upper_bound(samples: &[Sample], base: &BaseTest, source: Option<&KnownSource>) -> Result<f64> {
    Ok(match base {
        BaseTest::Identity { .. } => -source.expect("identity has a source").log2_prob(&samples[0])?,
        BaseTest::Serial => entropy_term(&samples[0], 0),
        BaseTest::Independence => split_components(&samples[0])?
            .iter()
            .map(|c| entropy_term(c, 0))
            .sum(),
        BaseTest::Homogeneity => entropy_term(&Sample::diamond(samples)?, 0),
    })
}

/// Runs `base` on every partition of `data` and combines the decisions.
///
/// `data` holds one series, or two or more for the homogeneity test.
/// Partitions whose statistic cannot exceed their threshold even for a
/// zero-length code are accepted without running `code`; their reports carry
/// `trivially_accepted` and the bound in place of the statistic.
///
/// The aggregate statistic is `maxᵢ (statᵢ − log₂(1/ωᵢ))` against
/// `log₂(1/α)`, which exceeds the threshold exactly when some partition
/// rejects.
pub fn partition_test(
    data: &[RawSeries],
    partitions: &PartitionSequence,
    base: &BaseTest,
    code: &dyn Code,
    alpha: f64,
) -> Result<PartitionOutcome> {
    let threshold = threshold_bits(alpha)?;
    match base {
        BaseTest::Homogeneity if data.len() < 2 => {
            return Err(Error::Usage(
                "the homogeneity test needs at least two series".into(),
            ))
        }
        BaseTest::Homogeneity => {}
        _ if data.len() != 1 => {
            return Err(Error::Usage(format!(
                "the {:?} test takes exactly one series, got {}",
                base.kind(),
                data.len()
            )))
        }
        _ => {}
    }
    if matches!(base, BaseTest::Independence)
        && partitions
            .partitions()
            .iter()
            .any(|q| !matches!(q, Quantizer::Product(_)))
    {
        return Err(Error::Usage(
            "the independence base test needs product partitions".into(),
        ));
    }

    let weights = OmegaWeights::new(partitions.len());
    let mut reports = Vec::with_capacity(partitions.len());
    for (i, quantizer) in partitions.partitions().iter().enumerate() {
        let omega = weights.get(i + 1);
        let level = alpha * omega;
        let samples = data
            .iter()
            .map(|s| quantizer.quantize(s))
            .collect::<Result<Vec<Sample>>>()?;
        let source = match base {
            BaseTest::Identity { null_cdf } => {
                Some(KnownSource::iid(cell_probabilities(quantizer, null_cdf)?)?)
            }
            _ => None,
        };
        let bound = statistic_upper_bound(&samples, base, source.as_ref())?;
        let level_threshold = threshold_bits(level)?;
        let mut report = if bound <= level_threshold {
            let sample = match base {
                BaseTest::Homogeneity => Sample::diamond(&samples)?,
                _ => samples[0].clone(),
            };
            let mut r = TestReport::new(
                base.kind(),
                bound,
                level_threshold,
                level,
                code.id(),
                0,
                &sample,
            );
            r.extra.insert("trivially_accepted".into(), true.into());
            r
        } else {
            let mut r = match base {
                BaseTest::Identity { .. } => {
                    identity_test(&samples[0], source.as_ref().unwrap(), code, level)?
                }
                BaseTest::Serial => serial_independence_test(&samples[0], 0, code, level)?,
                BaseTest::Independence => independence_test(&samples[0], 0, code, level)?,
                BaseTest::Homogeneity => homogeneity_test(&samples, 0, code, level)?,
            };
            r.extra.insert("trivially_accepted".into(), false.into());
            r
        };
        report.extra.insert("partition".into(), (i + 1).into());
        report.extra.insert("cells".into(), quantizer.cells().into());
        report.extra.insert("omega".into(), omega.into());
        report.extra.insert("upper_bound_bits".into(), bound.into());
        reports.push(report);
    }

    let statistic = reports
        .iter()
        .zip(weights.values())
        .map(|(r, w)| r.statistic_bits + w.log2())
        .fold(f64::NEG_INFINITY, f64::max);
    let rejecting: Vec<usize> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_reject())
        .map(|(i, _)| i + 1)
        .collect();

    let mut extra = Map::new();
    extra.insert("base_test".into(), serde_json::to_value(base.kind()).unwrap());
    extra.insert("partitions".into(), partitions.len().into());
    extra.insert(
        "cells".into(),
        partitions
            .partitions()
            .iter()
            .map(Quantizer::cells)
            .collect::<Vec<_>>()
            .into(),
    );
    extra.insert("level_spent".into(), (alpha * weights.sum()).into());
    extra.insert("residual_weight".into(), weights.residual().into());
    extra.insert("rejecting_partitions".into(), rejecting.clone().into());
    extra.insert(
        "trivially_accepted".into(),
        reports
            .iter()
            .enumerate()
            .filter(|(_, r)| r.extra.get("trivially_accepted") == Some(&Value::Bool(true)))
            .map(|(i, _)| i + 1)
            .collect::<Vec<_>>()
            .into(),
    );

    let aggregate = TestReport {
        test: TestKind::Partition,
        statistic_bits: statistic,
        threshold_bits: threshold,
        alpha,
        decision: if rejecting.is_empty() {
            Decision::Accept
        } else {
            Decision::Reject
        },
        code: code.id(),
        m: 0,
        alphabet_size: partitions
            .partitions()
            .iter()
            .map(Quantizer::cells)
            .max()
            .unwrap_or(0),
        piece_lengths: data.iter().flat_map(RawSeries::piece_lengths).collect(),
        extra,
    };
    Ok(PartitionOutcome {
        aggregate,
        per_partition: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{omega, RCode};
    use rand::Rng;

    fn uniform_cdf() -> NullCdf {
        Arc::new(|x: f64| x.clamp(0.0, 1.0))
    }

    #[test]
    fn interval_cells() {
        let q = Quantizer::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(q.cell(&[0.0]).unwrap(), 0);
        assert_eq!(q.cell(&[0.25]).unwrap(), 1);
        assert_eq!(q.cell(&[0.999]).unwrap(), 3);
        assert_eq!(q.cell(&[1.0]).unwrap(), 3);
        assert!(matches!(q.cell(&[1.5]), Err(Error::Input(_))));
        assert!(q.cell(&[f64::NAN]).is_err());
    }

    #[test]
    fn product_cells_are_mixed_radix() {
        let q = Quantizer::product(vec![
            Quantizer::uniform(0.0, 1.0, 2).unwrap(),
            Quantizer::uniform(0.0, 1.0, 3).unwrap(),
        ])
        .unwrap();
        assert_eq!(q.cells(), 6);
        assert_eq!(q.cell(&[0.7, 0.5]).unwrap(), 4);
    }

    #[test]
    fn bad_partitions() {
        assert!(Quantizer::intervals(vec![0.0, 1.0]).is_err());
        assert!(Quantizer::intervals(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(PartitionSequence::new(vec![]).is_err());
    }

    #[test]
    fn single_partition_is_base_test_at_reduced_level() {
        let mut rng = crate::sources::replicate_rng(1, 0);
        let values: Vec<f64> = (0..256).map(|_| rng.random::<f64>() * 0.5).collect();
        let seq = PartitionSequence::new(vec![Quantizer::uniform(0.0, 1.0, 2).unwrap()]).unwrap();
        let code = RCode::new(4);
        let base = BaseTest::Identity {
            null_cdf: uniform_cdf(),
        };
        let out = partition_test(&[RawSeries::scalar(values.clone())], &seq, &base, &code, 0.05)
            .unwrap();
        let sample = seq.partitions()[0].quantize(&RawSeries::scalar(values)).unwrap();
        let direct =
            identity_test(&sample, &KnownSource::uniform(2).unwrap(), &code, 0.05 * omega(1))
                .unwrap();
        assert_eq!(out.per_partition[0].statistic_bits, direct.statistic_bits);
        assert_eq!(out.per_partition[0].threshold_bits, direct.threshold_bits);
        assert_eq!(out.aggregate.decision, direct.decision);
        assert!(out.aggregate.is_reject());
    }

    #[test]
    fn half_range_data_rejected_by_coarsest_partition() {
        let mut rng = crate::sources::replicate_rng(2, 0);
        let values: Vec<f64> = (0..1024).map(|_| rng.random::<f64>() * 0.5).collect();
        let seq = PartitionSequence::dyadic(0.0, 1.0, 3).unwrap();
        let base = BaseTest::Identity {
            null_cdf: uniform_cdf(),
        };
        let out =
            partition_test(&[RawSeries::scalar(values)], &seq, &base, &RCode::new(8), 0.05).unwrap();
        assert!(out.per_partition[0].is_reject());
        assert!(out.aggregate.is_reject());
        assert!(out.aggregate.statistic_bits > out.aggregate.threshold_bits);
    }

    #[test]
    fn constant_cells_are_trivially_accepted() {
        let data = vec![RawSeries::scalar(vec![0.1; 100])];
        let seq = PartitionSequence::dyadic(0.0, 1.0, 2).unwrap();
        let out = partition_test(&data, &seq, &BaseTest::Serial, &RCode::new(2), 0.05).unwrap();
        for r in &out.per_partition {
            assert_eq!(r.extra["trivially_accepted"], true);
        }
        assert!(!out.aggregate.is_reject());
    }

    #[test]
    fn series_count_checked() {
        let seq = PartitionSequence::dyadic(0.0, 1.0, 1).unwrap();
        let one = vec![RawSeries::scalar(vec![0.1, 0.7])];
        assert!(partition_test(&one, &seq, &BaseTest::Homogeneity, &RCode::new(1), 0.05).is_err());
        assert!(partition_test(&one, &seq, &BaseTest::Independence, &RCode::new(1), 0.05).is_err());
    }
}
