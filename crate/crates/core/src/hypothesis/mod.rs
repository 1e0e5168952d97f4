//! The four code-based hypothesis tests and the partition wrapper.
//!
//! Every test compares a statistic in bits against `log₂(1/α)` and rejects
//! the null hypothesis only when the statistic is strictly larger.

mod partition;

use serde::{Serialize, Serializer};
use serde_json::{Map, Value};

use crate::codes::Code;
use crate::entropy::empirical_entropy_bits;
use crate::error::{Error, Result};
use crate::sample::{count_contexts, split_components, Sample};
use crate::sources::MarkovSpec;

pub use partition::{
    partition_test, BaseTest, NullCdf, PartitionOutcome, PartitionSequence, Quantizer, RawSeries,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Identity,
    Serial,
    Independence,
    Homogeneity,
    Partition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Decision {
    #[serde(rename = "accept_H0")]
    Accept,
    #[serde(rename = "reject_H0")]
    Reject,
}

impl Decision {
    /// Rejects only on strict excess; equality accepts.
    pub fn from_statistic(statistic_bits: f64, threshold_bits: f64) -> Self {
        if statistic_bits > threshold_bits {
            Self::Reject
        } else {
            Self::Accept
        }
    }

    pub fn is_reject(self) -> bool {
        self == Self::Reject
    }
}

/// Writes non-finite reals as the strings `"inf"`, `"-inf"` and `"nan"`,
/// which plain JSON numbers cannot represent.
pub(crate) fn serialize_real<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if x.is_nan() {
        s.serialize_str("nan")
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub test: TestKind,
    #[serde(serialize_with = "serialize_real")]
    pub statistic_bits: f64,
    #[serde(serialize_with = "serialize_real")]
    pub threshold_bits: f64,
    pub alpha: f64,
    pub decision: Decision,
    pub code: String,
    pub m: usize,
    pub alphabet_size: usize,
    pub piece_lengths: Vec<usize>,
    pub extra: Map<String, Value>,
}

impl TestReport {
    fn new(
        test: TestKind,
        statistic_bits: f64,
        threshold_bits: f64,
        alpha: f64,
        code: String,
        m: usize,
        sample: &Sample,
    ) -> Self {
        Self {
            test,
            statistic_bits,
            threshold_bits,
            alpha,
            decision: Decision::from_statistic(statistic_bits, threshold_bits),
            code,
            m,
            alphabet_size: sample.alphabet().size(),
            piece_lengths: sample.piece_lengths(),
            extra: Map::new(),
        }
    }

    pub fn is_reject(&self) -> bool {
        self.decision.is_reject()
    }

    /// Warnings attached by the test, if any.
    pub fn warnings(&self) -> Vec<String> {
        self.extra
            .get("warnings")
            .and_then(Value::as_array)
            .map(|w| w.iter().filter_map(|v| v.as_str().map(String::from)).collect())
            .unwrap_or_default()
    }

    fn warn(&mut self, message: String) {
        self.extra
            .entry("warnings")
            .or_insert_with(|| Value::Array(Vec::new()))
            .as_array_mut()
            .expect("warnings is an array")
            .push(Value::String(message));
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// `log₂(1/α)`.
pub fn threshold_bits(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(-alpha.log2())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_pieces_longer_than(sample: &Sample, order: usize) -> Result<()> {
    if sample.num_pieces() == 0 {
        return Err(Error::Domain("sample has no pieces".into()));
    }
    match sample.pieces().iter().position(|p| p.len() <= order) {
        Some(i) => Err(Error::Domain(format!(
            "piece {i} has length {} but order {order} needs pieces longer than {order}",
            sample.pieces()[i].len()
        ))),
        None => Ok(()),
    }
}

/// `(t − m·l)·h*_m(x̄)`, the empirical entropy term of a sample.
fn entropy_term(sample: &Sample, order: usize) -> f64 {
    let bits = empirical_entropy_bits(&count_contexts(sample, order));
    // Guard the tiny negative values rounding can produce for constant data.
    bits.max(0.0)
}

/// A fully specified source of finite order `s` over an alphabet of size
/// `|A|`.
///
/// `initial` holds the distribution of the first `s` symbols over the
/// `|A|^s` contexts and `transition` the row-major next-symbol rows, both
/// indexed in mixed radix with the first symbol most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownSource {
    alphabet_size: usize,
    order: usize,
    initial: Vec<f64>,
    transition: Vec<f64>,
}

impl KnownSource {
    pub fn new(
        alphabet_size: usize,
        order: usize,
        initial: Vec<f64>,
        transition: Vec<f64>,
    ) -> Result<Self> {
        let contexts = alphabet_size
            .checked_pow(order as u32)
            .ok_or_else(|| Error::Spec(format!("order {order} is too large")))?;
        if alphabet_size < 2 {
            return Err(Error::Spec("a source needs at least two symbols".into()));
        }
        if initial.len() != contexts || transition.len() != contexts * alphabet_size {
            return Err(Error::Spec(format!(
                "order-{order} source over {alphabet_size} symbols needs {contexts} initial and {} transition entries",
                contexts * alphabet_size
            )));
        }
        let rows = std::iter::once(initial.as_slice()).chain(transition.chunks(alphabet_size));
        for row in rows {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Spec(
                    "source distributions must be probability vectors".into(),
                ));
            }
        }
        Ok(Self {
            alphabet_size,
            order,
            initial,
            transition,
        })
    }

    /// The uniform i.i.d. source on `|A|` symbols.
    pub fn uniform(alphabet_size: usize) -> Result<Self> {
        Self::iid(vec![1.0 / alphabet_size as f64; alphabet_size])
    }

    pub fn iid(probabilities: Vec<f64>) -> Result<Self> {
        Self::new(probabilities.len(), 0, vec![1.0], probabilities)
    }

    /// A source following `spec`'s transitions and resolved initial distribution.
    pub fn markov(spec: &MarkovSpec) -> Result<Self> {
        Self::new(
            spec.alphabet.size(),
            spec.order,
            spec.initial_distribution(),
            spec.transition.clone(),
        )
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `log₂ π(x¹)·…·π(xˡ)`; pieces are independent.
    ///
    /// A piece shorter than the order is priced by the marginal of its prefix.
    /// Returns `−∞` when the sample is impossible under the source.
    pub fn log2_prob(&self, sample: &Sample) -> Result<f64> {
        if sample.alphabet().size() != self.alphabet_size {
            return Err(Error::Usage(format!(
                "sample alphabet has {} symbols but the source has {}",
                sample.alphabet().size(),
                self.alphabet_size
            )));
        }
        let size = self.alphabet_size;
        let contexts = self.initial.len();
        let mut total = 0.0;
        for piece in sample.pieces() {
            let head = piece.len().min(self.order);
            let mut context = 0usize;
            for &a in &piece[..head] {
                context = context * size + a as usize;
            }
            // The contexts extending the prefix form one contiguous index range.
            let span = size.pow((self.order - head) as u32);
            let p: f64 = self.initial[context * span..(context + 1) * span].iter().sum();
            total += p.log2();
            for &a in &piece[head..] {
                total += self.transition[context * size + a as usize].log2();
                context = (context * size + a as usize) % contexts;
            }
            if total == f64::NEG_INFINITY {
                break;
            }
        }
        Ok(total)
    }
}

/// Goodness of fit to a fully known source: `−log₂π(x̄) − |φ(x̄)|`.
pub fn identity_test(
    sample: &Sample,
    source: &KnownSource,
    code: &dyn Code,
    alpha: f64,
) -> Result<TestReport> {
    let threshold = threshold_bits(alpha)?;
    let log2_pi = source.log2_prob(sample)?;
    let mut extra = Map::new();
    let statistic = if log2_pi == f64::NEG_INFINITY {
        extra.insert(
            "note".into(),
            "sample has probability 0 under the source".into(),
        );
        f64::INFINITY
    } else {
        let bits = code.code_length(sample)?.bits;
        extra.insert("code_length_bits".into(), bits.into());
        extra.insert("source_bits".into(), (-log2_pi).into());
        -log2_pi - bits
    };
    let mut report = TestReport::new(
        TestKind::Identity,
        statistic,
        threshold,
        alpha,
        code.id(),
        source.order(),
        sample,
    );
    report.extra = extra;
    Ok(report)
}

/// Whether the sample is generated by a Markov source of order at most `m`:
/// `(t − m·l)·h*_m(x̄) − |φ(x̄)|`.
pub fn serial_independence_test(
    sample: &Sample,
    order: usize,
    code: &dyn Code,
    alpha: f64,
) -> Result<TestReport> {
    let threshold = threshold_bits(alpha)?;
    check_pieces_longer_than(sample, order)?;
    let entropy = entropy_term(sample, order);
    let bits = code.code_length(sample)?.bits;
    let mut report = TestReport::new(
        TestKind::Serial,
        entropy - bits,
        threshold,
        alpha,
        code.id(),
        order,
        sample,
    );
    report.extra.insert("entropy_bits".into(), entropy.into());
    report.extra.insert("code_length_bits".into(), bits.into());
    Ok(report)
}

/// Independence of the components of a product-alphabet sample:
/// `Σ_k (t − m·l)·h*_m(x̄^(k)) − |φ(x̄)|`, with `φ` pricing the joint sample.
pub fn independence_test(
    sample: &Sample,
    order: usize,
    code: &dyn Code,
    alpha: f64,
) -> Result<TestReport> {
    let threshold = threshold_bits(alpha)?;
    let components = split_components(sample).map_err(|_| {
        Error::Usage("the independence test needs a sample over a product alphabet".into())
    })?;
    check_pieces_longer_than(sample, order)?;
    let entropies: Vec<f64> = components.iter().map(|c| entropy_term(c, order)).collect();
    let entropy: f64 = entropies.iter().sum();
    let bits = code.code_length(sample)?.bits;
    let mut report = TestReport::new(
        TestKind::Independence,
        entropy - bits,
        threshold,
        alpha,
        code.id(),
        order,
        sample,
    );
    report
        .extra
        .insert("component_entropy_bits".into(), entropies.into());
    report.extra.insert("code_length_bits".into(), bits.into());
    Ok(report)
}

/// Below this share of the pooled length the power guarantee of the
/// homogeneity test is weak.
pub const HOMOGENEITY_MIN_SHARE: f64 = 0.01;

/// Whether `r ≥ 2` samples come from one source:
/// `(t − m·r)·h*_m(x¹◇…◇x^r) − Σᵢ |φ(xⁱ)|`.
pub fn homogeneity_test(
    samples: &[Sample],
    order: usize,
    code: &dyn Code,
    alpha: f64,
) -> Result<TestReport> {
    let threshold = threshold_bits(alpha)?;
    if samples.len() < 2 {
        return Err(Error::Usage(format!(
            "the homogeneity test needs at least two samples, got {}",
            samples.len()
        )));
    }
    for s in samples {
        check_pieces_longer_than(s, order)?;
    }
    let pooled = Sample::diamond(samples)?;
    let entropy = entropy_term(&pooled, order);
    let lengths = samples
        .iter()
        .map(|s| code.code_length(s).map(|l| l.bits))
        .collect::<Result<Vec<f64>>>()?;
    let bits: f64 = lengths.iter().sum();
    let mut report = TestReport::new(
        TestKind::Homogeneity,
        entropy - bits,
        threshold,
        alpha,
        code.id(),
        order,
        &pooled,
    );
    report.extra.insert("entropy_bits".into(), entropy.into());
    report
        .extra
        .insert("code_length_bits".into(), lengths.into());
    report.extra.insert(
        "sample_lengths".into(),
        samples
            .iter()
            .map(|s| s.total_length())
            .collect::<Vec<_>>()
            .into(),
    );
    let t = pooled.total_length() as f64;
    let share = samples
        .iter()
        .map(|s| s.total_length() as f64 / t)
        .fold(f64::INFINITY, f64::min);
    if share < HOMOGENEITY_MIN_SHARE {
        report.warn(format!(
            "smallest sample holds {:.4} of the pooled length; power against alternatives is weak",
            share
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{PredictorModel, RCode};
    use crate::sample::{Alphabet, ProductAlphabet, Symbol};

    fn bin(s: &str) -> Sample {
        Sample::single(
            Alphabet::binary(),
            s.bytes().map(|b| (b - b'0') as Symbol).collect(),
        )
        .unwrap()
    }

    /// Prices every sample at exactly `bits`.
    struct Fixed(f64);

    impl Code for Fixed {
        fn id(&self) -> String {
            "fixed".into()
        }

        fn code_length(&self, _: &Sample) -> Result<crate::codes::CodeLength> {
            Ok(crate::codes::CodeLength {
                bits: self.0,
                source: self.id(),
            })
        }
    }

    #[test]
    fn identity_against_uniform_is_t_minus_length() {
        let x = bin("0000000000000000");
        let code = RCode::new(4);
        let r = identity_test(&x, &KnownSource::uniform(2).unwrap(), &code, 0.01).unwrap();
        let len = code.code_length(&x).unwrap().bits;
        assert!((r.statistic_bits - (16.0 - len)).abs() < 1e-12);
        assert!((r.threshold_bits - 100f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn equal_pricing_gives_zero() {
        let x = bin("0110");
        let r = identity_test(&x, &KnownSource::uniform(2).unwrap(), &Fixed(4.0), 0.5).unwrap();
        assert_eq!(r.statistic_bits, 0.0);
        assert_eq!(r.decision, Decision::Accept);
    }

    #[test]
    fn equality_accepts() {
        let x = bin("0110");
        // statistic = 4 - 3 = 1 = log2(1/0.5)
        let r = identity_test(&x, &KnownSource::uniform(2).unwrap(), &Fixed(3.0), 0.5).unwrap();
        assert_eq!(r.statistic_bits, r.threshold_bits);
        assert_eq!(r.decision, Decision::Accept);
        let r = identity_test(&x, &KnownSource::uniform(2).unwrap(), &Fixed(2.9), 0.5).unwrap();
        assert_eq!(r.decision, Decision::Reject);
    }

    #[test]
    fn impossible_sample_rejects_with_infinite_statistic() {
        let source = KnownSource::iid(vec![1.0, 0.0]).unwrap();
        let r = identity_test(&bin("0001"), &source, &Fixed(1.0), 0.01).unwrap();
        assert_eq!(r.statistic_bits, f64::INFINITY);
        assert!(r.is_reject());
        assert_eq!(r.to_json()["statistic_bits"], "inf");
    }

    #[test]
    fn markov_source_prices_prefixes() {
        let source = KnownSource::new(2, 2, vec![0.1, 0.2, 0.3, 0.4], vec![0.5; 8]).unwrap();
        let short = bin("1");
        assert!((source.log2_prob(&short).unwrap() - 0.7f64.log2()).abs() < 1e-12);
        let long = bin("1011");
        let expected = 0.3f64.log2() - 2.0;
        assert!((source.log2_prob(&long).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn alpha_validated() {
        let x = bin("0110");
        for alpha in [0.0, 1.0, -0.5, 2.0, f64::NAN] {
            let err = serial_independence_test(&x, 0, &Fixed(1.0), alpha).unwrap_err();
            assert!(matches!(err, Error::Usage(_)));
        }
    }

    #[test]
    fn constant_sequence_accepts_serial() {
        let x = bin("00000000000000000000");
        let r = serial_independence_test(&x, 0, &RCode::default(), 0.01).unwrap();
        assert!(r.statistic_bits <= 0.0);
        assert_eq!(r.decision, Decision::Accept);
    }

    #[test]
    fn short_pieces_are_domain_errors() {
        let x = Sample::new(Alphabet::binary(), vec![vec![0, 1, 1], vec![1]]).unwrap();
        let err = serial_independence_test(&x, 1, &Fixed(1.0), 0.01).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn independence_requires_product() {
        let err = independence_test(&bin("0101"), 0, &Fixed(1.0), 0.01).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn coupled_components_reject() {
        let product = ProductAlphabet::from_sizes(&[2, 2]).unwrap();
        let mut rng = crate::sources::replicate_rng(5, 0);
        let bits: Vec<Symbol> = (0..4096)
            .map(|_| rand::Rng::random_range(&mut rng, 0..2u32))
            .collect();
        let col = Sample::single(Alphabet::binary(), bits).unwrap();
        let joint = Sample::from_components(product, &[col.clone(), col]).unwrap();
        let r = independence_test(&joint, 0, &RCode::new(8), 0.01).unwrap();
        assert!(r.statistic_bits > 3000.0, "{}", r.statistic_bits);
        assert!(r.is_reject());
    }

    #[test]
    fn homogeneity_needs_two_samples() {
        let err = homogeneity_test(&[bin("0101")], 0, &Fixed(1.0), 0.01).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        let zeros = bin("0000000000");
        let r = homogeneity_test(&[zeros.clone(), zeros], 0, &PredictorModel::krichevsky(0), 0.01)
            .unwrap();
        assert!(r.statistic_bits <= 0.0);
        assert!(!r.is_reject());
    }

    #[test]
    fn homogeneity_warns_on_tiny_sample() {
        let big = Sample::single(Alphabet::binary(), vec![0; 2000]).unwrap();
        let r = homogeneity_test(&[big, bin("01")], 0, &Fixed(1.0), 0.01).unwrap();
        assert_eq!(r.warnings().len(), 1);
    }

    #[test]
    fn report_json_has_exact_keys() {
        let r = serial_independence_test(&bin("0110100110"), 1, &RCode::new(2), 0.05).unwrap();
        let json = r.to_json();
        let mut keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            [
                "alpha",
                "alphabet_size",
                "code",
                "decision",
                "extra",
                "m",
                "piece_lengths",
                "statistic_bits",
                "test",
                "threshold_bits"
            ]
        );
        assert_eq!(json["test"], "serial");
        assert_eq!(json["code"], "r:2");
    }
}
