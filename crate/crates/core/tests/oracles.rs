//! Checks against values computed independently of the library.

use num_bigint::BigUint;

use univtest::codes::PredictorModel;
use univtest::sources::{extract_bytes, generate_lcg, ExtractMode, LcgSpec};
use univtest::{Alphabet, Sample, Symbol};

fn lcg_reference(modulus: u64, multiplier: u64, increment: u64, seed: u64, n: usize) -> Vec<u64> {
    let (m, a, c) = (
        BigUint::from(modulus),
        BigUint::from(multiplier),
        BigUint::from(increment),
    );
    let mut x = BigUint::from(seed);
    (0..n)
        .map(|_| {
            x = (&a * &x + &c) % &m;
            x.to_u64_digits().first().copied().unwrap_or(0)
        })
        .collect()
}

#[test]
fn lcg_matches_big_integer_recurrence() {
    let cases = [
        (100_000_001, 23, 0, 47_594_118),
        (1 << 31, (1 << 16) + 3, 0, 1),
        (u64::MAX, u64::MAX - 1, u64::MAX - 2, u64::MAX - 3),
        ((1 << 63) + 29, 6_364_136_223_846_793_005, 1_442_695_040_888_963_407, 42),
    ];
    for (m, a, c, x0) in cases {
        let ours = generate_lcg(LcgSpec::new(m, a, c, x0), 200).unwrap();
        assert_eq!(ours, lcg_reference(m, a, c, x0, 200), "LCG({m}, {a}, {c}, {x0})");
    }
    let first = generate_lcg(LcgSpec::new(100_000_001, 23, 0, 47_594_118), 5).unwrap();
    assert_eq!(first[0], 47_594_118 * 23 % 100_000_001);
}

#[test]
fn extracted_bytes_look_uniform() {
    let spec = LcgSpec::new(100_000_001, 23, 0, 47_594_118);
    let raw = generate_lcg(spec, 100_000).unwrap();
    let bytes = extract_bytes(&raw, spec.modulus, ExtractMode::Scaled).unwrap();
    let mut histogram = [0u64; 256];
    for &b in &bytes.pieces()[0] {
        histogram[b as usize] += 1;
    }
    let n = bytes.total_length() as f64;
    let expected = n / 256.0;
    let chi2: f64 = histogram
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    // 255 degrees of freedom: the 0.999 quantile is about 330.5.
    assert!(chi2 < 330.5, "chi-square {chi2}");
}

/// `K_0` of a binary string with `a` zeros and `b` ones as an exact rational:
/// `(2a−1)!!·(2b−1)!! / (2^(a+b) · (a+b)!)`.
fn kt_rational(a: u64, b: u64) -> (BigUint, BigUint) {
    let double_factorial = |n: u64| -> BigUint {
        (1..=n).filter(|k| k % 2 == 1).map(BigUint::from).product()
    };
    let num = double_factorial(2 * a) * double_factorial(2 * b);
    let factorial: BigUint = (1..=a + b).map(BigUint::from).product();
    let den = (BigUint::from(1u8) << (a + b)) * factorial;
    (num, den)
}

fn log2_big(v: &BigUint) -> f64 {
    let shift = v.bits().saturating_sub(60);
    let top = (v >> shift).to_u64_digits().first().copied().unwrap_or(0) as f64;
    top.log2() + shift as f64
}

fn log2_ratio(num: &BigUint, den: &BigUint) -> f64 {
    log2_big(num) - log2_big(den)
}

#[test]
fn kt_matches_exact_rationals() {
    for (a, b) in [(0, 1), (2, 2), (5, 3), (17, 40), (200, 3), (1000, 999)] {
        let seq: Vec<Symbol> = std::iter::repeat_n(0, a as usize)
            .chain(std::iter::repeat_n(1, b as usize))
            .collect();
        let x = Sample::single(Alphabet::binary(), seq).unwrap();
        let (num, den) = kt_rational(a, b);
        let exact = log2_ratio(&num, &den);
        let ours = PredictorModel::krichevsky(0).log2_measure(&x);
        assert!(
            (ours - exact).abs() <= 1e-9 * exact.abs().max(1.0),
            "a={a} b={b}: {ours} vs {exact}"
        );
    }
}
