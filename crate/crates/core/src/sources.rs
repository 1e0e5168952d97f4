//! Data generators: finite-order Markov chains, the parity chain, and linear
//! congruential generators with 8-bit extraction.
//!
//! All randomness comes from ChaCha8 streams. [`replicate_rng`] derives the
//! generator for replicate `k` of a run from `(master_seed, k)` alone, so
//! parallel and serial runs draw identical samples.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sample::{Alphabet, Sample, Symbol};

/// Generator for stream `stream` under `master_seed`.
pub fn replicate_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// How the first `s` symbols of an order-`s` chain are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDistribution {
    /// Stationary distribution of the chain over length-`s` contexts.
    Stationary,
    Uniform,
    /// Explicit distribution over the `|A|^s` contexts (mixed radix, first symbol most significant).
    Explicit(Vec<f64>),
}

/// An order-`s` Markov chain over a finite alphabet.
///
/// `transition` is row-major: row `c` is the next-symbol distribution after
/// context index `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSpec {
    pub order: usize,
    pub alphabet: Alphabet,
    pub transition: Vec<f64>,
    pub initial: InitialDistribution,
    pub seed: u64,
}

const ROW_TOLERANCE: f64 = 1e-9;

impl MarkovSpec {
    pub fn new(
        order: usize,
        alphabet: Alphabet,
        transition: Vec<f64>,
        initial: InitialDistribution,
        seed: u64,
    ) -> Result<Self> {
        let size = alphabet.size();
        let contexts = context_count(size, order)?;
        if transition.len() != contexts * size {
            return Err(Error::Spec(format!(
                "order-{order} chain over {size} symbols needs {} transition entries, got {}",
                contexts * size,
                transition.len()
            )));
        }
        for (c, row) in transition.chunks(size).enumerate() {
            check_distribution(row, &format!("transition row {c}"))?;
        }
        if let InitialDistribution::Explicit(p) = &initial {
            if p.len() != contexts {
                return Err(Error::Spec(format!(
                    "initial distribution needs {contexts} entries, got {}",
                    p.len()
                )));
            }
            check_distribution(p, "initial distribution")?;
        }
        Ok(Self {
            order,
            alphabet,
            transition,
            initial,
            seed,
        })
    }

    /// i.i.d. source with the given symbol probabilities.
    pub fn iid(probabilities: Vec<f64>, seed: u64) -> Result<Self> {
        let alphabet = Alphabet::new(probabilities.len())?;
        Self::new(0, alphabet, probabilities, InitialDistribution::Uniform, seed)
    }

    /// Binary first-order chain given `p(0|0)` and `p(0|1)`, started from
    /// its stationary distribution.
    pub fn binary_first_order(p0_given_0: f64, p0_given_1: f64, seed: u64) -> Result<Self> {
        Self::new(
            1,
            Alphabet::binary(),
            vec![p0_given_0, 1.0 - p0_given_0, p0_given_1, 1.0 - p0_given_1],
            InitialDistribution::Stationary,
            seed,
        )
    }

    pub fn num_contexts(&self) -> usize {
        self.alphabet.size().pow(self.order as u32)
    }

    pub fn row(&self, context: usize) -> &[f64] {
        let size = self.alphabet.size();
        &self.transition[context * size..(context + 1) * size]
    }

    /// Resolved distribution of the first `order` symbols.
    pub fn initial_distribution(&self) -> Vec<f64> {
        let contexts = self.num_contexts();
        match &self.initial {
            InitialDistribution::Explicit(p) => p.clone(),
            InitialDistribution::Uniform => vec![1.0 / contexts as f64; contexts],
            InitialDistribution::Stationary => {
                stationary_contexts(self.order, self.alphabet.size(), &self.transition)
            }
        }
    }

    /// Draws one piece of length `length` from `rng`.
    pub fn sample_with<R: Rng + ?Sized>(&self, length: usize, rng: &mut R) -> Vec<Symbol> {
        let size = self.alphabet.size();
        let contexts = self.num_contexts();
        let mut out = Vec::with_capacity(length);
        let start = draw(&self.initial_distribution(), rng);
        let mut head: Vec<Symbol> = vec![0; self.order];
        let mut rest = start;
        for slot in head.iter_mut().rev() {
            *slot = (rest % size) as Symbol;
            rest /= size;
        }
        out.extend(head.iter().take(length));
        let mut context = start;
        while out.len() < length {
            let a = draw(self.row(context), rng);
            out.push(a as Symbol);
            context = (context * size + a) % contexts;
        }
        out
    }
}

fn context_count(size: usize, order: usize) -> Result<usize> {
    size.checked_pow(order as u32)
        .filter(|&c| c <= 1 << 24)
        .ok_or_else(|| Error::Spec(format!("order {order} over {size} symbols is too large")))
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Spec(format!("{what} has entries outside [0, 1]")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::Spec(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

fn draw<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // Rounding left a sliver above the last cumulative sum.
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(0)
}

/// Stationary distribution of an order-`s` chain over its `|A|^s` contexts,
/// by power iteration on the lazy chain `(I + P)/2`.
pub fn stationary_contexts(order: usize, size: usize, transition: &[f64]) -> Vec<f64> {
    let contexts = size.pow(order as u32);
    if contexts == 1 {
        return vec![1.0];
    }
    let mut pi = vec![1.0 / contexts as f64; contexts];
    let mut next = vec![0.0; contexts];
    for _ in 0..1_000_000 {
        next.iter_mut().zip(&pi).for_each(|(n, p)| *n = 0.5 * p);
        for (c, &mass) in pi.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let row = &transition[c * size..(c + 1) * size];
            for (a, &p) in row.iter().enumerate() {
                next[(c * size + a) % contexts] += 0.5 * mass * p;
            }
        }
        let delta: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if delta < 1e-15 {
            break;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter().map(|p| p / total).collect()
}

/// One piece of length `length` from `spec`, seeded by `spec.seed`.
pub fn generate_markov(spec: &MarkovSpec, length: usize) -> Result<Sample> {
    if length == 0 {
        return Err(Error::Usage("sample length must be positive".into()));
    }
    let mut rng = replicate_rng(spec.seed, 0);
    Sample::single(spec.alphabet.clone(), spec.sample_with(length, &mut rng))
}

/// Window of the parity chain: the next symbol depends on `x_{i-6} … x_i`.
pub const PARITY_WINDOW: usize = 7;

/// Draws a piece from the parity chain with `rng`.
///
/// The first seven symbols are fair coin flips. Afterwards the next symbol is
/// `0` with probability `p0` when the last seven symbols have even parity,
/// and with probability 1/2 otherwise.
pub fn parity_markov_with<R: Rng + ?Sized>(p0: f64, length: usize, rng: &mut R) -> Vec<Symbol> {
    let mut out: Vec<Symbol> = Vec::with_capacity(length);
    let mut parity = 0u32;
    for i in 0..length {
        let p_zero = if i < PARITY_WINDOW || parity == 1 {
            0.5
        } else {
            p0
        };
        let bit = if rng.random::<f64>() < p_zero { 0 } else { 1 };
        out.push(bit);
        parity ^= bit;
        if i >= PARITY_WINDOW {
            parity ^= out[i - PARITY_WINDOW];
        }
    }
    out
}

pub fn generate_parity_markov(p0: f64, length: usize, seed: u64) -> Result<Sample> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::Usage(format!("p0 must lie in (0, 1), got {p0}")));
    }
    if length <= PARITY_WINDOW {
        return Err(Error::Usage(format!(
            "parity chain needs more than {PARITY_WINDOW} symbols"
        )));
    }
    let mut rng = replicate_rng(seed, 0);
    Sample::single(Alphabet::binary(), parity_markov_with(p0, length, &mut rng))
}

/// `LCG(M, A, C, X₀)`: `X_{n+1} = (A·X_n + C) mod M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LcgSpec {
    pub modulus: u64,
    pub multiplier: u64,
    pub increment: u64,
    pub seed: u64,
}

impl LcgSpec {
    pub fn new(modulus: u64, multiplier: u64, increment: u64, seed: u64) -> Self {
        Self {
            modulus,
            multiplier,
            increment,
            seed,
        }
    }
}

/// Iterator over `X_1, X_2, …`.
#[derive(Debug, Clone)]
pub struct Lcg {
    spec: LcgSpec,
    state: u64,
}

impl Lcg {
    pub fn new(spec: LcgSpec) -> Result<Self> {
        if spec.modulus < 2 {
            return Err(Error::Spec(format!(
                "LCG modulus must be at least 2, got {}",
                spec.modulus
            )));
        }
        Ok(Self {
            spec,
            state: spec.seed,
        })
    }
}

impl Iterator for Lcg {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        // 128-bit intermediates make the recurrence exact for any 64-bit parameters.
        let next = (self.spec.multiplier as u128 * self.state as u128 + self.spec.increment as u128)
            % self.spec.modulus as u128;
        self.state = next as u64;
        Some(self.state)
    }
}

pub fn generate_lcg(spec: LcgSpec, count: usize) -> Result<Vec<u64>> {
    Ok(Lcg::new(spec)?.take(count).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtractMode {
    /// `⌊X/μ⌋` with `μ = ⌊M/256⌋`.
    #[default]
    Scaled,
    /// `X mod 256`.
    Mod256,
}

impl FromStr for ExtractMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaled" => Ok(Self::Scaled),
            "mod256" => Ok(Self::Mod256),
            other => Err(Error::Usage(format!(
                "unknown extraction mode `{other}` (expected scaled or mod256)"
            ))),
        }
    }
}

impl fmt::Display for ExtractMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Scaled => "scaled",
            Self::Mod256 => "mod256",
        })
    }
}

/// Turns generator outputs into bytes. Values in `[256μ, M)` are dropped in
/// both modes so every emitted byte is equally likely under a uniform `X`.
pub fn extract_bytes(raw: &[u64], modulus: u64, mode: ExtractMode) -> Result<Sample> {
    if modulus < 256 {
        return Err(Error::Spec(format!(
            "byte extraction needs a modulus of at least 256, got {modulus}"
        )));
    }
    let mu = modulus / 256;
    let limit = 256 * mu;
    let bytes = raw
        .iter()
        .filter(|&&x| x < limit)
        .map(|&x| match mode {
            ExtractMode::Scaled => (x / mu) as Symbol,
            ExtractMode::Mod256 => (x % 256) as Symbol,
        })
        .collect();
    Sample::single(Alphabet::bytes(), bytes)
}

/// Parses a chain description:
///
/// ```text
/// # order-1 binary chain
/// alphabet = 2
/// order = 1
/// row.0 = 0.8, 0.2        # next-symbol distribution after context index 0
/// row.1 = 0.5, 0.5
/// initial = stationary    # stationary | uniform | p_0, p_1, ...
/// seed = 42
/// ```
///
/// Context indices are mixed-radix, first symbol most significant. Rows that
/// are not listed default to uniform.
pub fn parse_markov_spec(text: &str) -> Result<MarkovSpec> {
    let mut alphabet = None;
    let mut order = 0usize;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut initial = InitialDistribution::Stationary;
    let mut seed = 0u64;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Spec(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| Error::Spec(format!("line {}: invalid {what} `{value}`", lineno + 1));
        match key {
            "alphabet" => alphabet = Some(value.parse::<usize>().map_err(|_| bad("alphabet"))?),
            "order" => order = value.parse().map_err(|_| bad("order"))?,
            "seed" => seed = value.parse().map_err(|_| bad("seed"))?,
            "initial" => {
                initial = match value {
                    "stationary" => InitialDistribution::Stationary,
                    "uniform" => InitialDistribution::Uniform,
                    _ => InitialDistribution::Explicit(
                        parse_floats(value).ok_or_else(|| bad("initial distribution"))?,
                    ),
                }
            }
            _ => match key.strip_prefix("row.") {
                Some(index) => {
                    let index = index.parse().map_err(|_| bad("row index"))?;
                    rows.push((index, parse_floats(value).ok_or_else(|| bad("row"))?));
                }
                None => {
                    return Err(Error::Spec(format!(
                        "line {}: unknown key `{key}`",
                        lineno + 1
                    )))
                }
            },
        }
    }
    let size = match alphabet {
        Some(size) => size,
        None => rows
            .first()
            .map(|(_, r)| r.len())
            .ok_or_else(|| Error::Spec("missing `alphabet`".into()))?,
    };
    let alphabet = Alphabet::new(size)?;
    let contexts = context_count(size, order)?;
    let mut transition = vec![1.0 / size as f64; contexts * size];
    for (index, row) in rows {
        if index >= contexts || row.len() != size {
            return Err(Error::Spec(format!(
                "row.{index} must have {size} entries and index below {contexts}"
            )));
        }
        transition[index * size..(index + 1) * size].copy_from_slice(&row);
    }
    MarkovSpec::new(order, alphabet, transition, initial, seed)
}

fn parse_floats(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|v| v.trim().parse().ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::count_contexts;

    #[test]
    fn degenerate_chain_is_constant() {
        let spec = MarkovSpec::new(
            1,
            Alphabet::binary(),
            vec![1.0, 0.0, 1.0, 0.0],
            InitialDistribution::Explicit(vec![1.0, 0.0]),
            3,
        )
        .unwrap();
        let s = generate_markov(&spec, 500).unwrap();
        assert!(s.pieces()[0].iter().all(|&x| x == 0));
    }

    #[test]
    fn malformed_rows_rejected() {
        let err = MarkovSpec::new(
            1,
            Alphabet::binary(),
            vec![0.7, 0.2, 0.5, 0.5],
            InitialDistribution::Stationary,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Spec(_)));
        assert!(MarkovSpec::iid(vec![0.5, 0.5, 0.5], 0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = MarkovSpec::binary_first_order(0.8, 0.5, 99).unwrap();
        assert_eq!(
            generate_markov(&spec, 1000).unwrap(),
            generate_markov(&spec, 1000).unwrap()
        );
        let other = MarkovSpec { seed: 100, ..spec.clone() };
        assert_ne!(
            generate_markov(&spec, 1000).unwrap(),
            generate_markov(&other, 1000).unwrap()
        );
    }

    #[test]
    fn stationary_of_two_state_chain() {
        // p(0|0)=0.8, p(0|1)=0.5 → π0 = 0.5 / (0.2 + 0.5)
        let pi = stationary_contexts(1, 2, &[0.8, 0.2, 0.5, 0.5]);
        assert!((pi[0] - 5.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn chain_frequencies_converge() {
        let spec = MarkovSpec::binary_first_order(0.8, 0.5, 7).unwrap();
        let s = generate_markov(&spec, 1_000_000).unwrap();
        let counts = count_contexts(&s, 1);
        let freq = counts.word_count(&[0, 0]) as f64 / counts.context_total(&[0]) as f64;
        assert!((freq - 0.8).abs() < 0.01, "{freq}");
    }

    #[test]
    fn parity_chain_frequency() {
        let s = generate_parity_markov(0.8, 1_000_000, 11).unwrap();
        let x = &s.pieces()[0];
        let (mut zeros, mut total) = (0u64, 0u64);
        for i in PARITY_WINDOW..x.len() {
            let parity = x[i - PARITY_WINDOW..i].iter().sum::<u32>() % 2;
            if parity == 0 {
                total += 1;
                zeros += (x[i] == 0) as u64;
            }
        }
        let freq = zeros as f64 / total as f64;
        assert!((freq - 0.8).abs() < 0.01, "{freq}");
    }

    #[test]
    fn parity_chain_rejects_bad_arguments() {
        assert!(generate_parity_markov(1.0, 100, 0).is_err());
        assert!(generate_parity_markov(0.5, 7, 0).is_err());
    }

    #[test]
    fn lcg_first_value() {
        let x = generate_lcg(LcgSpec::new(1 << 31, (1 << 16) + 3, 0, 1), 3).unwrap();
        assert_eq!(x[0], 65539);
        assert_eq!(x[1], (65539u64 * 65539) % (1 << 31));
    }

    #[test]
    fn lcg_identity_multiplier_is_constant() {
        let x = generate_lcg(LcgSpec::new(1000, 1, 0, 417), 10).unwrap();
        assert!(x.iter().all(|&v| v == 417));
        assert!(generate_lcg(LcgSpec::new(1, 1, 0, 0), 1).is_err());
    }

    #[test]
    fn extraction_drop_rule() {
        let modulus = 1000; // μ = 3, values ≥ 768 are dropped
        let raw: Vec<u64> = vec![0, 2, 3, 767, 768, 999];
        let s = extract_bytes(&raw, modulus, ExtractMode::Scaled).unwrap();
        assert_eq!(s.pieces()[0], vec![0, 0, 1, 255]);
        let s = extract_bytes(&raw, modulus, ExtractMode::Mod256).unwrap();
        assert_eq!(s.pieces()[0], vec![0, 2, 3, 255]);

        let identity: Vec<u64> = (0..256).collect();
        let s = extract_bytes(&identity, 256, ExtractMode::Scaled).unwrap();
        assert_eq!(s.pieces()[0], (0..256).collect::<Vec<Symbol>>());
        assert!(extract_bytes(&identity, 255, ExtractMode::Scaled).is_err());
    }

    #[test]
    fn parses_chain_spec() {
        let spec = parse_markov_spec(
            "# first-order chain\nalphabet = 2\norder = 1\nrow.0 = 0.8, 0.2\nrow.1 = 0.5,0.5\nseed = 5\n",
        )
        .unwrap();
        assert_eq!(spec.order, 1);
        assert_eq!(spec.row(0), &[0.8, 0.2]);
        assert_eq!(spec.seed, 5);
        assert_eq!(spec.initial, InitialDistribution::Stationary);

        assert!(parse_markov_spec("order = 1\nrow.0 = 0.8, 0.3\n").is_err());
        assert!(parse_markov_spec("colour = blue\n").is_err());
    }
}
