//! Alphabets, multi-piece samples and sliding-window context counts.
//!
//! A [`Sample`] is an ordered list of independent pieces `x¹ ◇ x² ◇ … ◇ xˡ`.
//! Counting windows never straddle two pieces, so counts of a multi-piece
//! sample are the sums of the per-piece counts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symbol is a dense index into its alphabet.
pub type Symbol = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::Usage(format!(
                "alphabet size must be at least 2, got {size}"
            )));
        }
        if size > Symbol::MAX as usize {
            return Err(Error::Usage(format!("alphabet size {size} is too large")));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut alphabet = Self::new(labels.len())?;
        alphabet.labels = Some(labels);
        Ok(alphabet)
    }

    pub fn binary() -> Self {
        Self {
            size: 2,
            labels: None,
        }
    }

    pub fn bytes() -> Self {
        Self {
            size: 256,
            labels: None,
        }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn contains(&self, symbol: Symbol) -> bool {
        (symbol as usize) < self.size
    }

    /// Display label of a symbol; falls back to its index.
    pub fn label(&self, symbol: Symbol) -> String {
        match &self.labels {
            Some(labels) => labels
                .get(symbol as usize)
                .cloned()
                .unwrap_or_else(|| symbol.to_string()),
            None => symbol.to_string(),
        }
    }
}

/// Cartesian product `A₁ × … × A_d` with mixed-radix joint symbols.
///
/// The first component is the most significant digit, so for two binary
/// components the joint symbol `3` is `(1, 1)` and `2` is `(1, 0)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductAlphabet {
    components: Vec<Alphabet>,
}

impl ProductAlphabet {
    pub fn new(components: Vec<Alphabet>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::Usage(format!(
                "a product alphabet needs at least 2 components, got {}",
                components.len()
            )));
        }
        let joint = components
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.size()))
            .filter(|&j| j <= Symbol::MAX as usize)
            .ok_or_else(|| Error::Usage("joint alphabet size overflows".into()))?;
        debug_assert!(joint >= 4);
        Ok(Self { components })
    }

    /// Product of alphabets given by their sizes.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let components = sizes
            .iter()
            .map(|&s| Alphabet::new(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }

    pub fn components(&self) -> &[Alphabet] {
        &self.components
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn joint_size(&self) -> usize {
        self.components.iter().map(Alphabet::size).product()
    }

    pub fn joint_alphabet(&self) -> Alphabet {
        Alphabet {
            size: self.joint_size(),
            labels: None,
        }
    }

    pub fn encode(&self, parts: &[Symbol]) -> Result<Symbol> {
        if parts.len() != self.components.len() {
            return Err(Error::Input(format!(
                "expected {} components, got {}",
                self.components.len(),
                parts.len()
            )));
        }
        let mut joint: u64 = 0;
        for (part, alphabet) in parts.iter().zip(&self.components) {
            if !alphabet.contains(*part) {
                return Err(Error::Input(format!(
                    "component symbol {part} outside alphabet of size {}",
                    alphabet.size()
                )));
            }
            joint = joint * alphabet.size() as u64 + *part as u64;
        }
        Ok(joint as Symbol)
    }

    pub fn decode(&self, joint: Symbol) -> Vec<Symbol> {
        let mut rest = joint as u64;
        let mut parts = vec![0; self.components.len()];
        for (slot, alphabet) in parts.iter_mut().zip(&self.components).rev() {
            let radix = alphabet.size() as u64;
            *slot = (rest % radix) as Symbol;
            rest /= radix;
        }
        parts
    }
}

/// `x¹ ◇ … ◇ xˡ`: independent pieces over one alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    alphabet: Alphabet,
    product: Option<ProductAlphabet>,
    pieces: Vec<Vec<Symbol>>,
}

impl Sample {
    pub fn new(alphabet: Alphabet, pieces: Vec<Vec<Symbol>>) -> Result<Self> {
        for (p, piece) in pieces.iter().enumerate() {
            if let Some(i) = piece.iter().position(|&s| !alphabet.contains(s)) {
                return Err(Error::Input(format!(
                    "symbol {} at piece {p}, offset {i} is outside alphabet of size {}",
                    piece[i],
                    alphabet.size()
                )));
            }
        }
        Ok(Self {
            alphabet,
            product: None,
            pieces,
        })
    }

    pub fn single(alphabet: Alphabet, sequence: Vec<Symbol>) -> Result<Self> {
        Self::new(alphabet, vec![sequence])
    }

    /// A sample whose symbols are joint symbols of `product`.
    pub fn over_product(product: ProductAlphabet, pieces: Vec<Vec<Symbol>>) -> Result<Self> {
        let mut sample = Self::new(product.joint_alphabet(), pieces)?;
        sample.product = Some(product);
        Ok(sample)
    }

    /// Inverse of [`split_components`]: zips component samples into joint symbols.
    pub fn from_components(product: ProductAlphabet, components: &[Sample]) -> Result<Self> {
        if components.len() != product.dimension() {
            return Err(Error::Contract(format!(
                "expected {} component samples, got {}",
                product.dimension(),
                components.len()
            )));
        }
        let shape = components[0].piece_lengths();
        if components.iter().any(|c| c.piece_lengths() != shape) {
            return Err(Error::Contract(
                "component samples must share the same piece structure".into(),
            ));
        }
        let mut parts = vec![0; components.len()];
        let mut pieces = Vec::with_capacity(shape.len());
        for (p, &len) in shape.iter().enumerate() {
            let mut piece = Vec::with_capacity(len);
            for i in 0..len {
                for (slot, c) in parts.iter_mut().zip(components) {
                    *slot = c.pieces[p][i];
                }
                piece.push(product.encode(&parts)?);
            }
            pieces.push(piece);
        }
        Self::over_product(product, pieces)
    }

    /// `x¹ ◇ … ◇ x^r` over samples sharing an alphabet.
    pub fn diamond(samples: &[Sample]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Usage("cannot join an empty list of samples".into()))?;
        if samples
            .iter()
            .any(|s| s.alphabet.size() != first.alphabet.size())
        {
            return Err(Error::Usage(
                "all samples must share one alphabet".into(),
            ));
        }
        Ok(Self {
            alphabet: first.alphabet.clone(),
            product: first.product.clone(),
            pieces: samples.iter().flat_map(|s| s.pieces.iter().cloned()).collect(),
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn product(&self) -> Option<&ProductAlphabet> {
        self.product.as_ref()
    }

    pub fn pieces(&self) -> &[Vec<Symbol>] {
        &self.pieces
    }

    pub fn into_pieces(self) -> Vec<Vec<Symbol>> {
        self.pieces
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn piece_lengths(&self) -> Vec<usize> {
        self.pieces.iter().map(Vec::len).collect()
    }

    /// `t = Σ tᵢ`.
    pub fn total_length(&self) -> usize {
        self.pieces.iter().map(Vec::len).sum()
    }

    /// Each piece as a standalone one-piece sample.
    pub fn split_pieces(&self) -> impl Iterator<Item = Sample> + '_ {
        self.pieces.iter().map(move |p| Sample {
            alphabet: self.alphabet.clone(),
            product: self.product.clone(),
            pieces: vec![p.clone()],
        })
    }
}

/// Splits a product-alphabet sample into its `d` component samples, keeping
/// the piece structure.
pub fn split_components(sample: &Sample) -> Result<Vec<Sample>> {
    let product = sample.product().ok_or_else(|| {
        Error::Contract("sample alphabet is not a product alphabet".into())
    })?;
    let d = product.dimension();
    let mut out: Vec<Vec<Vec<Symbol>>> = vec![Vec::with_capacity(sample.num_pieces()); d];
    for piece in sample.pieces() {
        let mut split: Vec<Vec<Symbol>> = vec![Vec::with_capacity(piece.len()); d];
        for &joint in piece {
            for (column, part) in split.iter_mut().zip(product.decode(joint)) {
                column.push(part);
            }
        }
        for (dst, column) in out.iter_mut().zip(split) {
            dst.push(column);
        }
    }
    out.into_iter()
        .zip(product.components())
        .map(|(pieces, alphabet)| Sample::new(alphabet.clone(), pieces))
        .collect()
}

/// On-disk sample encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleFormat {
    /// One byte per symbol; requires `|A| = 256`.
    RawBytes,
    /// One integer per line (commas also separate); a blank line starts a new piece.
    SymbolCsv,
    /// One bit per symbol, most significant bit of each byte first; requires `|A| = 2`.
    BitStream,
}

impl FromStr for SampleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw-bytes" | "raw" | "bytes" => Ok(Self::RawBytes),
            "symbol-csv" | "csv" => Ok(Self::SymbolCsv),
            "bit-stream" | "bits" => Ok(Self::BitStream),
            other => Err(Error::Usage(format!(
                "unknown sample format `{other}` (expected raw-bytes, symbol-csv or bit-stream)"
            ))),
        }
    }
}

impl fmt::Display for SampleFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RawBytes => "raw-bytes",
            Self::SymbolCsv => "symbol-csv",
            Self::BitStream => "bit-stream",
        })
    }
}

pub fn read_sample(path: &Path, format: SampleFormat, alphabet: Alphabet) -> Result<Sample> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_sample(&bytes, format, alphabet)
}

pub fn parse_sample(bytes: &[u8], format: SampleFormat, alphabet: Alphabet) -> Result<Sample> {
    match format {
        SampleFormat::RawBytes => {
            if alphabet.size() != 256 {
                return Err(Error::Usage(format!(
                    "raw-bytes input requires an alphabet of size 256, got {}",
                    alphabet.size()
                )));
            }
            Sample::single(alphabet, bytes.iter().map(|&b| b as Symbol).collect())
        }
        SampleFormat::BitStream => {
            if alphabet.size() != 2 {
                return Err(Error::Usage(format!(
                    "bit-stream input requires an alphabet of size 2, got {}",
                    alphabet.size()
                )));
            }
            let bits = bytes
                .iter()
                .flat_map(|&b| (0..8).rev().map(move |i| ((b >> i) & 1) as Symbol))
                .collect();
            Sample::single(alphabet, bits)
        }
        SampleFormat::SymbolCsv => parse_csv(bytes, alphabet),
    }
}

fn parse_csv(bytes: &[u8], alphabet: Alphabet) -> Result<Sample> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Input(format!("symbol-csv input is not UTF-8: {e}")))?;
    let mut pieces = Vec::new();
    let mut current: Vec<Symbol> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            if !current.is_empty() {
                pieces.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        for field in line.split(|c: char| c == ',' || c.is_whitespace()) {
            if field.is_empty() {
                continue;
            }
            let value: u64 = field.parse().map_err(|_| {
                Error::Input(format!("line {}: `{field}` is not a symbol index", lineno + 1))
            })?;
            if value >= alphabet.size() as u64 {
                return Err(Error::Input(format!(
                    "line {}: symbol {value} is outside alphabet of size {}",
                    lineno + 1,
                    alphabet.size()
                )));
            }
            current.push(value as Symbol);
        }
    }
    if !current.is_empty() {
        pieces.push(current);
    }
    Sample::new(alphabet, pieces)
}

/// Serializes a sample. Raw bytes and bit streams cannot mark piece
/// boundaries, so pieces are concatenated; bit streams are zero-padded to a
/// whole byte.
pub fn write_sample(sample: &Sample, format: SampleFormat) -> Result<Vec<u8>> {
    let size = sample.alphabet().size();
    match format {
        SampleFormat::RawBytes => {
            if size > 256 {
                return Err(Error::Usage(format!(
                    "cannot write alphabet of size {size} as raw bytes"
                )));
            }
            Ok(sample.pieces().iter().flatten().map(|&s| s as u8).collect())
        }
        SampleFormat::BitStream => {
            if size != 2 {
                return Err(Error::Usage(format!(
                    "bit-stream output requires a binary alphabet, got size {size}"
                )));
            }
            let bits: Vec<Symbol> = sample.pieces().iter().flatten().copied().collect();
            Ok(pack_bits(&bits))
        }
        SampleFormat::SymbolCsv => {
            let mut out = String::new();
            for (i, piece) in sample.pieces().iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                for s in piece {
                    out.push_str(&s.to_string());
                    out.push('\n');
                }
            }
            Ok(out.into_bytes())
        }
    }
}

/// Packs binary symbols MSB-first, zero-padding the final byte.
pub fn pack_bits(bits: &[Symbol]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (((b & 1) as u8) << (7 - i)))
        })
        .collect()
}

/// A window of symbols packed in mixed radix when it fits in 64 bits.
fn packed_capacity(alphabet_size: usize, len: usize) -> Option<u64> {
    (alphabet_size as u64).checked_pow(len as u32)
}

#[derive(Debug, Clone)]
enum Store {
    /// Words packed as base-|A| integers, most significant symbol first.
    Packed {
        windows: FxHashMap<u64, u64>,
        totals: FxHashMap<u64, u64>,
    },
    Wide {
        windows: FxHashMap<Box<[Symbol]>, u64>,
        totals: FxHashMap<Box<[Symbol]>, u64>,
    },
}

/// Occurrence counts `ν(v·a)` of every observed word of length `k + 1`, and
/// the context totals `ν̄(v) = Σₐ ν(v·a)`.
///
/// Only observed contexts are materialized.
#[derive(Debug, Clone)]
pub struct ContextCounts {
    order: usize,
    alphabet_size: usize,
    store: Store,
}

impl ContextCounts {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn is_empty(&self) -> bool {
        self.num_contexts() == 0
    }

    pub fn num_contexts(&self) -> usize {
        match &self.store {
            Store::Packed { totals, .. } => totals.len(),
            Store::Wide { totals, .. } => totals.len(),
        }
    }

    /// `Σ_v ν̄(v)`, the number of counted windows.
    pub fn total_windows(&self) -> u64 {
        self.context_totals().sum()
    }

    /// `ν̄(v)` for every observed context, in unspecified order.
    pub fn context_totals(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match &self.store {
            Store::Packed { totals, .. } => Box::new(totals.values().copied()),
            Store::Wide { totals, .. } => Box::new(totals.values().copied()),
        }
    }

    /// `ν(v·a)` for every observed word, in unspecified order.
    pub fn word_counts(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match &self.store {
            Store::Packed { windows, .. } => Box::new(windows.values().copied()),
            Store::Wide { windows, .. } => Box::new(windows.values().copied()),
        }
    }

    /// Pairs `(ν(v·a), ν̄(v))` for every observed word `v·a`.
    pub fn transitions(&self) -> Box<dyn Iterator<Item = (u64, u64)> + '_> {
        match &self.store {
            Store::Packed { windows, totals } => {
                let radix = self.alphabet_size as u64;
                Box::new(
                    windows
                        .iter()
                        .map(move |(word, &n)| (n, totals[&(word / radix)])),
                )
            }
            Store::Wide { windows, totals } => {
                let k = self.order;
                Box::new(windows.iter().map(move |(word, &n)| (n, totals[&word[..k]])))
            }
        }
    }

    /// `ν(word)` for a word of length `k + 1`.
    pub fn word_count(&self, word: &[Symbol]) -> u64 {
        if word.len() != self.order + 1 {
            return 0;
        }
        match &self.store {
            Store::Packed { windows, .. } => windows
                .get(&pack(word, self.alphabet_size))
                .copied()
                .unwrap_or(0),
            Store::Wide { windows, .. } => windows.get(word).copied().unwrap_or(0),
        }
    }

    /// `ν̄(v)` for a context of length `k`.
    pub fn context_total(&self, context: &[Symbol]) -> u64 {
        if context.len() != self.order {
            return 0;
        }
        match &self.store {
            Store::Packed { totals, .. } => totals
                .get(&pack(context, self.alphabet_size))
                .copied()
                .unwrap_or(0),
            Store::Wide { totals, .. } => totals.get(context).copied().unwrap_or(0),
        }
    }

    /// Dense per-symbol counts following `context`; zeros when unobserved.
    pub fn counts(&self, context: &[Symbol]) -> Vec<u64> {
        let mut word = context.to_vec();
        word.push(0);
        (0..self.alphabet_size as Symbol)
            .map(|a| {
                *word.last_mut().unwrap() = a;
                self.word_count(&word)
            })
            .collect()
    }

    /// Every observed context with its dense count vector, ordered by context.
    pub fn to_dense(&self) -> BTreeMap<Vec<Symbol>, Vec<u64>> {
        let mut out: BTreeMap<Vec<Symbol>, Vec<u64>> = BTreeMap::new();
        let mut add = |word: Vec<Symbol>, n: u64| {
            let (context, last) = word.split_at(self.order);
            out.entry(context.to_vec())
                .or_insert_with(|| vec![0; self.alphabet_size])[last[0] as usize] = n;
        };
        match &self.store {
            Store::Packed { windows, .. } => {
                for (&code, &n) in windows {
                    add(unpack(code, self.order + 1, self.alphabet_size), n);
                }
            }
            Store::Wide { windows, .. } => {
                for (word, &n) in windows {
                    add(word.to_vec(), n);
                }
            }
        }
        out
    }
}

fn pack(word: &[Symbol], radix: usize) -> u64 {
    word.iter()
        .fold(0u64, |acc, &s| acc * radix as u64 + s as u64)
}

fn unpack(mut code: u64, len: usize, radix: usize) -> Vec<Symbol> {
    let mut word = vec![0; len];
    for slot in word.iter_mut().rev() {
        *slot = (code % radix as u64) as Symbol;
        code /= radix as u64;
    }
    word
}

/// Counts the sliding windows of length `k + 1` inside every piece.
pub fn count_contexts(sample: &Sample, order: usize) -> ContextCounts {
    let radix = sample.alphabet().size();
    let window = order + 1;
    let store = match packed_capacity(radix, window) {
        Some(_) => {
            let mut windows: FxHashMap<u64, u64> = FxHashMap::default();
            let mut totals: FxHashMap<u64, u64> = FxHashMap::default();
            // radix^order fits because radix^(order+1) does.
            let context_space = (radix as u64).pow(order as u32);
            for piece in sample.pieces() {
                if piece.len() < window {
                    continue;
                }
                let mut context = pack(&piece[..order], radix);
                for &next in &piece[order..] {
                    let word = context * radix as u64 + next as u64;
                    *windows.entry(word).or_insert(0) += 1;
                    *totals.entry(context).or_insert(0) += 1;
                    context = word % context_space;
                }
            }
            Store::Packed { windows, totals }
        }
        None => {
            let mut windows: FxHashMap<Box<[Symbol]>, u64> = FxHashMap::default();
            let mut totals: FxHashMap<Box<[Symbol]>, u64> = FxHashMap::default();
            for piece in sample.pieces() {
                for w in piece.windows(window) {
                    bump(&mut windows, w);
                    bump(&mut totals, &w[..order]);
                }
            }
            Store::Wide { windows, totals }
        }
    };
    ContextCounts {
        order,
        alphabet_size: radix,
        store,
    }
}

fn bump(map: &mut FxHashMap<Box<[Symbol]>, u64>, key: &[Symbol]) {
    match map.get_mut(key) {
        Some(n) => *n += 1,
        None => {
            map.insert(key.into(), 1);
        }
    }
}
