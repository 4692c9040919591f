//! Sparse Boolean hypervectors with a mirrored negation half, the symbol
//! table that assigns feature bits, and the message bit layout used to pass
//! clause matches between nodes.

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const WORD: usize = 64;

pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

#[inline]
pub(crate) fn test_bit(words: &[u64], k: usize) -> bool {
    words[k / WORD] >> (k % WORD) & 1 == 1
}

#[inline]
fn set_bit(words: &mut [u64], k: usize) {
    words[k / WORD] |= 1 << (k % WORD);
}

#[inline]
fn clear_bit(words: &mut [u64], k: usize) {
    words[k / WORD] &= !(1 << (k % WORD));
}

/// Boolean vector of length `2 * size`. Bit `k` is feature `k`, bit
/// `size + k` is its negation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Hypervector {
    size: usize,
    words: Vec<u64>,
}

impl Hypervector {
    /// No features present: first half zero, second half one.
    pub fn empty(size: usize) -> Self {
        let mut words = vec![0u64; words_for(2 * size)];
        for k in size..2 * size {
            set_bit(&mut words, k);
        }
        Self { size, words }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of literals, i.e. `2 * size`.
    pub fn len(&self) -> usize {
        2 * self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn get(&self, k: usize) -> bool {
        test_bit(&self.words, k)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Sets the feature bits at `indices` and clears their negations.
    pub fn bundle(&mut self, indices: &[usize]) -> Result<()> {
        if let Some(&bad) = indices.iter().find(|&&k| k >= self.size) {
            return Err(Error::OutOfRange {
                index: bad,
                bound: self.size,
            });
        }
        for &k in indices {
            set_bit(&mut self.words, k);
            clear_bit(&mut self.words, self.size + k);
        }
        Ok(())
    }

    pub fn bundled(mut self, indices: &[usize]) -> Result<Self> {
        self.bundle(indices)?;
        Ok(self)
    }

    /// Indices of the set feature bits (first half only).
    pub fn features(&self) -> Vec<usize> {
        (0..self.size).filter(|&k| self.get(k)).collect()
    }

    pub fn is_mirrored(&self) -> bool {
        (0..self.size).all(|k| self.get(k) != self.get(self.size + k))
    }

    /// Both halves as `0`/`1` characters separated by one space.
    pub fn bit_string(&self) -> String {
        let half = |range: std::ops::Range<usize>| -> String {
            range.map(|k| if self.get(k) { '1' } else { '0' }).collect()
        };
        format!("{} {}", half(0..self.size), half(self.size..2 * self.size))
    }

    /// Parses the form produced by [`Hypervector::bit_string`]. Whitespace is
    /// ignored; the mirror invariant is enforced.
    pub fn from_bit_string(s: &str) -> Result<Self> {
        let bits: Vec<bool> = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    line: 0,
                    msg: format!("bad bit character `{other}`"),
                }),
            })
            .collect::<Result<_>>()?;
        Self::from_full_bits(&bits)
    }

    fn from_full_bits(bits: &[bool]) -> Result<Self> {
        if !bits.len().is_multiple_of(2) {
            return Err(Error::Parse {
                line: 0,
                msg: format!("odd hypervector length {}", bits.len()),
            });
        }
        let size = bits.len() / 2;
        let features: Vec<usize> = (0..size).filter(|&k| bits[k]).collect();
        let hv = Hypervector::empty(size).bundled(&features)?;
        if (0..bits.len()).any(|k| hv.get(k) != bits[k]) {
            return Err(Error::Parse {
                line: 0,
                msg: "negation half does not mirror the feature half".into(),
            });
        }
        Ok(hv)
    }

    /// Hex over all `2 * size` bits, bit 0 in the most significant position
    /// of the first digit; trailing pad bits are zero.
    pub fn to_hex(&self) -> String {
        let len = self.len();
        let digits = len.div_ceil(4);
        let mut out = String::with_capacity(digits);
        for d in 0..digits {
            let mut nibble = 0u8;
            for b in 0..4 {
                let k = d * 4 + b;
                if k < len && self.get(k) {
                    nibble |= 8 >> b;
                }
            }
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out
    }

    pub fn from_hex(size: usize, hex: &str) -> Result<Self> {
        let len = 2 * size;
        if hex.len() != len.div_ceil(4) {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {} hex digits, got {}", len.div_ceil(4), hex.len()),
            });
        }
        let mut bits = Vec::with_capacity(len);
        for c in hex.chars() {
            let nibble = c.to_digit(16).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("bad hex digit `{c}`"),
            })?;
            for b in 0..4 {
                bits.push(nibble & (8 >> b) != 0);
            }
        }
        if bits[len..].iter().any(|&b| b) {
            return Err(Error::Parse {
                line: 0,
                msg: "non-zero padding bits".into(),
            });
        }
        bits.truncate(len);
        Self::from_full_bits(&bits)
    }
}

impl fmt::Debug for Hypervector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.bit_string())
    }
}

/// Element-wise `base + code`: binds a clause's message bits to an edge type.
pub fn bind_offset(base: &[usize], edge_type: u32, msg_size: usize) -> Result<Vec<usize>> {
    base.iter()
        .map(|&b| {
            let k = b + edge_type as usize;
            if k >= msg_size {
                Err(Error::BindingOverflow { index: k, msg_size })
            } else {
                Ok(k)
            }
        })
        .collect()
}

/// `n choose k`, saturating at `usize::MAX`.
fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

fn short_hash(parts: impl IntoIterator<Item = Vec<u8>>) -> u64 {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update((p.len() as u64).to_le_bytes());
        hasher.update(&p);
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Hash of an ordered vocabulary (symbol names then edge-type names).
/// Stored in corpus and model files to catch mismatched pairings.
pub fn vocabulary_hash<S: AsRef<str>, E: AsRef<str>>(symbols: &[S], edge_types: &[E]) -> u64 {
    let parts = std::iter::once(b"symbols".to_vec())
        .chain(symbols.iter().map(|s| s.as_ref().as_bytes().to_vec()))
        .chain(std::iter::once(b"edge-types".to_vec()))
        .chain(edge_types.iter().map(|s| s.as_ref().as_bytes().to_vec()));
    short_hash(parts)
}

/// Symbol table: property symbols own feature-bit index sets, edge types
/// own consecutive integer codes.
#[derive(Clone, Debug)]
pub struct SymbolSpace {
    hv_size: usize,
    bits_per_symbol: usize,
    seed: u64,
    symbols: IndexMap<String, Vec<usize>>,
    taken: HashSet<Vec<usize>>,
    edge_types: IndexMap<String, u32>,
    rng: ChaCha8Rng,
}

impl SymbolSpace {
    pub fn new(hv_size: usize, bits_per_symbol: usize, seed: u64) -> Result<Self> {
        if hv_size == 0 || bits_per_symbol == 0 {
            return Err(Error::Config("hypervector size and bits per symbol must be positive".into()));
        }
        if bits_per_symbol > hv_size {
            return Err(Error::Config(format!(
                "bits per symbol ({bits_per_symbol}) exceeds hypervector size ({hv_size})"
            )));
        }
        Ok(Self {
            hv_size,
            bits_per_symbol,
            seed,
            symbols: IndexMap::new(),
            taken: HashSet::new(),
            edge_types: IndexMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Registers every symbol and edge type in order, drawing bits from the seed.
    pub fn from_vocabulary<S: AsRef<str>, E: AsRef<str>>(
        hv_size: usize,
        bits_per_symbol: usize,
        seed: u64,
        symbols: &[S],
        edge_types: &[E],
    ) -> Result<Self> {
        let mut space = Self::new(hv_size, bits_per_symbol, seed)?;
        for s in symbols {
            space.register_symbol(s.as_ref())?;
        }
        for e in edge_types {
            space.register_edge_type(e.as_ref())?;
        }
        Ok(space)
    }

    pub fn hv_size(&self) -> usize {
        self.hv_size
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn register_symbol(&mut self, id: &str) -> Result<&[usize]> {
        if self.symbols.contains_key(id) {
            return Err(Error::AlreadyRegistered(id.to_string()));
        }
        let capacity = binomial(self.hv_size, self.bits_per_symbol);
        if self.taken.len() >= capacity {
            return Err(Error::SpaceExhausted(format!(
                "all {capacity} index sets of {} bits in {} are in use",
                self.bits_per_symbol, self.hv_size
            )));
        }
        let indices = loop {
            let mut draw = sample(&mut self.rng, self.hv_size, self.bits_per_symbol).into_vec();
            draw.sort_unstable();
            if !self.taken.contains(&draw) {
                break draw;
            }
        };
        self.insert(id, indices)
    }

    /// Registers a symbol at hand-chosen bit positions.
    pub fn register_symbol_with(&mut self, id: &str, indices: &[usize]) -> Result<&[usize]> {
        if self.symbols.contains_key(id) {
            return Err(Error::AlreadyRegistered(id.to_string()));
        }
        if let Some(&bad) = indices.iter().find(|&&k| k >= self.hv_size) {
            return Err(Error::OutOfRange {
                index: bad,
                bound: self.hv_size,
            });
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty() {
            return Err(Error::Config(format!("symbol `{id}` needs at least one bit")));
        }
        if self.taken.contains(&sorted) {
            return Err(Error::Collision(format!(
                "symbol `{id}` reuses the full index set {sorted:?}"
            )));
        }
        self.insert(id, sorted)
    }

    fn insert(&mut self, id: &str, indices: Vec<usize>) -> Result<&[usize]> {
        self.taken.insert(indices.clone());
        self.symbols.insert(id.to_string(), indices);
        Ok(&self.symbols[id])
    }

    pub fn register_edge_type(&mut self, name: &str) -> Result<u32> {
        if self.edge_types.contains_key(name) {
            return Err(Error::AlreadyRegistered(name.to_string()));
        }
        let code = self.edge_types.len() as u32;
        self.edge_types.insert(name.to_string(), code);
        Ok(code)
    }

    pub fn indices(&self, id: &str) -> Option<&[usize]> {
        self.symbols.get(id).map(Vec::as_slice)
    }

    pub fn edge_type(&self, name: &str) -> Option<u32> {
        self.edge_types.get(name).copied()
    }

    pub fn edge_type_name(&self, code: u32) -> Option<&str> {
        self.edge_types.get_index(code as usize).map(|(k, _)| k.as_str())
    }

    pub fn num_edge_types(&self) -> usize {
        self.edge_types.len()
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.symbols.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn edge_types(&self) -> impl Iterator<Item = &str> {
        self.edge_types.keys().map(String::as_str)
    }

    pub fn num_symbols(&self) -> usize {
        self.symbols.len()
    }

    /// Bundles the bits of every listed symbol into an empty hypervector.
    pub fn encode<S: AsRef<str>>(&self, symbols: &[S]) -> Result<Hypervector> {
        let mut hv = Hypervector::empty(self.hv_size);
        for s in symbols {
            let idx = self
                .indices(s.as_ref())
                .ok_or_else(|| Error::UnknownSymbol(s.as_ref().to_string()))?;
            hv.bundle(idx)?;
        }
        Ok(hv)
    }

    pub fn vocabulary_hash(&self) -> u64 {
        let symbols: Vec<&str> = self.symbols.keys().map(String::as_str).collect();
        let edges: Vec<&str> = self.edge_types.keys().map(String::as_str).collect();
        vocabulary_hash(&symbols, &edges)
    }

    /// Identifies the exact bit layout; graphs bound to a space carry it.
    pub fn fingerprint(&self) -> u64 {
        let mut parts = vec![
            (self.hv_size as u64).to_le_bytes().to_vec(),
            self.vocabulary_hash().to_le_bytes().to_vec(),
        ];
        for idx in self.symbols.values() {
            parts.push(idx.iter().flat_map(|&k| (k as u64).to_le_bytes()).collect());
        }
        short_hash(parts)
    }
}

/// Layout of message bits: each clause owns a base index set, and a message
/// sent along edge type `e` sets that set shifted by `e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageSpace {
    msg_size: usize,
    bits_per_clause: usize,
    num_edge_types: usize,
    clause_bits: Vec<Vec<usize>>,
    // (clause, edge type) -> shifted indices, row-major by clause
    bound: Vec<Vec<usize>>,
}

impl MessageSpace {
    /// Draws `bits_per_clause` indices per clause so that every shifted set
    /// stays inside `msg_size` and no two (clause, edge type) pairs coincide.
    pub fn new(
        msg_size: usize,
        bits_per_clause: usize,
        num_clauses: usize,
        num_edge_types: usize,
        seed: u64,
    ) -> Result<Self> {
        let edge_types = num_edge_types.max(1);
        if bits_per_clause == 0 || msg_size == 0 {
            return Err(Error::Config("message size and bits per clause must be positive".into()));
        }
        if edge_types > msg_size {
            return Err(Error::BindingOverflow {
                index: edge_types - 1,
                msg_size,
            });
        }
        let range = msg_size - edge_types + 1;
        if bits_per_clause > range || binomial(range, bits_per_clause) < num_clauses {
            return Err(Error::SpaceExhausted(format!(
                "{num_clauses} clauses of {bits_per_clause} bits do not fit a message size of \
                 {msg_size} with {edge_types} edge types"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0x6d73_6773);
        let mut taken: HashSet<Vec<usize>> = HashSet::new();
        let mut clause_bits = Vec::with_capacity(num_clauses);
        for j in 0..num_clauses {
            let mut attempts = 0;
            let base = loop {
                attempts += 1;
                if attempts > 10_000 {
                    return Err(Error::Collision(format!(
                        "could not place clause {j} without colliding message sets; \
                         enlarge the message size"
                    )));
                }
                let mut draw = sample(&mut rng, range, bits_per_clause).into_vec();
                draw.sort_unstable();
                let shifted: Vec<Vec<usize>> = (0..edge_types as u32)
                    .map(|e| draw.iter().map(|&b| b + e as usize).collect())
                    .collect();
                if shifted.iter().all(|s| !taken.contains(s)) {
                    taken.extend(shifted);
                    break draw;
                }
            };
            clause_bits.push(base);
        }
        Self::with_indices(msg_size, num_edge_types, clause_bits)
    }

    /// Hand-placed clause message bits.
    pub fn with_indices(msg_size: usize, num_edge_types: usize, clause_bits: Vec<Vec<usize>>) -> Result<Self> {
        let edge_types = num_edge_types.max(1);
        let mut bound = Vec::with_capacity(clause_bits.len() * edge_types);
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut bits_per_clause = 0;
        for (j, base) in clause_bits.iter().enumerate() {
            if base.is_empty() {
                return Err(Error::Config(format!("clause {j} has no message bits")));
            }
            bits_per_clause = bits_per_clause.max(base.len());
            let mut base_sorted = base.clone();
            base_sorted.sort_unstable();
            base_sorted.dedup();
            for e in 0..edge_types as u32 {
                let shifted = bind_offset(&base_sorted, e, msg_size)?;
                if !seen.insert(shifted.clone()) {
                    return Err(Error::Collision(format!(
                        "clause {j} via edge type {e} reuses message set {shifted:?}"
                    )));
                }
                bound.push(shifted);
            }
        }
        Ok(Self {
            msg_size,
            bits_per_clause,
            num_edge_types: edge_types,
            clause_bits,
            bound,
        })
    }

    pub fn msg_size(&self) -> usize {
        self.msg_size
    }

    pub fn bits_per_clause(&self) -> usize {
        self.bits_per_clause
    }

    pub fn num_edge_types(&self) -> usize {
        self.num_edge_types
    }

    pub fn num_clauses(&self) -> usize {
        self.clause_bits.len()
    }

    pub fn clause_bits(&self, clause: usize) -> &[usize] {
        &self.clause_bits[clause]
    }

    /// Message bits for `clause` arriving over edge type `edge_type`.
    pub fn bound(&self, clause: usize, edge_type: u32) -> &[usize] {
        &self.bound[clause * self.num_edge_types + edge_type as usize]
    }
}
