//! Binary model files.
//!
//! All integers little-endian.
//!
//! | field | encoding |
//! |---|---|
//! | magic | `GTM1` |
//! | version | u32, currently 1 |
//! | config | clauses u32, T u32, s f64, depth u32, hv_size u32, msg_size u32, bits_per_symbol u32, bits_per_clause u32, N u16, max included u32 (0 = none), epochs u32, seed u64 |
//! | classes | u32 |
//! | symbols | space hv_size u32, bits u32, seed u64, vocabulary hash u64, count u32, then per symbol: name (u32 length + UTF-8), index count u32, indices u32 each |
//! | edge types | count u32, names as above, in code order |
//! | messages | present u8; if 1: msg_size u32, edge types u32, clauses u32, then per clause: count u32, indices u32 each |
//! | automata | per clause, per layer: literal count u32, states u16 each |
//! | weights | clause-major i32, clauses x classes |
//! | checksum | first 8 bytes of SHA-256 over everything above |

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use sha2::{Digest, Sha256};

use crate::automata::{ClauseTeam, ClauseWeights, Component, TaTeam};
use crate::engine::{GraphTm, TrainConfig};
use crate::error::{Error, Result};
use crate::hypervector::{MessageSpace, SymbolSpace};

pub const MAGIC: &[u8; 4] = b"GTM1";
pub const VERSION: u32 = 1;

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.write_u32::<LE>(s.len() as u32).unwrap();
    out.extend_from_slice(s.as_bytes());
}

fn put_indices(out: &mut Vec<u8>, idx: &[usize]) {
    out.write_u32::<LE>(idx.len() as u32).unwrap();
    for &k in idx {
        out.write_u32::<LE>(k as u32).unwrap();
    }
}

pub fn to_bytes(model: &GraphTm) -> Vec<u8> {
    let mut out = Vec::new();
    let c = model.config();
    out.extend_from_slice(MAGIC);
    out.write_u32::<LE>(VERSION).unwrap();
    out.write_u32::<LE>(c.num_clauses as u32).unwrap();
    out.write_u32::<LE>(c.threshold).unwrap();
    out.write_f64::<LE>(c.specificity).unwrap();
    out.write_u32::<LE>(c.depth as u32).unwrap();
    out.write_u32::<LE>(c.hv_size as u32).unwrap();
    out.write_u32::<LE>(c.msg_size as u32).unwrap();
    out.write_u32::<LE>(c.bits_per_symbol as u32).unwrap();
    out.write_u32::<LE>(c.bits_per_clause as u32).unwrap();
    out.write_u16::<LE>(c.n_states).unwrap();
    out.write_u32::<LE>(c.max_included_literals.unwrap_or(0) as u32).unwrap();
    out.write_u32::<LE>(c.epochs as u32).unwrap();
    out.write_u64::<LE>(c.seed).unwrap();
    out.write_u32::<LE>(model.num_classes() as u32).unwrap();

    let s = model.symbols();
    out.write_u32::<LE>(s.hv_size() as u32).unwrap();
    out.write_u32::<LE>(s.bits_per_symbol() as u32).unwrap();
    out.write_u64::<LE>(s.seed()).unwrap();
    out.write_u64::<LE>(s.vocabulary_hash()).unwrap();
    out.write_u32::<LE>(s.num_symbols() as u32).unwrap();
    for (name, idx) in s.symbols() {
        put_str(&mut out, name);
        put_indices(&mut out, idx);
    }
    out.write_u32::<LE>(s.num_edge_types() as u32).unwrap();
    for name in s.edge_types() {
        put_str(&mut out, name);
    }

    match model.messages() {
        None => out.push(0),
        Some(ms) => {
            out.push(1);
            out.write_u32::<LE>(ms.msg_size() as u32).unwrap();
            out.write_u32::<LE>(ms.num_edge_types() as u32).unwrap();
            out.write_u32::<LE>(ms.num_clauses() as u32).unwrap();
            for j in 0..ms.num_clauses() {
                put_indices(&mut out, ms.clause_bits(j));
            }
        }
    }

    for clause in model.team().clauses() {
        for comp in &clause.components {
            out.write_u32::<LE>(comp.literals() as u32).unwrap();
            for &st in comp.states() {
                out.write_u16::<LE>(st).unwrap();
            }
        }
    }
    for &w in model.weights().values() {
        out.write_i32::<LE>(w).unwrap();
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest[..8]);
    out
}

struct Reader<'a> {
    cur: Cursor<&'a [u8]>,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptModel(msg.into())
}

impl Reader<'_> {
    fn remaining(&self) -> usize {
        self.cur.get_ref().len() - self.cur.position() as usize
    }

    fn u8(&mut self) -> Result<u8> {
        self.cur.read_u8().map_err(|_| corrupt("truncated"))
    }

    fn u16(&mut self) -> Result<u16> {
        self.cur.read_u16::<LE>().map_err(|_| corrupt("truncated"))
    }

    fn u32(&mut self) -> Result<u32> {
        self.cur.read_u32::<LE>().map_err(|_| corrupt("truncated"))
    }

    fn i32(&mut self) -> Result<i32> {
        self.cur.read_i32::<LE>().map_err(|_| corrupt("truncated"))
    }

    fn u64(&mut self) -> Result<u64> {
        self.cur.read_u64::<LE>().map_err(|_| corrupt("truncated"))
    }

    fn f64(&mut self) -> Result<f64> {
        self.cur.read_f64::<LE>().map_err(|_| corrupt("truncated"))
    }

    fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    /// A length prefix for `n` items of `size` bytes, checked against what
    /// is left so corrupt counts cannot trigger huge allocations.
    fn count(&mut self, size: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(size) > self.remaining() {
            return Err(corrupt("length field exceeds file size"));
        }
        Ok(n)
    }

    fn string(&mut self) -> Result<String> {
        let n = self.count(1)?;
        let mut buf = vec![0u8; n];
        self.cur.read_exact(&mut buf).map_err(|_| corrupt("truncated"))?;
        String::from_utf8(buf).map_err(|_| corrupt("name is not UTF-8"))
    }

    fn indices(&mut self) -> Result<Vec<usize>> {
        let n = self.count(4)?;
        (0..n).map(|_| self.usize()).collect()
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<GraphTm> {
    if bytes.len() < MAGIC.len() + 4 + 8 {
        return Err(corrupt("file too short"));
    }
    if &bytes[..4] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let (body, sum) = bytes.split_at(bytes.len() - 8);
    if Sha256::digest(body)[..8] != *sum {
        return Err(corrupt("checksum mismatch"));
    }
    let mut r = Reader {
        cur: Cursor::new(&body[4..]),
    };
    let version = r.u32()?;
    if version != VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let config = TrainConfig {
        num_clauses: r.usize()?,
        threshold: r.u32()?,
        specificity: r.f64()?,
        depth: r.usize()?,
        hv_size: r.usize()?,
        msg_size: r.usize()?,
        bits_per_symbol: r.usize()?,
        bits_per_clause: r.usize()?,
        n_states: r.u16()?,
        max_included_literals: match r.usize()? {
            0 => None,
            n => Some(n),
        },
        epochs: r.usize()?,
        seed: r.u64()?,
    };
    config.validate().map_err(|e| corrupt(format!("config: {e}")))?;
    let num_classes = r.usize()?;

    let hv_size = r.usize()?;
    let bits = r.usize()?;
    let seed = r.u64()?;
    let vocab = r.u64()?;
    let mut symbols = SymbolSpace::new(hv_size, bits, seed).map_err(|e| corrupt(e.to_string()))?;
    for _ in 0..r.count(8)? {
        let name = r.string()?;
        let idx = r.indices()?;
        symbols
            .register_symbol_with(&name, &idx)
            .map_err(|e| corrupt(format!("symbol table: {e}")))?;
    }
    for _ in 0..r.count(4)? {
        let name = r.string()?;
        symbols
            .register_edge_type(&name)
            .map_err(|e| corrupt(format!("edge types: {e}")))?;
    }
    if symbols.vocabulary_hash() != vocab {
        return Err(corrupt("vocabulary hash mismatch"));
    }

    let messages = match r.u8()? {
        0 => None,
        1 => {
            let msg_size = r.usize()?;
            let edges = r.usize()?;
            let n = r.count(4)?;
            let bits = (0..n).map(|_| r.indices()).collect::<Result<Vec<_>>>()?;
            Some(MessageSpace::with_indices(msg_size, edges, bits).map_err(|e| corrupt(format!("message space: {e}")))?)
        }
        _ => return Err(corrupt("bad message-space flag")),
    };

    let counts = config.literal_counts();
    let mut clauses = Vec::with_capacity(config.num_clauses);
    for _ in 0..config.num_clauses {
        let mut components = Vec::with_capacity(counts.len());
        for &expected in &counts {
            let n = r.count(2)?;
            if n != expected {
                return Err(corrupt(format!("component has {n} literals, expected {expected}")));
            }
            let states = (0..n).map(|_| r.u16()).collect::<Result<Vec<_>>>()?;
            if states.iter().any(|&s| s >= 2 * config.n_states) {
                return Err(corrupt("automaton state out of range"));
            }
            components.push(Component::from_states(states, config.n_states));
        }
        clauses.push(ClauseTeam { components });
    }
    let team = TaTeam::from_clauses(config.n_states, clauses);
    let n_weights = config.num_clauses * num_classes;
    if n_weights * 4 != r.remaining() {
        return Err(corrupt("weight block has the wrong size"));
    }
    let values = (0..n_weights).map(|_| r.i32()).collect::<Result<Vec<_>>>()?;
    let weights = ClauseWeights::from_values(num_classes, values);
    GraphTm::from_parts(config, symbols, messages, team, weights).map_err(|e| corrupt(e.to_string()))
}

pub fn save_model(model: &GraphTm, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<GraphTm> {
    from_bytes(&fs::read(path)?)
}
