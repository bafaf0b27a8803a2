//! Low-entropy factor onto fair bits for a finite alphabet.
//!
//! The special symbols are 0..2^m, each with conditional probability 2^{-m},
//! so a special carries m fair bits. It keeps the first and gives the other
//! d = m - 1 to the b's matched to it, in order of position.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{build_matching, Mark, MarkSequence, MatchGraph};
use crate::stats::CounterRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCode {
    pub m: u32,
    pub d: u32,
}

impl BlockCode {
    pub fn new(m: u32) -> Result<Self> {
        if !(2..=16).contains(&m) {
            return Err(Error::Parameter(format!("block code needs 2 <= m <= 16, got {m}")));
        }
        Ok(BlockCode { m, d: m - 1 })
    }

    pub fn alphabet(&self) -> u32 {
        1 << self.m
    }

    /// (d + 1) H(fair bit) <= H(ρ), both in bits.
    pub fn entropy_ok(&self) -> bool {
        (self.d + 1) as f64 <= self.m as f64
    }

    /// Bit r (most significant first) of a special symbol.
    pub fn bit(&self, symbol: u32, r: u32) -> u8 {
        ((symbol >> (self.m - 1 - r)) & 1) as u8
    }
}

/// p_n(E) = delta + (1 - delta)/(n + 2); uniform inside E and on the
/// non-special symbols 2^m..2^m + extra.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSiteLaw {
    pub m: u32,
    pub extra: u32,
    pub delta: f64,
}

impl FiniteSiteLaw {
    pub fn new(m: u32, extra: u32, delta: f64) -> Result<Self> {
        if extra == 0 || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!("finite law needs extra >= 1 and δ in (0,1), got {extra}, {delta}")));
        }
        Ok(FiniteSiteLaw { m, extra, delta })
    }

    pub fn p_special(&self, n: i64) -> f64 {
        self.delta + (1.0 - self.delta) / (n.max(0) as f64 + 2.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteWindow {
    pub start: i64,
    pub symbols: Vec<u32>,
    pub m: u32,
    /// Declared lower bound on p_n(E).
    pub delta: f64,
}

impl FiniteWindow {
    pub fn sample(law: &FiniteSiteLaw, start: i64, len: usize, rng: &mut CounterRng) -> Self {
        let e = 1u64 << law.m;
        let symbols = (0..len as i64)
            .map(|i| {
                if rng.next_bool(law.p_special(start + i)) {
                    rng.next_below(e) as u32
                } else {
                    (e + rng.next_below(law.extra as u64)) as u32
                }
            })
            .collect();
        FiniteWindow { start, symbols, m: law.m, delta: law.delta }
    }

    pub fn is_special(&self, k: usize) -> bool {
        self.symbols[k] < (1 << self.m)
    }

    pub fn marks(&self) -> MarkSequence {
        let marks = (0..self.symbols.len()).map(|k| if self.is_special(k) { Mark::A } else { Mark::B }).collect();
        MarkSequence { start: self.start, marks, law: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteFactor {
    /// None marks a b left unmatched at the right edge.
    pub bits: Vec<Option<u8>>,
    pub graph: MatchGraph,
    pub discarded: u64,
}

pub fn finite_factor(w: &FiniteWindow, code: &BlockCode, d: u32) -> Result<FiniteFactor> {
    if w.m != code.m {
        return Err(Error::Parameter(format!("window alphabet 2^{} does not match code 2^{}", w.m, code.m)));
    }
    if d != code.d {
        return Err(Error::Parameter(format!("d = {d} must equal m - 1 = {}", code.d)));
    }
    if (d as f64) < (1.0 - w.delta) / w.delta {
        return Err(Error::Parameter(format!("d = {d} is below (1-δ)/δ = {}", (1.0 - w.delta) / w.delta)));
    }
    let graph = build_matching(&w.marks(), d)?;
    let n = w.symbols.len();
    let mut bits = vec![None; n];
    let mut partners: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(b, a) in &graph.edges {
        partners[a].push(b);
    }
    let mut discarded = 0u64;
    for k in 0..n {
        if !w.is_special(k) {
            continue;
        }
        let sym = w.symbols[k];
        bits[k] = Some(code.bit(sym, 0));
        let p = &mut partners[k];
        p.sort_unstable();
        for (r, &b) in p.iter().enumerate() {
            bits[b] = Some(code.bit(sym, r as u32 + 1));
        }
        discarded += (d as usize - p.len()) as u64;
    }
    Ok(FiniteFactor { bits, graph, discarded })
}
