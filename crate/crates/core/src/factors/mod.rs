//! Factor maps onto i.i.d. processes.
//!
//! `sinai_factor`: site k reports to the first special site s >= k and reads
//! block s - k of the digit expansion of G(x_s). `finite_factor`: specials of
//! a finite alphabet hand their fair bits to the b's matched to them.

pub mod finite;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::conditional::digit;
use crate::measure::{ConditionalSpec, Coord, Ladder};
use crate::stats::CounterRng;

pub use finite::{finite_factor, BlockCode, FiniteFactor, FiniteSiteLaw, FiniteWindow};

/// Blocks s - k beyond this are flagged rather than read.
pub const MAX_BLOCK: u64 = 40;

pub fn is_special(u: f64, spec: &ConditionalSpec) -> bool {
    spec.contains(u)
}

pub fn cdf_g(u: f64, spec: &ConditionalSpec) -> Result<f64> {
    spec.cdf(u)
}

/// Splits one uniform into countably many. Block 0 is the leading `bits`
/// digits; block i >= 1 takes the digits past those whose 1-based offset has
/// 2-adic valuation i - 1. The rule does not depend on how many blocks a
/// window ends up reading, so an output needs no coordinates left of its site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BitSplitter {
    pub bits: u32,
}

impl BitSplitter {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 53 {
            return Err(Error::Parameter(format!("bits per output must lie in 1..=53, got {bits}")));
        }
        Ok(BitSplitter { bits })
    }

    /// Digit index used for digit `j` of block `i`.
    #[inline]
    pub fn position(&self, block: u64, j: u64) -> u64 {
        let b = self.bits as u64;
        if block == 0 {
            j
        } else {
            b + (1u64 << (block - 1)) * (2 * j + 1) - 1
        }
    }

    pub fn positions(&self, block: u64) -> Vec<u64> {
        (0..self.bits as u64).map(|j| self.position(block, j)).collect()
    }

    /// Block `block` of the expansion whose digit t is `dig(t)`.
    pub fn block_value(&self, block: u64, dig: impl Fn(u64) -> u8) -> f64 {
        let mut v = 0.0;
        let mut w = 0.5;
        for j in 0..self.bits as u64 {
            if dig(self.position(block, j)) == 1 {
                v += w;
            }
            w *= 0.5;
        }
        v
    }
}

/// Binary digit t of G(x) for a special coordinate: read from its digit
/// stream when it has one, else from the terminating expansion of G(x).
fn g_digit(c: &Coord, g: f64, t: u64) -> u8 {
    match c.digits {
        Some(key) => digit(key, t),
        None => {
            if t >= 53 {
                return 0;
            }
            ((g * 2f64.powi(t as i32 + 1)).floor() as u64 & 1) as u8
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorWindow {
    pub start: i64,
    pub coords: Vec<Coord>,
}

impl FactorWindow {
    pub fn sample(ladder: &dyn Ladder, start: i64, len: usize, rng: &mut CounterRng) -> Self {
        let coords = (0..len as i64).map(|i| ladder.sample_site(start + i, rng)).collect();
        FactorWindow { start, coords }
    }

    pub fn from_reals(start: i64, xs: &[f64]) -> Self {
        FactorWindow { start, coords: xs.iter().map(|&u| Coord::real(u)).collect() }
    }

    /// Tx: drop the first site.
    pub fn shifted(&self, by: usize) -> Self {
        FactorWindow { start: self.start + by as i64, coords: self.coords[by..].to_vec() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Flag {
    Defined,
    /// No special site at or after k inside the window.
    NoSpecial,
    /// The special is more than MAX_BLOCK sites away.
    FarSpecial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FactorOutput {
    pub index: i64,
    pub value: Option<f64>,
    /// Absolute index of the special site reported to.
    pub special: Option<i64>,
    pub flag: Flag,
}

pub fn sinai_factor(w: &FactorWindow, spec: &ConditionalSpec, bits: u32) -> Result<Vec<FactorOutput>> {
    let split = BitSplitter::new(bits)?;
    let n = w.coords.len();
    let mut out = vec![FactorOutput { index: 0, value: None, special: None, flag: Flag::NoSpecial }; n];
    let mut next: Option<(usize, f64)> = None;
    for k in (0..n).rev() {
        let c = &w.coords[k];
        if let Some(u) = c.as_real() {
            if is_special(u, spec) {
                next = Some((k, cdf_g(u, spec)?));
            }
        } else {
            return Err(Error::Domain("sinai_factor needs real-valued coordinates".into()));
        }
        let index = w.start + k as i64;
        out[k] = match next {
            None => FactorOutput { index, value: None, special: None, flag: Flag::NoSpecial },
            Some((s, _)) if (s - k) as u64 > MAX_BLOCK => {
                FactorOutput { index, value: None, special: Some(w.start + s as i64), flag: Flag::FarSpecial }
            }
            Some((s, g)) => {
                let cs = &w.coords[s];
                let v = split.block_value((s - k) as u64, |t| g_digit(cs, g, t));
                FactorOutput { index, value: Some(v), special: Some(w.start + s as i64), flag: Flag::Defined }
            }
        };
    }
    Ok(out)
}
