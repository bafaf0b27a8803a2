//! A set E given as a finite union of closed intervals, carrying the uniform
//! conditional density and its piecewise-linear CDF G.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::rng::stream_word;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSpec {
    pieces: Vec<(f64, f64)>,
    /// cumulative length before each piece
    cum: Vec<f64>,
    total: f64,
}

impl ConditionalSpec {
    pub fn uniform(pieces: &[(f64, f64)]) -> Result<Self> {
        let mut ps: Vec<(f64, f64)> = pieces.to_vec();
        ps.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in ps.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(Error::Parameter("conditional set pieces overlap".into()));
            }
        }
        let mut cum = Vec::with_capacity(ps.len());
        let mut total = 0.0;
        for &(l, r) in &ps {
            if !(0.0..=1.0).contains(&l) || !(0.0..=1.0).contains(&r) || r <= l {
                return Err(Error::Parameter(format!("bad conditional piece [{l}, {r}]")));
            }
            cum.push(total);
            total += r - l;
        }
        if ps.is_empty() {
            return Err(Error::Parameter("empty conditional set".into()));
        }
        Ok(ConditionalSpec { pieces: ps, cum, total })
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    /// Lebesgue measure of E.
    pub fn measure(&self) -> f64 {
        self.total
    }

    pub fn left_frontier(&self) -> f64 {
        self.pieces[0].0
    }

    pub fn right_frontier(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].1
    }

    pub fn contains(&self, u: f64) -> bool {
        self.pieces.iter().any(|&(l, r)| u >= l && u <= r)
    }

    /// G(u) for u in E.
    pub fn cdf(&self, u: f64) -> Result<f64> {
        for (i, &(l, r)) in self.pieces.iter().enumerate() {
            if u >= l && u <= r {
                return Ok(((self.cum[i] + (u - l)) / self.total).clamp(0.0, 1.0));
            }
        }
        Err(Error::Domain(format!("{u} is not in the conditional set")))
    }

    /// G^{-1}(v) for v in [0,1].
    pub fn inverse_cdf(&self, v: f64) -> f64 {
        let t = v.clamp(0.0, 1.0) * self.total;
        let i = match self.cum.iter().rposition(|&c| c <= t) {
            Some(i) => i,
            None => 0,
        };
        let (l, r) = self.pieces[i];
        (l + (t - self.cum[i])).min(r)
    }
}

/// Binary digit `t` (0-based, most significant first) of the uniform attached to `key`.
#[inline]
pub fn digit(key: u64, t: u64) -> u8 {
    let w = stream_word(key, t / 64);
    ((w >> (63 - (t % 64))) & 1) as u8
}

/// The first 53 digits of the uniform attached to `key`, as a double in [0,1).
#[inline]
pub fn digits_prefix(key: u64) -> f64 {
    (stream_word(key, 0) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
