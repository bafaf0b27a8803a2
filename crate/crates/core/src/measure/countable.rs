//! The countable-state family on the nonnegative integers.
//!
//! A_n = even integers >= 2n, B_n = odd integers >= 2n - 1, n >= 1, with base pmf
//!
//! ```text
//! rho(0)      = 1 - (1 + lambda) a_1
//! rho(2k)     = a_k - a_{k+1}             (k >= 1)
//! rho(2k - 1) = lambda (a_k - a_{k+1})    (k >= 1)
//! ```
//!
//! so that rho(A_n) = a_n and rho(B_n) = lambda a_n by telescoping.

use super::ladder::{a_inverse, a_n, max_level, LadderParams};
use super::{Mark, Region};
use crate::error::{Error, Result};
use crate::stats::CounterRng;

#[derive(Clone, Debug)]
pub struct CountableLadder {
    params: LadderParams,
}

impl CountableLadder {
    pub fn new(lambda: f64) -> Result<Self> {
        Ok(CountableLadder { params: LadderParams::new(lambda, 1)? })
    }

    pub fn params(&self) -> LadderParams {
        self.params
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }

    pub fn rho(&self, k: u64) -> f64 {
        let lam = self.params.lambda;
        if k == 0 {
            1.0 - (1.0 + lam) * a_n(1.0)
        } else if k % 2 == 0 {
            let j = (k / 2) as f64;
            a_n(j) - a_n(j + 1.0)
        } else {
            let j = k.div_ceil(2) as f64;
            lam * (a_n(j) - a_n(j + 1.0))
        }
    }

    pub fn classify(&self, k: u64, n: i64) -> Region {
        if n < 1 || k == 0 {
            return Region::Neutral;
        }
        let n = n as u64;
        if k % 2 == 0 && k >= 2 * n {
            Region::InA
        } else if k % 2 == 1 && k >= 2 * n - 1 {
            Region::InB
        } else {
            Region::Neutral
        }
    }

    pub fn mark_of(&self, k: u64) -> Mark {
        if k == 0 {
            Mark::NEUTRAL
        } else if k % 2 == 0 {
            Mark { sign: 1, depth: (k / 2).min(i64::MAX as u64) as i64 }
        } else {
            Mark { sign: -1, depth: k.div_ceil(2).min(i64::MAX as u64) as i64 }
        }
    }

    /// Depth K in [from, to) with P(K >= k) proportional to a_k - a_to.
    fn sample_depth(&self, from: i64, to: Option<i64>, rng: &mut CounterRng) -> Result<i64> {
        let hi = a_n(from as f64);
        let lo = to.map(|t| a_n(t as f64)).unwrap_or(0.0);
        let t = hi - (hi - lo) * rng.next_open_f64();
        if t >= hi {
            return Ok(from);
        }
        let d = max_level(from, a_inverse(t), |j| t < a_n(j as f64));
        if d > (u64::MAX / 4) as i64 {
            return Err(Error::Domain("countable depth exceeds symbol range".into()));
        }
        Ok(to.map(|q| d.min(q - 1)).unwrap_or(d))
    }

    pub fn sample_a(&self, from: i64, to: Option<i64>, rng: &mut CounterRng) -> u64 {
        // The depth range is practically unbounded only with probability ~1e-18.
        let k = self.sample_depth(from, to, rng).unwrap_or(from);
        2 * k as u64
    }

    pub fn sample_b(&self, from: i64, to: Option<i64>, rng: &mut CounterRng) -> u64 {
        let k = self.sample_depth(from, to, rng).unwrap_or(from);
        2 * k as u64 - 1
    }
}
