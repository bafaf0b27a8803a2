//! The nested interval ladder on [0,1] and the exact depth of a coordinate.

use super::{Coord, Mark, Region, Symbol};
use crate::error::{Error, Result};
use crate::measure::conditional::ConditionalSpec;
use crate::stats::CounterRng;

/// Largest level a depth search reports; deeper coordinates saturate here.
pub const DEPTH_CAP: i64 = 1 << 60;

/// a_n = 1/((n+4) ln(n+4)), natural logarithm. Accepts non-integer levels so
/// that astronomically large indices such as 2^j can be evaluated.
#[inline]
pub fn a_n(n: f64) -> f64 {
    let m = n + 4.0;
    1.0 / (m * m.ln())
}

/// Approximate inverse of `a_n`: some level n with a_n close to t.
pub fn a_inverse(t: f64) -> f64 {
    if t <= 0.0 {
        return f64::INFINITY;
    }
    let y = 1.0 / t;
    // Solve m ln m = y by fixed-point iteration on m = y / ln m.
    let mut m = (y / y.ln().max(1.0)).max(std::f64::consts::E);
    for _ in 0..6 {
        m = y / m.ln();
    }
    // Newton polish on h(m) = m ln m - y.
    for _ in 0..4 {
        m -= (m * m.ln() - y) / (m.ln() + 1.0);
    }
    m - 4.0
}

/// max { j >= first : pred(j) }, given pred(first) holds and pred is monotone
/// (true on an initial segment). `guess` only speeds the search up.
pub(crate) fn max_level(first: i64, guess: f64, pred: impl Fn(i64) -> bool) -> i64 {
    debug_assert!(pred(first));
    let g = if guess.is_finite() { (guess as i64).clamp(first, DEPTH_CAP) } else { DEPTH_CAP };
    let (mut lo, mut hi);
    if pred(g) {
        if g == DEPTH_CAP {
            return DEPTH_CAP;
        }
        lo = g;
        let mut step = 1i64;
        loop {
            let probe = lo.saturating_add(step).min(DEPTH_CAP);
            if pred(probe) {
                if probe == DEPTH_CAP {
                    return DEPTH_CAP;
                }
                lo = probe;
                step = step.saturating_mul(2);
            } else {
                hi = probe;
                break;
            }
        }
    } else {
        hi = g;
        let mut step = 1i64;
        loop {
            let probe = hi.saturating_sub(step).max(first);
            if pred(probe) {
                lo = probe;
                break;
            }
            hi = probe;
            step = step.saturating_mul(2);
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LadderParams {
    pub lambda: f64,
    pub first: i64,
}

impl LadderParams {
    pub fn new(lambda: f64, first: i64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Parameter(format!("lambda must lie in (0,1), got {lambda}")));
        }
        if first < 1 {
            return Err(Error::Parameter(format!("first nontrivial index must be >= 1, got {first}")));
        }
        // a_n is decreasing, so the first level is the binding one.
        if (1.0 + lambda) * a_n(first as f64) >= 1.0 {
            return Err(Error::Parameter("(1 + lambda) a_n must stay below 1".into()));
        }
        Ok(LadderParams { lambda, first })
    }
}

/// The continuous family: A_n = (0, a_n), B_n = (1/2, b_n) with b_n = fl(1/2 + fl(lambda a_n)).
///
/// |B_n| is taken to be b_n - 1/2 (exact in binary64), which differs from
/// lambda a_n by at most one ulp of 1/2. All masses used for sampling and
/// for tail bounds are the actual layout lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousLadder {
    params: LadderParams,
    cond: ConditionalSpec,
}

impl ContinuousLadder {
    pub fn new(lambda: f64) -> Result<Self> {
        Self::with_first(lambda, 2)
    }

    pub fn with_first(lambda: f64, first: i64) -> Result<Self> {
        let params = LadderParams::new(lambda, first)?;
        let a = a_n(first as f64);
        let b = 0.5 + lambda * a;
        let cond = ConditionalSpec::uniform(&[(a, 0.5), (b, 1.0)])?;
        Ok(ContinuousLadder { params, cond })
    }

    pub fn params(&self) -> LadderParams {
        self.params
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }

    pub fn first(&self) -> i64 {
        self.params.first
    }

    /// The conditional set E = [0,1] \ (A_first ∪ B_first) with its uniform law.
    pub fn conditional(&self) -> &ConditionalSpec {
        &self.cond
    }

    #[inline]
    pub fn a(&self, level: f64) -> f64 {
        a_n(level)
    }

    /// Right endpoint of B at a (possibly huge) level.
    #[inline]
    pub fn b_right(&self, level: f64) -> f64 {
        0.5 + self.params.lambda * a_n(level)
    }

    /// (|A_n|, |B_n|) for n >= first.
    pub fn ladder_lengths(&self, n: i64) -> Result<(f64, f64)> {
        if n < self.params.first {
            return Err(Error::Domain(format!("ladder level {n} below {}", self.params.first)));
        }
        Ok((self.len_a_f(n as f64), self.len_b_f(n as f64)))
    }

    #[inline]
    pub fn len_a_f(&self, level: f64) -> f64 {
        a_n(level)
    }

    #[inline]
    pub fn len_b_f(&self, level: f64) -> f64 {
        self.b_right(level) - 0.5
    }

    /// Region of u at a real-valued level; levels below `first` are trivial.
    pub fn classify_at(&self, u: f64, level: f64) -> Result<Region> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("coordinate {u} outside [0,1]")));
        }
        if level < self.params.first as f64 {
            return Ok(Region::Neutral);
        }
        if u > 0.0 && u < a_n(level) {
            Ok(Region::InA)
        } else if u > 0.5 && u < self.b_right(level) {
            Ok(Region::InB)
        } else {
            Ok(Region::Neutral)
        }
    }

    pub fn classify(&self, u: f64, n: i64) -> Result<Region> {
        self.classify_at(u, n as f64)
    }

    /// Kind and deepest level of u, found by search against the same
    /// endpoint predicates that `classify` uses.
    pub fn mark_of(&self, u: f64) -> Result<Mark> {
        let first = self.params.first;
        match self.classify(u, first)? {
            Region::Neutral => Ok(Mark::NEUTRAL),
            Region::InA => {
                let depth = max_level(first, a_inverse(u), |j| u < a_n(j as f64));
                Ok(Mark { sign: 1, depth })
            }
            Region::InB => {
                let t = (u - 0.5) / self.params.lambda;
                let depth = max_level(first, a_inverse(t), |j| u < self.b_right(j as f64));
                Ok(Mark { sign: -1, depth })
            }
        }
    }

    /// Uniform on [lo, hi), drawn so that the left endpoint is attainable.
    fn uniform_in(lo: f64, hi: f64, rng: &mut CounterRng) -> f64 {
        let v = rng.next_open_f64();
        hi - (hi - lo) * v
    }

    /// Uniform point of A_from \ A_to (to = None means all of A_from).
    pub fn sample_a_real(&self, from: f64, to: Option<f64>, rng: &mut CounterRng) -> f64 {
        let hi = a_n(from);
        let lo = to.map(a_n).unwrap_or(0.0);
        let mut u = Self::uniform_in(lo, hi, rng);
        if u <= 0.0 {
            u = f64::MIN_POSITIVE;
        }
        u
    }

    /// Uniform point of B_from \ B_to.
    pub fn sample_b_real(&self, from: f64, to: Option<f64>, rng: &mut CounterRng) -> f64 {
        let hi = self.b_right(from);
        let lo = to.map(|t| self.b_right(t)).unwrap_or(0.5);
        let mut u = Self::uniform_in(lo, hi, rng);
        if u <= 0.5 {
            u = 0.5 + f64::EPSILON / 2.0;
        }
        u
    }

    /// A point of E drawn through its digit stream: x = G^{-1}(V).
    pub fn sample_base_coord(&self, rng: &mut CounterRng) -> Coord {
        let key = rng.next_word();
        let v = crate::measure::conditional::digits_prefix(key);
        Coord { symbol: Symbol::Real(self.cond.inverse_cdf(v)), digits: Some(key) }
    }
}
