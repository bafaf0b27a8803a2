//! Finite windows of a configuration x ~ ⊗ f_k with certified truncation.
//!
//! A window stores every coordinate on [lo, dense_hi]. Beyond that, up to
//! hi, only sites whose mark reaches level k - reach are sampled
//! (Bernoulli thinning with a geometric skip); every other site there is
//! known to be inactive from that level on, which is all the cocycle needs
//! for shifts |n| <= reach. Sites right of hi are unknown and accounted for
//! by the tail risk.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Coord, Ladder, Mark};
use crate::stats::{derive_seed, CounterRng, GENERATOR_ID};

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Where a window's randomness came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub stream: u64,
    pub generator: String,
}

impl SeedRecord {
    pub fn new(master: u64, stream: u64) -> Self {
        SeedRecord { master, stream, generator: GENERATOR_ID.to_string() }
    }

    pub fn rng(&self) -> CounterRng {
        CounterRng::new(derive_seed(self.master, self.stream))
    }
}

#[derive(Clone, Debug)]
pub struct Window {
    ladder: Arc<dyn Ladder>,
    lo: i64,
    hi: i64,
    dense: Vec<(Coord, Mark)>,
    sparse: BTreeMap<i64, (Coord, Mark)>,
    /// Absent sites j in (dense_hi, hi] have depth < j + sparse_offset.
    sparse_offset: i64,
    /// Net shift applied since sampling.
    offset: i64,
    epsilon: f64,
    seed: Option<SeedRecord>,
}

impl Window {
    /// Sample every site of [lo, hi] from its own density.
    pub fn sample_full(ladder: Arc<dyn Ladder>, lo: i64, hi: i64, seed: SeedRecord) -> Result<Self> {
        let reach = (hi - lo).max(hi - ladder.first()).max(0);
        Self::sample(ladder, lo, hi, reach, seed)
    }

    /// Sample [lo, hi] densely up to first + reach and thinned beyond.
    pub fn sample(ladder: Arc<dyn Ladder>, lo: i64, hi: i64, reach: i64, seed: SeedRecord) -> Result<Self> {
        if hi < lo {
            return Err(Error::Window(format!("empty range [{lo}, {hi}]")));
        }
        if reach < 0 {
            return Err(Error::Parameter(format!("reach must be nonnegative, got {reach}")));
        }
        let mut rng = seed.rng();
        let first = ladder.first();
        let dense_hi = hi.min(first.saturating_add(reach).max(lo - 1));
        let mut dense = Vec::with_capacity((dense_hi - lo + 1).max(0) as usize);
        for k in lo..=dense_hi {
            let c = ladder.sample_site(k, &mut rng);
            let m = ladder.mark(c.symbol)?;
            dense.push((c, m));
        }
        let mut sparse = BTreeMap::new();
        let mut k = dense_hi + 1;
        while k <= hi {
            let bound = ladder.active_mass_bound(k - reach);
            let v = rng.next_open_f64();
            let skip = if bound >= 1.0 { 0.0 } else { (v.ln() / (-bound).ln_1p()).floor() };
            if skip >= (hi - k + 1) as f64 {
                break;
            }
            k += skip as i64;
            if let Some(c) = ladder.sample_active(k, k - reach, bound, &mut rng) {
                let m = ladder.mark(c.symbol)?;
                sparse.insert(k, (c, m));
            }
            k += 1;
        }
        Ok(Window {
            ladder,
            lo,
            hi,
            dense,
            sparse,
            sparse_offset: -reach,
            offset: 0,
            epsilon: DEFAULT_EPSILON,
            seed: Some(seed),
        })
    }

    /// Smallest window that certifies every shift in [min_shift, max_shift] at tolerance eps.
    pub fn for_shifts(ladder: Arc<dyn Ladder>, min_shift: i64, max_shift: i64, eps: f64, seed: SeedRecord) -> Result<Self> {
        if min_shift > max_shift {
            return Err(Error::Parameter("empty shift range".into()));
        }
        let first = ladder.first();
        let lo = first.min(first + min_shift);
        let mut hi = first;
        for n in [min_shift, max_shift] {
            hi = hi.max(required_hi(ladder.as_ref(), n, eps, false));
        }
        let reach = min_shift.abs().max(max_shift.abs());
        Ok(Self::sample(ladder, lo, hi, reach, seed)?.with_epsilon(eps))
    }

    /// A window with explicitly given coordinates on [lo, lo + len).
    pub fn from_coords(ladder: Arc<dyn Ladder>, lo: i64, coords: Vec<Coord>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Window("no coordinates".into()));
        }
        let mut dense = Vec::with_capacity(coords.len());
        for c in coords {
            let m = ladder.mark(c.symbol)?;
            dense.push((c, m));
        }
        let hi = lo + dense.len() as i64 - 1;
        Ok(Window {
            ladder,
            lo,
            hi,
            dense,
            sparse: BTreeMap::new(),
            sparse_offset: i64::MIN / 4,
            offset: 0,
            epsilon: DEFAULT_EPSILON,
            seed: None,
        })
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = eps;
        self
    }

    pub fn ladder(&self) -> &dyn Ladder {
        self.ladder.as_ref()
    }

    pub fn ladder_arc(&self) -> Arc<dyn Ladder> {
        Arc::clone(&self.ladder)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn dense_hi(&self) -> i64 {
        self.lo + self.dense.len() as i64 - 1
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> Option<&SeedRecord> {
        self.seed.as_ref()
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Stored coordinate at site k: Ok(None) for a thinned-out site.
    pub fn coord(&self, k: i64) -> Result<Option<Coord>> {
        if k < self.lo || k > self.hi {
            return Err(Error::Window(format!("site {k} outside [{}, {}]", self.lo, self.hi)));
        }
        if k <= self.dense_hi() {
            return Ok(Some(self.dense[(k - self.lo) as usize].0));
        }
        Ok(self.sparse.get(&k).map(|e| e.0))
    }

    pub fn mark(&self, k: i64) -> Result<Option<Mark>> {
        if k < self.lo || k > self.hi {
            return Err(Error::Window(format!("site {k} outside [{}, {}]", self.lo, self.hi)));
        }
        if k <= self.dense_hi() {
            return Ok(Some(self.dense[(k - self.lo) as usize].1));
        }
        Ok(self.sparse.get(&k).map(|e| e.1))
    }

    /// Every stored site in increasing order.
    pub fn sites(&self) -> impl Iterator<Item = (i64, &Coord, &Mark)> + '_ {
        let lo = self.lo;
        self.dense
            .iter()
            .enumerate()
            .map(move |(i, (c, m))| (lo + i as i64, c, m))
            .chain(self.sparse.iter().map(|(&k, (c, m))| (k, c, m)))
    }

    /// Stored sites whose mark is not neutral.
    pub fn active_sites(&self) -> impl Iterator<Item = (i64, Mark)> + '_ {
        self.sites().filter(|(_, _, m)| m.sign != 0).map(|(k, _, m)| (k, *m))
    }

    /// The window of y = T^a x, y_j = x_{j+a}.
    pub fn shift(&self, a: i64) -> Window {
        let mut w = self.clone();
        w.lo -= a;
        w.hi -= a;
        w.sparse = self.sparse.iter().map(|(&k, v)| (k - a, *v)).collect();
        w.sparse_offset = self.sparse_offset.saturating_add(a);
        w.offset += a;
        w
    }

    /// Probability bound that a site right of hi contributes to the exponent of shift n.
    pub fn tail_risk(&self, n: i64) -> f64 {
        tail_risk_at(self.ladder.as_ref(), self.hi, n, self.offset != 0)
    }

    /// Check that the exponent at shift n is determined by the stored sites.
    pub fn check_shift(&self, n: i64) -> Result<f64> {
        let first = self.ladder.first();
        if self.lo > first.min(first + n) {
            return Err(Error::Window(format!(
                "shift {n} needs sites from {} on, window starts at {}",
                first.min(first + n),
                self.lo
            )));
        }
        if self.sparse_offset > i64::MIN / 8 && self.dense_hi() < self.hi && n.max(0) > -self.sparse_offset {
            return Err(Error::Window(format!(
                "shift {n} exceeds the thinning reach {} of this window",
                -self.sparse_offset
            )));
        }
        let risk = self.tail_risk(n);
        if risk > self.epsilon {
            return Err(Error::Truncation {
                shift: n,
                tail_risk: risk,
                epsilon: self.epsilon,
                required_hi: required_hi(self.ladder.as_ref(), n, self.epsilon, self.offset != 0),
            });
        }
        Ok(risk)
    }
}

/// Tail bound for a window ending at hi. `shifted` selects the bound valid
/// for windows whose sites no longer carry their own density.
pub fn tail_risk_at(ladder: &dyn Ladder, hi: i64, n: i64, shifted: bool) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let first = ladder.first();
    let lam = ladder.lambda();
    let (from, to) = if n > 0 { (hi - n + 1, hi) } else { (hi + 1, hi - n) };
    let from = from.max(first);
    let mut s = 0.0;
    for j in from..=to {
        let (a, b) = (ladder.len_a(j), ladder.len_b(j));
        s += if shifted {
            a + b / lam
        } else if n > 0 {
            a + b
        } else {
            lam * a + b / lam
        };
    }
    s.min(1.0)
}

/// Smallest hi with tail_risk_at(hi, n) <= eps.
pub fn required_hi(ladder: &dyn Ladder, n: i64, eps: f64, shifted: bool) -> i64 {
    let first = ladder.first();
    let ok = |hi: i64| tail_risk_at(ladder, hi, n, shifted) <= eps;
    let mut lo = first - 1;
    let mut hi = first.max(first + n);
    while !ok(hi) {
        lo = hi;
        hi = hi.saturating_mul(2).max(hi + 1);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{ContinuousLadder, CountableLadder};

    fn cont(l: f64) -> Arc<dyn Ladder> {
        Arc::new(ContinuousLadder::new(l).unwrap())
    }

    #[test]
    fn dense_window_has_every_site() {
        let w = Window::sample_full(cont(0.5), -3, 50, SeedRecord::new(1, 0)).unwrap();
        for k in -3..=50 {
            assert!(w.coord(k).unwrap().is_some());
        }
        assert!(w.coord(51).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = Window::for_shifts(cont(0.5), -10, 10, 1e-6, SeedRecord::new(9, 4)).unwrap();
        let b = Window::for_shifts(cont(0.5), -10, 10, 1e-6, SeedRecord::new(9, 4)).unwrap();
        let xs: Vec<_> = a.sites().map(|(k, c, _)| (k, *c)).collect();
        let ys: Vec<_> = b.sites().map(|(k, c, _)| (k, *c)).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn tail_risk_matches_direct_sum() {
        let l = ContinuousLadder::new(0.5).unwrap();
        let hi = 1000;
        let n = 7;
        // Σ_{k>hi} (1+λ)(a_{k-n} - a_k) summed far out plus the telescoped remainder.
        let mut direct = 0.0;
        for k in hi + 1..=hi + 2_000_000 {
            direct += 1.5 * (l.a((k - n) as f64) - l.a(k as f64));
        }
        for j in hi + 2_000_000 - n + 1..=hi + 2_000_000 {
            direct += 1.5 * l.a(j as f64);
        }
        let risk = tail_risk_at(&l, hi, n, false);
        assert!((risk - direct).abs() < 1e-9 * direct, "{risk} vs {direct}");
    }

    #[test]
    fn required_hi_is_minimal() {
        let l = CountableLadder::new(0.5).unwrap();
        for n in [-5i64, 1, 30] {
            let hi = required_hi(&l, n, 1e-6, false);
            assert!(tail_risk_at(&l, hi, n, false) <= 1e-6);
            assert!(tail_risk_at(&l, hi - 1, n, false) > 1e-6);
        }
    }

    #[test]
    fn narrow_window_refuses() {
        let w = Window::sample_full(cont(0.5), -5, 200, SeedRecord::new(3, 0)).unwrap();
        match w.check_shift(3) {
            Err(Error::Truncation { required_hi, .. }) => assert!(required_hi > 200),
            other => panic!("expected truncation, got {other:?}"),
        }
        assert!(matches!(w.check_shift(-10), Err(Error::Window(_))));
    }

    #[test]
    fn thinned_sites_are_inactive_beyond_reach() {
        let reach = 20;
        let l = cont(0.3);
        for s in 0..50 {
            let w = Window::sample(Arc::clone(&l), 0, 200_000, reach, SeedRecord::new(11, s)).unwrap();
            for (k, _, m) in w.sites() {
                if k > w.dense_hi() {
                    assert!(m.depth >= k - reach);
                }
            }
        }
    }

    #[test]
    fn thinning_matches_dense_frequency() {
        // Count sites in (first+reach, hi] with depth >= k - reach: the thinned
        // sampler and the dense sampler must agree in distribution.
        let l = cont(0.5);
        let (hi, reach) = (3000i64, 5i64);
        let trials = 2000;
        let count = |dense: bool| -> f64 {
            let mut total = 0u64;
            for s in 0..trials {
                let seed = SeedRecord::new(if dense { 100 } else { 200 }, s);
                let w = if dense {
                    Window::sample_full(Arc::clone(&l), 2, hi, seed).unwrap()
                } else {
                    Window::sample(Arc::clone(&l), 2, hi, reach, seed).unwrap()
                };
                total += w
                    .sites()
                    .filter(|(k, _, m)| *k > 2 + reach && m.sign != 0 && m.depth >= k - reach)
                    .count() as u64;
            }
            total as f64 / trials as f64
        };
        let (d, t) = (count(true), count(false));
        // Expected count is about 1.5 Σ a_{k-5}; both means have sd ~ sqrt(mean/trials).
        let sd = (d.max(t) / trials as f64).sqrt();
        assert!((d - t).abs() < 5.0 * sd * std::f64::consts::SQRT_2, "dense {d} thinned {t}");
    }
}
