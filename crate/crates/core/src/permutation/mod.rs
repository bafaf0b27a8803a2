//! Transpositions x_j <-> x_{2^j}, the walk Σ Y_j, its stopping time and the
//! partial map V with dμ∘V/dμ = lambda.
//!
//! Y_j = 1_C(x_j) 1_{A_j \ A_{2^j}}(x_{2^j}) - 1_{A_j \ A_{2^j}}(x_j) 1_C(x_{2^j})
//! with C_j = [0,1] \ (A_j ∪ B_j). Removing A_{2^j} from the A-indicator is
//! what makes each swap with Y_j = ±1 carry RN exponent exactly ±1; the
//! expectation (1 - lambda)|C_j|(|A_j| - |A_{2^j}|) is the same either way.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::piecewise::PiecewiseUniform;
use crate::measure::{ContinuousLadder, Region};
use crate::stats::CounterRng;

/// A site: an ordinary index or the power of two 2^j (too large for an integer).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Site {
    Plain(u64),
    Pow2(u32),
}

impl Site {
    pub fn level(&self) -> f64 {
        match *self {
            Site::Plain(k) => k as f64,
            Site::Pow2(j) => 2f64.powi(j as i32),
        }
    }
}

pub fn is_power_of_two(j: u64) -> bool {
    j != 0 && j & (j - 1) == 0
}

/// Coordinates x_k for 0 <= k <= M together with the partners x_{2^j}, 2^j > M.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicWindow {
    ladder: ContinuousLadder,
    m: u64,
    base: Vec<f64>,
    partners: BTreeMap<u32, f64>,
}

/// Density f_level as a piecewise-uniform law on [0,1].
pub fn site_law(ladder: &ContinuousLadder, level: f64) -> PiecewiseUniform {
    if level < ladder.first() as f64 {
        return PiecewiseUniform::new(vec![0.0, 1.0], vec![1.0]).expect("unit law");
    }
    let lam = ladder.lambda();
    let a = ladder.a(level);
    let b = ladder.b_right(level);
    PiecewiseUniform::new(vec![0.0, a, 0.5, b, 1.0], vec![lam, 1.0, 1.0 / lam, 1.0]).expect("valid law")
}

/// Draw x ~ f_level directly from the ladder masses.
pub fn sample_at_level(ladder: &ContinuousLadder, level: f64, rng: &mut CounterRng) -> f64 {
    let first = ladder.first() as f64;
    let lam = ladder.lambda();
    let (a1, b1) = (ladder.len_a_f(first), ladder.len_b_f(first));
    let u = rng.next_f64();
    if level < first {
        if u < a1 {
            return ladder.sample_a_real(first, None, rng);
        }
        if u < a1 + b1 {
            return ladder.sample_b_real(first, None, rng);
        }
        return ladder.sample_base_coord(rng).as_real().expect("real");
    }
    let (an, bn) = (ladder.len_a_f(level), ladder.len_b_f(level));
    let mut acc = lam * an;
    if u < acc {
        return ladder.sample_a_real(level, None, rng);
    }
    acc += a1 - an;
    if u < acc {
        return ladder.sample_a_real(first, Some(level), rng);
    }
    acc += bn / lam;
    if u < acc {
        return ladder.sample_b_real(level, None, rng);
    }
    acc += b1 - bn;
    if u < acc {
        return ladder.sample_b_real(first, Some(level), rng);
    }
    ladder.sample_base_coord(rng).as_real().expect("real")
}

impl DyadicWindow {
    /// Sample x_0..x_M and every partner 2^j > M with N < j <= M.
    pub fn sample(ladder: &ContinuousLadder, n: u64, m: u64, rng: &mut CounterRng) -> Self {
        let base = (0..=m).map(|k| sample_at_level(ladder, k as f64, rng)).collect();
        Self::with_base(ladder, n, m, base, rng)
    }

    /// Use given x_0..x_M and sample the remaining partners.
    pub fn with_base(ladder: &ContinuousLadder, n: u64, m: u64, base: Vec<f64>, rng: &mut CounterRng) -> Self {
        let mut partners = BTreeMap::new();
        for j in n + 1..=m {
            if !is_power_of_two(j) && (j >= 64 || (1u64 << j) > m) {
                let level = 2f64.powi(j as i32);
                partners.insert(j as u32, sample_at_level(ladder, level, rng));
            }
        }
        DyadicWindow { ladder: ladder.clone(), m, base, partners }
    }

    pub fn ladder(&self) -> &ContinuousLadder {
        &self.ladder
    }

    pub fn horizon(&self) -> u64 {
        self.m
    }

    /// Canonical site of 2^j.
    pub fn partner(&self, j: u64) -> Site {
        if j < 64 && (1u64 << j) <= self.m {
            Site::Plain(1u64 << j)
        } else {
            Site::Pow2(j as u32)
        }
    }

    pub fn get(&self, s: Site) -> Result<f64> {
        match s {
            Site::Plain(k) if k <= self.m => Ok(self.base[k as usize]),
            Site::Plain(k) => Err(Error::Window(format!("site {k} beyond horizon {}", self.m))),
            Site::Pow2(j) => self.partners.get(&j).copied().ok_or_else(|| Error::Window(format!("partner 2^{j} not sampled"))),
        }
    }

    fn set(&mut self, s: Site, v: f64) {
        match s {
            Site::Plain(k) => self.base[k as usize] = v,
            Site::Pow2(j) => {
                self.partners.insert(j, v);
            }
        }
    }

    pub fn swap(&mut self, a: Site, b: Site) -> Result<()> {
        let (xa, xb) = (self.get(a)?, self.get(b)?);
        self.set(a, xb);
        self.set(b, xa);
        Ok(())
    }

    /// Every stored value in a fixed order, for hashing.
    pub fn fingerprint(&self) -> Vec<u64> {
        self.base.iter().chain(self.partners.values()).map(|v| v.to_bits()).collect()
    }
}

fn region_at(ladder: &ContinuousLadder, u: f64, level: f64) -> Result<Region> {
    ladder.classify_at(u, level)
}

fn log_at(ladder: &ContinuousLadder, u: f64, level: f64) -> Result<i64> {
    Ok(match region_at(ladder, u, level)? {
        Region::InA => 1,
        Region::InB => -1,
        Region::Neutral => 0,
    })
}

/// Exponent of f_a(x_b) f_b(x_a) / (f_a(x_a) f_b(x_b)).
pub fn transposition_rn(w: &DyadicWindow, a: Site, b: Site) -> Result<i64> {
    if a == b {
        return Ok(0);
    }
    let (xa, xb) = (w.get(a)?, w.get(b)?);
    let (la, lb) = (a.level(), b.level());
    let l = &w.ladder;
    Ok(log_at(l, xb, la)? + log_at(l, xa, lb)? - log_at(l, xa, la)? - log_at(l, xb, lb)?)
}

/// 1 on C_j, 2 on A_j \ A_{2^j}, 0 otherwise.
fn y_class(l: &ContinuousLadder, u: f64, j: u64) -> Result<u8> {
    let lj = j as f64;
    Ok(match region_at(l, u, lj)? {
        Region::Neutral => 1,
        Region::InA if region_at(l, u, 2f64.powi(j as i32))? != Region::InA => 2,
        _ => 0,
    })
}

pub fn y_value(w: &DyadicWindow, j: u64) -> Result<i8> {
    if j > w.m {
        return Err(Error::Window(format!("index {j} beyond horizon {}", w.m)));
    }
    if j < 2 || is_power_of_two(j) {
        return Ok(0);
    }
    let xj = w.get(Site::Plain(j))?;
    let xp = w.get(w.partner(j))?;
    let (cj, cp) = (y_class(&w.ladder, xj, j)?, y_class(&w.ladder, xp, j)?);
    Ok(match (cj, cp) {
        (1, 2) => 1,
        (2, 1) => -1,
        _ => 0,
    })
}

/// (1 - lambda)|C_j|(|A_j| - |A_{2^j}|), zero at powers of two.
pub fn expected_y(ladder: &ContinuousLadder, j: u64) -> f64 {
    if j < 2 || is_power_of_two(j) {
        return 0.0;
    }
    let (p, q) = y_probabilities(ladder, j);
    p - q
}

/// (P(Y_j = 1), P(Y_j = -1)).
pub fn y_probabilities(ladder: &ContinuousLadder, j: u64) -> (f64, f64) {
    if j < 2 || is_power_of_two(j) {
        return (0.0, 0.0);
    }
    let lam = ladder.lambda();
    let lj = j as f64;
    let c = 1.0 - ladder.len_a_f(lj) - ladder.len_b_f(lj);
    let d = ladder.len_a_f(lj) - ladder.len_a_f(2f64.powi(j as i32));
    (c * d, lam * d * c)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SwapPlan {
    pub n: u64,
    pub m: u64,
    /// (j, partner of j, Y_j) for N < j <= M.
    pub steps: Vec<(u64, Site, i8)>,
    pub tau: Option<u64>,
}

impl SwapPlan {
    pub fn build(w: &DyadicWindow, n: u64, m: u64) -> Result<Self> {
        if m > w.m {
            return Err(Error::Window(format!("horizon {m} beyond window horizon {}", w.m)));
        }
        let mut steps = Vec::with_capacity((m.saturating_sub(n)) as usize);
        let mut sum = 0i64;
        let mut tau = None;
        for j in n + 1..=m {
            let y = y_value(w, j)?;
            steps.push((j, w.partner(j), y));
            sum += y as i64;
            if tau.is_none() && sum == 1 {
                tau = Some(j);
            }
        }
        Ok(SwapPlan { n, m, steps, tau })
    }
}

pub fn find_tau(w: &DyadicWindow, n: u64, m: u64) -> Result<Option<u64>> {
    Ok(SwapPlan::build(w, n, m)?.tau)
}

/// Vx: swap x_j and x_{2^j} for every j in (N, tau] with Y_j != 0. The
/// returned exponent is recomputed from the transpositions, not from Y.
pub fn apply_v(w: &DyadicWindow, n: u64, m: u64) -> Result<(DyadicWindow, i64)> {
    let plan = SwapPlan::build(w, n, m)?;
    let tau = plan.tau.ok_or_else(|| Error::NotInDomain(format!("no stopping time in ({n}, {m}]")))?;
    let mut out = w.clone();
    let mut exponent = 0i64;
    for &(j, p, y) in plan.steps.iter().take_while(|s| s.0 <= tau) {
        if y != 0 {
            exponent += transposition_rn(w, Site::Plain(j), p)?;
            out.swap(Site::Plain(j), p)?;
        }
    }
    Ok((out, exponent))
}

/// Undo apply_v given the original plan.
pub fn apply_swaps(w: &DyadicWindow, plan: &SwapPlan) -> Result<DyadicWindow> {
    let mut out = w.clone();
    if let Some(tau) = plan.tau {
        for &(j, p, y) in plan.steps.iter().take_while(|s| s.0 <= tau) {
            if y != 0 {
                out.swap(Site::Plain(j), p)?;
            }
        }
    }
    Ok(out)
}

/// P(τ <= M) from the independent step laws, by dynamic programming.
pub fn exact_success_probability(ladder: &ContinuousLadder, n: u64, m: u64) -> f64 {
    // dist[d] = P(sum = -d, not yet absorbed)
    let mut dist = vec![1.0f64];
    let mut hit = 0.0;
    for j in n + 1..=m {
        let (p, q) = y_probabilities(ladder, j);
        if p == 0.0 && q == 0.0 {
            continue;
        }
        let mut next = vec![0.0; dist.len() + 1];
        for (d, &w) in dist.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            next[d] += w * (1.0 - p - q);
            next[d + 1] += w * q;
            if d == 0 {
                hit += w * p;
            } else {
                next[d - 1] += w * p;
            }
        }
        dist = next;
    }
    hit
}

/// Σ_{j <= M} Y_j with x_j, x_{2^j} drawn only where Y_j can be nonzero.
///
/// Y_j != 0 needs x_j ∈ A_j or x_{2^j} ∈ A_j. Candidates come from a
/// geometric skip with the bound (1 + lambda) a_j; at a candidate that
/// union event is accepted with its exact probability over the bound and
/// the pair is drawn conditioned on it.
pub fn sum_y_thinned(ladder: &ContinuousLadder, n: u64, m: u64, rng: &mut CounterRng) -> i64 {
    let lam = ladder.lambda();
    let first = ladder.first() as u64;
    let mut j = (n + 1).max(first);
    let mut sum = 0i64;
    while j <= m {
        let bound = ((1.0 + lam) * ladder.len_a_f(j as f64)).min(1.0);
        let v = rng.next_open_f64();
        let skip = if bound >= 1.0 { 0.0 } else { (v.ln() / (-bound).ln_1p()).floor() };
        if skip > (m - j) as f64 {
            break;
        }
        j += skip as u64;
        if !is_power_of_two(j) {
            let lj = j as f64;
            let level2 = 2f64.powi(j as i32);
            let p1 = lam * ladder.len_a_f(lj);
            let p2 = ladder.len_a_f(lj) - (1.0 - lam) * ladder.len_a_f(level2);
            let union = p1 + p2 - p1 * p2;
            if rng.next_f64() * bound < union {
                let law_j = site_law(ladder, lj);
                let law_p = site_law(ladder, level2);
                let a = ladder.len_a_f(lj);
                let (xj, xp) = if rng.next_f64() * union < p1 {
                    (law_j.restrict(0.0, a).expect("A_j").sample(rng), law_p.sample(rng))
                } else {
                    let xj = loop {
                        let u = law_j.sample(rng);
                        if u >= a {
                            break u;
                        }
                    };
                    (xj, law_p.restrict(0.0, a).expect("A_j").sample(rng))
                };
                let cj = y_class(ladder, xj, j).expect("valid coordinate");
                let cp = y_class(ladder, xp, j).expect("valid coordinate");
                sum += match (cj, cp) {
                    (1, 2) => 1,
                    (2, 1) => -1,
                    _ => 0,
                };
            }
        }
        j += 1;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::a_n;

    fn ladder() -> ContinuousLadder {
        ContinuousLadder::new(0.5).unwrap()
    }

    fn window_with(base: Vec<f64>, partners: &[(u32, f64)]) -> DyadicWindow {
        let m = base.len() as u64 - 1;
        DyadicWindow { ladder: ladder(), m, base, partners: partners.iter().copied().collect() }
    }

    #[test]
    fn y_examples() {
        let l = ladder();
        let j = 5u64;
        let mut base = vec![0.9; 40];
        // x_j in C_j, partner x_32 in A_5 \ A_32.
        base[32] = 0.5 * (a_n(5.0) + a_n(32.0));
        let w = window_with(base.clone(), &[]);
        assert_eq!(y_value(&w, j).unwrap(), 1);
        // Partner deep inside A_32: the swap would not move the RN value, Y = 0.
        base[32] = 0.5 * a_n(32.0);
        assert_eq!(y_value(&window_with(base.clone(), &[]), j).unwrap(), 0);
        // x_j in B_j.
        base[5] = 0.5 + 0.5 * l.len_b_f(5.0);
        assert_eq!(y_value(&window_with(base.clone(), &[]), j).unwrap(), 0);
        assert_eq!(y_value(&window_with(base, &[]), 8).unwrap(), 0);
    }

    #[test]
    fn expected_y_values() {
        let l = ladder();
        assert_eq!(expected_y(&l, 8), 0.0);
        let a3 = a_n(3.0);
        let want = 0.5 * (1.0 - 1.5 * a3) * (a3 - a_n(8.0));
        // |B_3| is the layout length, one ulp from 0.5 a_3.
        assert!((expected_y(&l, 3) - want).abs() < 1e-15);
    }

    #[test]
    fn tau_is_first_hit() {
        let plan = SwapPlan { n: 4, m: 8, steps: vec![], tau: None };
        assert!(plan.tau.is_none());
        let l = ladder();
        let mut rng = CounterRng::new(3);
        for _ in 0..500 {
            let w = DyadicWindow::sample(&l, 2, 40, &mut rng);
            let plan = SwapPlan::build(&w, 2, 40).unwrap();
            let mut s = 0i64;
            for &(j, _, y) in &plan.steps {
                s += y as i64;
                if Some(j) == plan.tau {
                    assert_eq!(s, 1);
                    break;
                }
                assert!(s <= 0);
            }
        }
    }

    #[test]
    fn v_has_exponent_one_and_inverts() {
        let l = ladder();
        let mut rng = CounterRng::new(4);
        let mut seen = 0;
        for _ in 0..3000 {
            let w = DyadicWindow::sample(&l, 0, 128, &mut rng);
            let plan = SwapPlan::build(&w, 0, 128).unwrap();
            match apply_v(&w, 0, 128) {
                Ok((v, e)) => {
                    seen += 1;
                    assert_eq!(e, 1);
                    assert_eq!(apply_swaps(&v, &plan).unwrap(), w);
                }
                Err(Error::NotInDomain(_)) => assert!(plan.tau.is_none()),
                Err(e) => panic!("{e}"),
            }
        }
        assert!(seen > 500);
    }

    #[test]
    fn transposition_examples() {
        let mut base = vec![0.9; 10];
        let w = window_with(base.clone(), &[]);
        assert_eq!(transposition_rn(&w, Site::Plain(4), Site::Plain(4)).unwrap(), 0);
        // x_a neutral at a = 6, x_b in A_6 with b = 1 trivial.
        base[1] = 0.5 * a_n(6.0);
        let w = window_with(base, &[]);
        assert_eq!(transposition_rn(&w, Site::Plain(6), Site::Plain(1)).unwrap(), 1);
    }

    #[test]
    fn dp_matches_simulation() {
        let l = ladder();
        let exact = exact_success_probability(&l, 0, 64);
        let mut rng = CounterRng::new(5);
        let trials = 20_000;
        let mut hits = 0;
        for _ in 0..trials {
            let w = DyadicWindow::sample(&l, 0, 64, &mut rng);
            if find_tau(&w, 0, 64).unwrap().is_some() {
                hits += 1;
            }
        }
        let p = hits as f64 / trials as f64;
        let se = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((p - exact).abs() < 4.0 * se, "{p} vs {exact}");
    }

    #[test]
    fn thinned_sum_matches_mean() {
        let l = ladder();
        let m = 5000u64;
        let mean: f64 = (2..=m).map(|j| expected_y(&l, j)).sum();
        let var: f64 = (2..=m)
            .map(|j| {
                let (p, q) = y_probabilities(&l, j);
                p + q - (p - q) * (p - q)
            })
            .sum();
        let trials = 40_000;
        let mut rng = CounterRng::new(6);
        let s: i64 = (0..trials).map(|_| sum_y_thinned(&l, 0, m, &mut rng)).sum();
        let est = s as f64 / trials as f64;
        assert!((est - mean).abs() < 4.0 * (var / trials as f64).sqrt(), "{est} vs {mean}");
    }
}
