//! Radon–Nikodym exponents of the shift, Kakutani sums and second moments.
//!
//! For the ladder families f_{k-n}(x_k)/f_k(x_k) is a power of lambda, so
//! (T^n)'(x) = lambda^m with m = Σ_k [l_{k-n}(x_k) - l_k(x_k)] and
//! l_j = log_lambda f_j. Exponents are counted from marks, never taken from
//! logarithms of floating products.

pub mod group;
pub mod hopf;
pub mod moments;
pub mod window;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{Family, Ladder, Symbol};
use crate::stats::CompensatedSum;

pub use group::{group_kakutani, GroupKakutani};
pub use hopf::{hopf_diagnostic, HopfReport};
pub use moments::{second_moment, SecondMoment};
pub use window::{required_hi, tail_risk_at, SeedRecord, Window, DEFAULT_EPSILON};

/// lambda^exponent, with the tail risk of the window it was read from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaPower {
    pub exponent: i64,
    pub lambda: f64,
    pub tail_risk: f64,
}

impl LambdaPower {
    pub fn value(&self) -> f64 {
        self.lambda.powf(self.exponent as f64)
    }
}

/// l_n(s) = log_lambda f_n(s) in {-1, 0, 1}.
pub fn site_log(ladder: &dyn Ladder, n: i64, s: Symbol) -> Result<i64> {
    ladder.site_log(n, s)
}

/// Exponent m with (T^n)'(x) = lambda^m on the window's configuration.
pub fn rn_exponent(w: &Window, n: i64) -> Result<LambdaPower> {
    let tail_risk = w.check_shift(n)?;
    let first = w.ladder().first();
    let mut m = 0i64;
    if n != 0 {
        for (k, mark) in w.active_sites() {
            m += mark.log_at(k - n, first) - mark.log_at(k, first);
        }
    }
    Ok(LambdaPower { exponent: m, lambda: w.ladder().lambda(), tail_risk })
}

/// Exponents m(1), ..., m(N) in one pass, by a difference array over n.
pub fn rn_exponents_upto(w: &Window, n_max: i64) -> Result<Vec<i64>> {
    if n_max < 1 {
        return Ok(Vec::new());
    }
    w.check_shift(n_max)?;
    w.check_shift(1)?;
    let first = w.ladder().first();
    let len = n_max as usize;
    let mut diff = vec![0i64; len + 2];
    let mut base = 0i64;
    for (k, mark) in w.active_sites() {
        let s = mark.sign as i64;
        if k >= first && k <= mark.depth {
            base -= s;
        }
        // l_{k-n} = s for k - depth <= n <= k - first.
        let from = k.saturating_sub(mark.depth).max(1);
        let to = (k - first).min(n_max);
        if from <= to {
            diff[from as usize] += s;
            diff[to as usize + 1] -= s;
        }
    }
    let mut out = Vec::with_capacity(len);
    let mut run = 0i64;
    for d in diff.iter().take(len + 1).skip(1) {
        run += *d;
        out.push(run + base);
    }
    Ok(out)
}

/// Π over stored sites of f_{k-n}(x_k)/f_k(x_k), evaluated from the densities directly.
pub fn float_product(w: &Window, n: i64) -> Result<f64> {
    w.check_shift(n)?;
    let l = w.ladder();
    let mut p = 1.0;
    for (k, c, _) in w.sites() {
        p *= l.density_value(k - n, c.symbol)? / l.density_value(k, c.symbol)?;
    }
    Ok(p)
}

/// Lattice check: |float product / lambda^m - 1|.
pub fn lattice_error(w: &Window, n: i64) -> Result<f64> {
    let m = rn_exponent(w, n)?;
    let p = float_product(w, n)?;
    Ok((p / m.value() - 1.0).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KakutaniSum {
    pub partial: f64,
    pub tail_bound: f64,
    pub n_max: i64,
}

impl KakutaniSum {
    pub fn total(&self) -> f64 {
        self.partial + self.tail_bound
    }
}

/// Σ_{n <= N} ∫(√f_n - √f_{n-1})^2 in closed form per term, with telescoped tail.
pub fn kakutani_sum(family: &Family, n_max: i64) -> Result<KakutaniSum> {
    match family {
        Family::Continuous(l) => ladder_kakutani(l, n_max),
        Family::Countable(l) => ladder_kakutani(l, n_max),
        Family::TwoScale(t) => {
            check_n(n_max, 2)?;
            let (partial, tail_bound) = t.kakutani_sum(n_max);
            Ok(KakutaniSum { partial, tail_bound, n_max })
        }
        Family::BiasedPair(b) => {
            check_n(n_max, 2)?;
            let (partial, tail_bound) = b.kakutani_sum(n_max);
            Ok(KakutaniSum { partial, tail_bound, n_max })
        }
        Family::Group(_) => Err(Error::Parameter("the group family is handled by group_kakutani".into())),
    }
}

fn check_n(n_max: i64, first: i64) -> Result<()> {
    if n_max < first {
        return Err(Error::Domain(format!("Kakutani sum needs N >= {first}, got {n_max}")));
    }
    Ok(())
}

/// Per-level Kakutani term. At the first level f_{n-1} is trivial, so the
/// term covers all of A_n ∪ B_n; later terms cover A_{n-1}\A_n and B_{n-1}\B_n.
pub fn kakutani_term(ladder: &dyn Ladder, n: i64) -> f64 {
    let first = ladder.first();
    if n < first {
        return 0.0;
    }
    let lam = ladder.lambda();
    let wa = (1.0 - lam.sqrt()).powi(2);
    let wb = (1.0 / lam.sqrt() - 1.0).powi(2);
    if n == first {
        return wa * ladder.len_a(n) + wb * ladder.len_b(n);
    }
    wa * (ladder.len_a(n - 1) - ladder.len_a(n)) + wb * (ladder.len_b(n - 1) - ladder.len_b(n))
}

pub fn ladder_kakutani(ladder: &dyn Ladder, n_max: i64) -> Result<KakutaniSum> {
    check_n(n_max, ladder.first())?;
    let lam = ladder.lambda();
    let mut s = CompensatedSum::default();
    for n in ladder.first()..=n_max {
        s.add(kakutani_term(ladder, n));
    }
    let tail_bound = (1.0 - lam.sqrt()).powi(2) * ladder.len_a(n_max) + (1.0 / lam.sqrt() - 1.0).powi(2) * ladder.len_b(n_max);
    Ok(KakutaniSum { partial: s.value(), tail_bound, n_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{a_n, ContinuousLadder, Coord, CountableLadder, FamilySpec};
    use std::sync::Arc;

    fn cont(l: f64) -> Arc<dyn Ladder> {
        Arc::new(ContinuousLadder::new(l).unwrap())
    }

    #[test]
    fn site_log_examples() {
        let l = ContinuousLadder::new(0.5).unwrap();
        let in_a5 = 0.5 * a_n(5.0);
        let in_b5 = 0.5 + 0.25 * a_n(5.0);
        assert_eq!(site_log(&l, 5, Symbol::Real(in_a5)).unwrap(), 1);
        assert_eq!(site_log(&l, 5, Symbol::Real(in_b5)).unwrap(), -1);
        assert_eq!(site_log(&l, 0, Symbol::Real(in_a5)).unwrap(), 0);
    }

    #[test]
    fn single_site_exponent() {
        // x_k in A_{k-n} \ A_k, every other site neutral at both levels.
        let lad = cont(0.5);
        let (k, n) = (12i64, 4i64);
        let u = 0.5 * (a_n((k - n) as f64) + a_n(k as f64));
        let lo = 2;
        let mut coords = vec![Coord::real(0.9); 40];
        coords[(k - lo) as usize] = Coord::real(u);
        let w = Window::from_coords(lad, lo, coords).unwrap().with_epsilon(1.0);
        assert_eq!(rn_exponent(&w, n).unwrap().exponent, 1);
        assert_eq!(rn_exponent(&w, 0).unwrap().exponent, 0);
    }

    #[test]
    fn batch_matches_single() {
        let lad = cont(0.5);
        for s in 0..20 {
            let w = Window::for_shifts(Arc::clone(&lad), 1, 60, 1e-6, SeedRecord::new(5, s)).unwrap();
            let all = rn_exponents_upto(&w, 60).unwrap();
            for n in 1..=60 {
                assert_eq!(all[n as usize - 1], rn_exponent(&w, n).unwrap().exponent);
            }
        }
    }

    #[test]
    fn cocycle_identity() {
        for lad in [cont(0.3), Arc::new(CountableLadder::new(0.7).unwrap()) as Arc<dyn Ladder>] {
            for s in 0..200u64 {
                let a = (s % 13) as i64 - 6;
                let b = (s % 7) as i64 - 3;
                let w = Window::for_shifts(Arc::clone(&lad), -20, 20, 1e-6, SeedRecord::new(8, s)).unwrap();
                let lhs = rn_exponent(&w, a + b).unwrap().exponent;
                let shifted = w.shift(a).with_epsilon(1.0);
                let rhs = rn_exponent(&w, a).unwrap().exponent + rn_exponent(&shifted, b).unwrap().exponent;
                assert_eq!(lhs, rhs, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn lattice_property_small() {
        let lad = cont(0.5);
        for s in 0..30 {
            let w = Window::for_shifts(Arc::clone(&lad), -10, 10, 1e-6, SeedRecord::new(2, s)).unwrap();
            for n in -10..=10 {
                assert!(lattice_error(&w, n).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn kakutani_first_term() {
        let f = FamilySpec::continuous(0.5).build().unwrap();
        let k = kakutani_sum(&f, 2).unwrap();
        let a2 = a_n(2.0);
        let expect = (1.0 - 0.5f64.sqrt()).powi(2) * a2 + (2f64.sqrt() - 1.0).powi(2) * 0.5 * a2;
        assert!((k.partial - expect).abs() < 1e-15);
        let mut prev = k.partial;
        for n in [3, 10, 100, 1000] {
            let p = kakutani_sum(&f, n).unwrap().partial;
            assert!(p >= prev);
            prev = p;
        }
        assert!(kakutani_sum(&f, 1).is_err());
    }

    #[test]
    fn kakutani_total_telescopes() {
        for lam in [0.3, 0.5, 0.9] {
            let l = ContinuousLadder::new(lam).unwrap();
            let k = ladder_kakutani(&l, 10_000).unwrap();
            let closed = 2.0 * ((1.0 - lam.sqrt()).powi(2) * l.len_a_f(2.0) + (1.0 / lam.sqrt() - 1.0).powi(2) * l.len_b_f(2.0));
            assert!((k.total() - closed).abs() < 1e-14);
        }
    }
}
