//! Two families of type III_1.
//!
//! `TwoScaleFamily` runs two ladders at once: (A_n, B_n) with values
//! (lambda, 1/lambda) and (D_n, E_n) with values (delta, 1/delta), where
//! log delta / log lambda is irrational. `BiasedPairFamily` has
//! f_n = lambda_n on [0, 1/2) and 2 - lambda_n on [1/2, 1] with
//! lambda_n = 1 - 1/sqrt(n ln n).

use super::ladder::a_n;
use super::piecewise::PiecewiseUniform;
use super::{ConditionalSpec, Coord, Symbol};
use crate::error::{Error, Result};
use crate::stats::CounterRng;

#[derive(Clone, Debug, PartialEq)]
pub struct TwoScaleFamily {
    lambda: f64,
    delta: f64,
}

impl TwoScaleFamily {
    pub fn new(lambda: f64, delta: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("delta", delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Parameter(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        // A small-denominator rational ratio would put the ratio set on a lattice.
        let ratio = delta.ln() / lambda.ln();
        for q in 1..=12i64 {
            let p = (ratio * q as f64).round();
            if (ratio * q as f64 - p).abs() < 1e-9 {
                return Err(Error::Parameter(format!("log delta / log lambda is close to {p}/{q}")));
            }
        }
        Ok(TwoScaleFamily { lambda, delta })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// (|A_n|, |B_n|, |D_n|, |E_n|) for n >= 2.
    pub fn lengths(&self, n: i64) -> Result<[f64; 4]> {
        if n < 2 {
            return Err(Error::Domain(format!("two-scale ladder starts at 2, got {n}")));
        }
        let a = a_n(n as f64);
        Ok([a, self.lambda * a, a, self.delta * a])
    }

    /// Interval layout: A in (0, 1/4), D in (1/4, 1/2), B in (1/2, 3/4), E in (3/4, 1).
    pub fn intervals(&self, n: i64) -> Result<[(f64, f64); 4]> {
        let [la, lb, ld, le] = self.lengths(n)?;
        Ok([(0.0, la), (0.5, 0.5 + lb), (0.25, 0.25 + ld), (0.75, 0.75 + le)])
    }

    fn density(&self, n: i64) -> PiecewiseUniform {
        if n < 2 {
            return PiecewiseUniform::new(vec![0.0, 1.0], vec![1.0]).expect("unit density");
        }
        let [(_, a), (_, b), (_, d), (_, e)] = self.intervals(n).expect("n >= 2");
        let (lam, del) = (self.lambda, self.delta);
        PiecewiseUniform::new(
            vec![0.0, a, 0.25, d, 0.5, b, 0.75, e, 1.0],
            vec![lam, 1.0, del, 1.0, 1.0 / lam, 1.0, 1.0 / del, 1.0],
        )
        .expect("valid layout")
    }

    pub fn density_value(&self, n: i64, u: f64) -> Result<f64> {
        if n < 2 {
            return Ok(1.0);
        }
        let [(_, a), (_, b), (_, d), (_, e)] = self.intervals(n)?;
        Ok(if u > 0.0 && u < a {
            self.lambda
        } else if u > 0.5 && u < b {
            1.0 / self.lambda
        } else if u > 0.25 && u < d {
            self.delta
        } else if u > 0.75 && u < e {
            1.0 / self.delta
        } else {
            1.0
        })
    }

    pub fn integral(&self, n: i64) -> f64 {
        if n < 2 {
            return 1.0;
        }
        let [la, lb, ld, le] = self.lengths(n).expect("n >= 2");
        self.lambda * la + lb / self.lambda + self.delta * ld + le / self.delta + (1.0 - la - lb - ld - le)
    }

    pub fn sample_site(&self, n: i64, rng: &mut CounterRng) -> f64 {
        self.density(n).sample(rng)
    }

    /// Closed-form sum of the integrals of (sqrt f_n - sqrt f_{n-1})^2 over 2 <= n <= N, with telescoping tail.
    pub fn kakutani_sum(&self, n_max: i64) -> (f64, f64) {
        let kl = 2.0 * (1.0 - self.lambda.sqrt()).powi(2);
        let kd = 2.0 * (1.0 - self.delta.sqrt()).powi(2);
        let mut partial = 0.0;
        for n in 2..=n_max {
            let prev = if n == 2 { 0.0 } else { a_n((n - 1) as f64) };
            partial += (kl + kd) * (a_n(n as f64) - prev).abs();
        }
        (partial, (kl + kd) * a_n(n_max as f64))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BiasedPairFamily;

impl BiasedPairFamily {
    pub fn new() -> Self {
        BiasedPairFamily
    }

    /// lambda_n = 1 - 1/sqrt(n ln n) for n >= 2; 1 below.
    pub fn lambda_n(n: i64) -> f64 {
        if n < 2 {
            return 1.0;
        }
        let x = n as f64;
        1.0 - 1.0 / (x * x.ln()).sqrt()
    }

    pub fn density_value(&self, n: i64, u: f64) -> Result<f64> {
        let l = Self::lambda_n(n);
        Ok(if u < 0.5 { l } else { 2.0 - l })
    }

    pub fn integral(&self, n: i64) -> f64 {
        let l = Self::lambda_n(n);
        0.5 * l + 0.5 * (2.0 - l)
    }

    /// The common conditional set [0, 1/2] with uniform law.
    pub fn conditional(&self) -> ConditionalSpec {
        ConditionalSpec::uniform(&[(0.0, 0.5)]).expect("valid set")
    }

    /// Lower halves are drawn through a digit stream so they can feed the factor maps.
    pub fn sample_site(&self, n: i64, rng: &mut CounterRng) -> Coord {
        let l = Self::lambda_n(n);
        if rng.next_f64() < 0.5 * l {
            let key = rng.next_word();
            let v = super::conditional::digits_prefix(key);
            Coord { symbol: Symbol::Real(0.5 * v), digits: Some(key) }
        } else {
            Coord::real(0.5 + 0.5 * rng.next_f64())
        }
    }

    /// Partial sum over 3 <= n <= N of the adjacent-site Hellinger integrals, with a tail bound.
    pub fn kakutani_sum(&self, n_max: i64) -> (f64, f64) {
        let mut partial = 0.0;
        for n in 3..=n_max {
            let (l0, l1) = (Self::lambda_n(n - 1), Self::lambda_n(n));
            partial += 0.5 * (l1.sqrt() - l0.sqrt()).powi(2) + 0.5 * ((2.0 - l1).sqrt() - (2.0 - l0).sqrt()).powi(2);
        }
        // (sqrt x - sqrt y)^2 <= (x - y)^2 / (4 min(x, y)) and the increment of
        // lambda_m is at most 1/((m-1)^{3/2} sqrt(ln(m-1))) once ln(m-1) >= 1.
        let nn = n_max.max(4) as f64;
        let lmin = Self::lambda_n(n_max.max(4));
        let sum_sq = (1.0 / nn.powi(3) + 1.0 / (2.0 * nn * nn)) / nn.ln();
        (partial, sum_sq * (1.0 / lmin + 1.0) / 8.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_scale_integrates_to_one() {
        let f = TwoScaleFamily::new(0.5, 1.0 / 3.0).unwrap();
        for n in -2..5000 {
            assert!((f.integral(n) - 1.0).abs() < 1e-12);
        }
        assert!(TwoScaleFamily::new(0.5, 0.25).is_err());
    }

    #[test]
    fn two_scale_ladders_nest_and_separate() {
        let f = TwoScaleFamily::new(0.5, 1.0 / 3.0).unwrap();
        let mut prev = f.intervals(2).unwrap();
        assert!(prev[0].1 < 0.25 && prev[2].1 < 0.5 && prev[1].1 < 0.75 && prev[3].1 < 1.0);
        for n in 3..10_000 {
            let cur = f.intervals(n).unwrap();
            for i in 0..4 {
                assert_eq!(cur[i].0, prev[i].0);
                assert!(cur[i].1 < prev[i].1);
            }
            prev = cur;
        }
    }

    #[test]
    fn two_scale_sampling_matches_density() {
        let f = TwoScaleFamily::new(0.5, 1.0 / 3.0).unwrap();
        let mut rng = CounterRng::new(5);
        let n = 3;
        let draws = 400_000;
        let [(_, a), _, (_, d), (_, e)] = f.intervals(n).unwrap();
        let (mut ca, mut cd, mut ce) = (0, 0, 0);
        for _ in 0..draws {
            let u = f.sample_site(n, &mut rng);
            if u < a {
                ca += 1;
            } else if u > 0.25 && u < d {
                cd += 1;
            } else if u > 0.75 && u < e {
                ce += 1;
            }
        }
        let check = |c: i32, p: f64| {
            let f = c as f64 / draws as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / draws as f64).sqrt(), "{f} vs {p}");
        };
        let an = a_n(3.0);
        check(ca, 0.5 * an);
        check(cd, an / 3.0);
        check(ce, an);
    }

    #[test]
    fn biased_pair_takes_two_values() {
        let f = BiasedPairFamily::new();
        for n in 2..1000 {
            let l = BiasedPairFamily::lambda_n(n);
            assert!(l > 0.0 && l < 1.0);
            assert_eq!(f.density_value(n, 0.1).unwrap(), l);
            assert_eq!(f.density_value(n, 0.9).unwrap(), 2.0 - l);
            assert!((f.integral(n) - 1.0).abs() < 1e-15);
        }
        assert_eq!(BiasedPairFamily::lambda_n(1), 1.0);
    }

    #[test]
    fn kakutani_sums_are_finite() {
        let t = TwoScaleFamily::new(0.5, 1.0 / 3.0).unwrap();
        let (p, tail) = t.kakutani_sum(100_000);
        let kl = 2.0 * (1.0 - 0.5f64.sqrt()).powi(2);
        let kd = 2.0 * (1.0 - (1.0f64 / 3.0).sqrt()).powi(2);
        assert!((p + tail - 2.0 * (kl + kd) * a_n(2.0)).abs() < 1e-12);
        let b = BiasedPairFamily::new();
        let (p1, t1) = b.kakutani_sum(10_000);
        let (p2, _) = b.kakutani_sum(100_000);
        assert!(p2 >= p1 && p2 <= p1 + t1);
    }
}
