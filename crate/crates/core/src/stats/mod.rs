//! Statistical checks shared by the experiments, plus the seeded generator.

pub mod rng;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub use rng::{derive_seed, CounterRng, GENERATOR_ID};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    pub sample_size: u64,
    pub alpha: f64,
    pub passed: bool,
}

impl TestReport {
    fn new(statistic: f64, p_value: f64, sample_size: u64, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestReport { statistic, p_value, sample_size, alpha, passed: p_value > alpha }
    }
}

/// Survival function of the Kolmogorov distribution, P(K > x).
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // Jacobi-transformed series converges fast for small x.
        let mut cdf = 0.0;
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        for j in 1..=20 {
            let k = (2 * j - 1) as f64;
            cdf += (-k * k * c).exp();
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / x;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * x * x).exp();
            sf += if j % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

/// One-sample KS test against U[0,1] with the asymptotic p-value.
pub fn ks_uniform(samples: &[f64], alpha: f64) -> Result<TestReport> {
    if samples.len() < 100 {
        return Err(Error::Data(format!("KS needs at least 100 samples, got {}", samples.len())));
    }
    if let Some(bad) = samples.iter().find(|u| !(0.0..=1.0).contains(*u)) {
        return Err(Error::Data(format!("sample {bad} outside [0,1]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &u) in sorted.iter().enumerate() {
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max(hi - u).max(u - lo);
    }
    let p = kolmogorov_sf(n.sqrt() * d);
    Ok(TestReport::new(d, p, sorted.len() as u64, alpha))
}

/// Chi-square independence test on a bins x bins contingency table of pairs in [0,1]^2.
pub fn chi2_pairs(pairs: &[(f64, f64)], bins: usize, alpha: f64) -> Result<TestReport> {
    if bins < 2 {
        return Err(Error::Data("chi-square needs at least 2 bins".into()));
    }
    let bin = |u: f64| -> Result<usize> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Data(format!("pair coordinate {u} outside [0,1]")));
        }
        Ok(((u * bins as f64) as usize).min(bins - 1))
    };
    let mut table = vec![0u64; bins * bins];
    for &(x, y) in pairs {
        table[bin(x)? * bins + bin(y)?] += 1;
    }
    let n = pairs.len() as f64;
    let rows: Vec<f64> = (0..bins).map(|i| (0..bins).map(|j| table[i * bins + j] as f64).sum()).collect();
    let cols: Vec<f64> = (0..bins).map(|j| (0..bins).map(|i| table[i * bins + j] as f64).sum()).collect();
    let mut stat = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let expected = rows[i] * cols[j] / n;
            if expected < 5.0 {
                // Degenerate margins mean the table cannot be tested at all.
                if rows[i] == 0.0 || cols[j] == 0.0 {
                    return Err(Error::Data("empty margin in contingency table".into()));
                }
                return Err(Error::Data(format!("expected count {expected:.2} < 5 in cell ({i},{j})")));
            }
            let o = table[i * bins + j] as f64;
            stat += (o - expected) * (o - expected) / expected;
        }
    }
    let dof = ((bins - 1) * (bins - 1)) as f64;
    let dist = ChiSquared::new(dof).map_err(|e| Error::Data(e.to_string()))?;
    let p = dist.sf(stat);
    Ok(TestReport::new(stat, p, pairs.len() as u64, alpha))
}

/// Two-sided standard normal quantile for a confidence level, e.g. 0.95 -> 1.96.
pub fn normal_quantile(level: f64) -> f64 {
    let z = Normal::new(0.0, 1.0).expect("standard normal");
    z.inverse_cdf(0.5 + level / 2.0)
}

/// Mean and normal-approximation CI half-width.
pub fn mc_mean_ci(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 30 {
        return Err(Error::Data(format!("CI needs at least 30 samples, got {}", samples.len())));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, normal_quantile(level) * (var / n).sqrt()))
}

/// Running mean/variance for streams too long to keep in memory.
#[derive(Clone, Debug, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n.max(1) as f64).sqrt()
    }
}

/// Binomial proportion with its normal-approximation standard error.
pub fn proportion(successes: u64, trials: u64) -> (f64, f64) {
    let p = successes as f64 / trials.max(1) as f64;
    (p, (p * (1.0 - p) / trials.max(1) as f64).sqrt())
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_on_midpoint_grid() {
        let n = 1000;
        let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let r = ks_uniform(&grid, 0.01).unwrap();
        assert!((r.statistic - 0.5 / n as f64).abs() < 1e-12);
        assert!(r.p_value > 0.999);
    }

    #[test]
    fn ks_on_left_grid() {
        let n = 1000;
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let r = ks_uniform(&grid, 0.01).unwrap();
        assert!((r.statistic - 1.0 / n as f64).abs() < 1e-12);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn ks_degenerate() {
        let r = ks_uniform(&vec![0.5; 500], 0.01).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-12);
        assert!(r.p_value < 1e-10);
        assert!(!r.passed);
    }

    #[test]
    fn ks_rejects_bad_input() {
        assert!(ks_uniform(&[0.5; 10], 0.01).is_err());
        let mut v = vec![0.5; 200];
        v[3] = 1.5;
        assert!(ks_uniform(&v, 0.01).is_err());
    }

    #[test]
    fn kolmogorov_sf_branches_agree() {
        // Both series are valid near the switch point.
        let x = 1.18;
        let small = {
            let c = std::f64::consts::PI.powi(2) / (8.0 * x * x);
            let s: f64 = (1..=20).map(|j| (-(((2 * j - 1) as f64).powi(2)) * c).exp()).sum();
            1.0 - s * (2.0 * std::f64::consts::PI).sqrt() / x
        };
        assert!((small - kolmogorov_sf(x)).abs() < 1e-12);
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn chi2_detects_dependence() {
        let mut rng = CounterRng::new(1);
        let same: Vec<(f64, f64)> = (0..10_000).map(|_| {
            let u = rng.next_f64();
            (u, u)
        }).collect();
        // Diagonal tables have empty off-diagonal expectations only if margins vanish; here they do not.
        let r = chi2_pairs(&same, 4, 0.01).unwrap();
        assert!(r.p_value < 1e-10);
        let anti: Vec<(f64, f64)> = same.iter().map(|&(u, _)| (u, 1.0 - u)).collect();
        assert!(chi2_pairs(&anti, 4, 0.01).unwrap().p_value < 1e-10);
    }

    #[test]
    fn chi2_accepts_independent() {
        let mut rng = CounterRng::new(2);
        let pairs: Vec<(f64, f64)> = (0..100_000).map(|_| (rng.next_f64(), rng.next_f64())).collect();
        let r = chi2_pairs(&pairs, 10, 0.01).unwrap();
        assert!(r.p_value > 0.001);
    }

    #[test]
    fn chi2_sparse_cells_error() {
        let pairs = vec![(0.1, 0.2); 20];
        assert!(chi2_pairs(&pairs, 3, 0.01).is_err());
        assert!(chi2_pairs(&pairs, 1, 0.01).is_err());
    }

    #[test]
    fn ci_constant_and_bits() {
        let (m, h) = mc_mean_ci(&vec![2.5; 100], 0.95).unwrap();
        assert_eq!(m, 2.5);
        assert_eq!(h, 0.0);
        let bits: Vec<f64> = (0..10_000).map(|i| (i % 2) as f64).collect();
        let (m, h) = mc_mean_ci(&bits, 0.95).unwrap();
        assert!((m - 0.5).abs() < 1e-12);
        assert!((h - 0.0098).abs() < 1e-4);
    }

    #[test]
    fn ci_coverage_near_nominal() {
        let mut covered = 0;
        for rep in 0..1000 {
            let mut rng = CounterRng::for_stream(99, rep);
            let xs: Vec<f64> = (0..200).map(|_| rng.next_f64()).collect();
            let (m, h) = mc_mean_ci(&xs, 0.95).unwrap();
            if (m - 0.5).abs() <= h {
                covered += 1;
            }
        }
        // Binomial(1000, 0.95) has sd about 7.
        assert!((920..=980).contains(&covered), "coverage {covered}");
    }

    #[test]
    fn welford_matches_direct() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut a = Welford::default();
        let mut b = Welford::default();
        for (i, &x) in xs.iter().enumerate() {
            if i < 400 { a.push(x) } else { b.push(x) }
        }
        a.merge(&b);
        let mean = xs.iter().sum::<f64>() / 1000.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        assert!((a.mean() - mean).abs() < 1e-12);
        assert!((a.variance() - var).abs() < 1e-9);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1.0);
        for _ in 0..1_000_000 {
            s.add(1e-16);
        }
        assert!((s.value() - (1.0 + 1e-10)).abs() < 1e-15);
    }

    #[test]
    fn reports_are_deterministic() {
        let run = || {
            let mut rng = CounterRng::for_stream(5, 3);
            let xs: Vec<f64> = (0..5000).map(|_| rng.next_f64()).collect();
            ks_uniform(&xs, 0.01).unwrap()
        };
        assert_eq!(run(), run());
    }
}
