//! Empirical check that lambda is an essential value: on a cylinder A, the
//! partial map V is defined on a set E ⊂ A of measure > μ(A)/2 and carries
//! RN derivative exactly lambda.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::piecewise::PiecewiseUniform;
use crate::measure::ContinuousLadder;
use crate::permutation::{apply_v, exact_success_probability, sample_at_level, site_law, DyadicWindow};
use crate::stats::{derive_seed, normal_quantile, CounterRng};

/// [x_k ∈ intervals[k-1]] for 1 <= k <= N; N = 0 is the whole space.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub intervals: Vec<(f64, f64)>,
}

impl Cylinder {
    pub fn full() -> Self {
        Cylinder::default()
    }

    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(l, r) in &intervals {
            if !(0.0 <= l && l < r && r <= 1.0) {
                return Err(Error::Domain(format!("cylinder interval [{l}, {r}) is not a subinterval of [0,1]")));
            }
        }
        Ok(Cylinder { intervals })
    }

    pub fn depth(&self) -> u64 {
        self.intervals.len() as u64
    }

    /// Conditional laws of x_1..x_N given the cylinder.
    fn laws(&self, ladder: &ContinuousLadder) -> Result<Vec<PiecewiseUniform>> {
        self.intervals
            .iter()
            .enumerate()
            .map(|(i, &(l, r))| {
                site_law(ladder, i as f64 + 1.0)
                    .restrict(l, r)
                    .map_err(|_| Error::DegenerateSet(format!("cylinder coordinate {} has zero mass", i + 1)))
            })
            .collect()
    }

    /// μ(A) = Π_k ∫_{I_k} f_k.
    pub fn mass(&self, ladder: &ContinuousLadder) -> f64 {
        self.intervals
            .iter()
            .enumerate()
            .map(|(i, &(l, r))| site_law(ladder, i as f64 + 1.0).mass_between(l, r))
            .product()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub depth: u64,
    pub m: u64,
    pub trials: u64,
    pub successes: u64,
    /// Successful trials whose recomputed RN exponent was exactly 1.
    pub exponent_one: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    /// P(τ <= M) from the step laws; the cylinder does not affect it.
    pub exact: f64,
}

impl ProbeReport {
    pub fn cleared(&self) -> bool {
        self.ci_low > 0.5
    }

    pub fn exponents_exact(&self) -> bool {
        self.exponent_one == self.successes
    }
}

/// Fraction of the cylinder on which V (with horizon M) is defined.
pub fn essential_value_probe(
    ladder: &ContinuousLadder,
    cylinder: &Cylinder,
    m: u64,
    trials: u64,
    master: u64,
    confidence: f64,
) -> Result<ProbeReport> {
    let n = cylinder.depth();
    if m <= n {
        return Err(Error::Window(format!("horizon M = {m} must exceed the cylinder depth {n}")));
    }
    if trials == 0 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    let laws = cylinder.laws(ladder)?;
    let seed = derive_seed(master, m);
    let outcomes: Result<Vec<(bool, bool)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = CounterRng::for_stream(seed, t);
            let mut base = Vec::with_capacity(m as usize + 1);
            base.push(sample_at_level(ladder, 0.0, &mut rng));
            for law in &laws {
                base.push(law.sample(&mut rng));
            }
            for k in n + 1..=m {
                base.push(sample_at_level(ladder, k as f64, &mut rng));
            }
            let w = DyadicWindow::with_base(ladder, n, m, base, &mut rng);
            match apply_v(&w, n, m) {
                Ok((_, e)) => Ok((true, e == 1)),
                Err(Error::NotInDomain(_)) => Ok((false, false)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let outcomes = outcomes?;
    let successes = outcomes.iter().filter(|o| o.0).count() as u64;
    let exponent_one = outcomes.iter().filter(|o| o.0 && o.1).count() as u64;
    let est = successes as f64 / trials as f64;
    let z = normal_quantile(confidence);
    let half = z * (est * (1.0 - est) / trials as f64).sqrt();
    Ok(ProbeReport {
        depth: n,
        m,
        trials,
        successes,
        exponent_one,
        estimate: est,
        ci_low: est - half,
        ci_high: est + half,
        confidence,
        exact: exact_success_probability(ladder, n, m),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeSearch {
    pub steps: Vec<ProbeReport>,
    /// First M whose lower confidence bound clears 1/2.
    pub chosen: Option<u64>,
    pub cap: u64,
}

impl ProbeSearch {
    pub fn last(&self) -> &ProbeReport {
        self.steps.last().expect("at least one step")
    }
}

/// Double M from `m_start` until the estimate clears 1/2 or M exceeds `cap`.
pub fn probe_search(
    ladder: &ContinuousLadder,
    cylinder: &Cylinder,
    trials: u64,
    m_start: u64,
    cap: u64,
    master: u64,
    confidence: f64,
) -> Result<ProbeSearch> {
    let mut m = m_start.max(cylinder.depth() + 1);
    if m > cap {
        return Err(Error::Window(format!("starting horizon {m} is above the cap {cap}")));
    }
    let mut steps = Vec::new();
    loop {
        let r = essential_value_probe(ladder, cylinder, m, trials, master, confidence)?;
        let done = r.cleared();
        steps.push(r);
        if done {
            return Ok(ProbeSearch { steps, chosen: Some(m), cap });
        }
        if m * 2 > cap {
            return Ok(ProbeSearch { steps, chosen: None, cap });
        }
        m *= 2;
    }
}
