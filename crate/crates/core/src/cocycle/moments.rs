//! Exact second moments of 1/(T^n)' and their Monte Carlo check.
//!
//! With C = lambda^3 - 1 + lambda^{-2} - lambda, site k contributes the
//! factor 1 + C a_k when k - n is below the first level and 1 + C (a_{k-n} - a_k)
//! otherwise, so the log moment is a convergent series of ln1p terms.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::window::{SeedRecord, Window};
use super::rn_exponent;
use crate::error::{Error, Result};
use crate::measure::Ladder;
use crate::stats::{CompensatedSum, Welford};

/// Extra terms summed exactly before the tail bound takes over.
const SECOND_SUM_PAD: i64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecondMoment {
    pub n: i64,
    /// ln ∫ (1/(T^n)')^2 dμ lies in [log_lower, log_upper].
    pub log_lower: f64,
    pub log_upper: f64,
    /// c(lambda) Σ a_k over the levels below first + n.
    pub vw_bound_log: f64,
}

impl SecondMoment {
    pub fn exact_log(&self) -> f64 {
        0.5 * (self.log_lower + self.log_upper)
    }

    pub fn within_bound(&self) -> bool {
        self.log_upper <= self.vw_bound_log
    }
}

pub fn moment_constant(lambda: f64) -> f64 {
    lambda.powi(3) - 1.0 + lambda.powi(-2) - lambda
}

pub fn second_moment(ladder: &dyn Ladder, n: i64) -> Result<SecondMoment> {
    if n < 1 {
        return Err(Error::Domain(format!("second moment needs n >= 1, got {n}")));
    }
    let first = ladder.first();
    let c = moment_constant(ladder.lambda());
    let a = |k: i64| ladder.len_a(k);

    let mut head = CompensatedSum::default();
    let mut head_lin = CompensatedSum::default();
    for k in first..first + n {
        head.add((c * a(k)).ln_1p());
        head_lin.add(a(k));
    }

    // Σ_{j >= first} ln1p(C (a_j - a_{j+n})), exact up to J.
    let big_j = first + 4 * n + SECOND_SUM_PAD;
    let mut body = CompensatedSum::default();
    for j in first..=big_j {
        body.add((c * (a(j) - a(j + n))).ln_1p());
    }
    // Tail: Σ_{j>J} x_j with x_j = C (a_j - a_{j+n}) telescopes to C T.
    let mut t = CompensatedSum::default();
    for i in big_j + 1..=big_j + n {
        t.add(a(i));
    }
    let t = t.value();
    let first_tail_term = a(big_j + 1) - a(big_j + 1 + n);
    let upper_tail = c * t;
    let lower_tail = c * t - 0.5 * c * c * first_tail_term * t;

    let core = head.value() + body.value();
    Ok(SecondMoment {
        n,
        log_lower: core + lower_tail,
        log_upper: core + upper_tail,
        vw_bound_log: 2.0 * c * head_lin.value(),
    })
}

/// Monte Carlo mean of lambda^{-2 m(n)} over independent windows: (mean, standard error).
pub fn mc_inverse_square(ladder: Arc<dyn Ladder>, n: i64, trials: u64, master: u64, eps: f64) -> Result<(f64, f64)> {
    let chunk = 10_000u64;
    let chunks: Vec<u64> = (0..trials.div_ceil(chunk)).collect();
    let parts: Result<Vec<Welford>> = chunks
        .par_iter()
        .map(|&c| {
            let mut acc = Welford::default();
            for s in c * chunk..((c + 1) * chunk).min(trials) {
                let w = Window::for_shifts(Arc::clone(&ladder), n, n, eps, SeedRecord::new(master, s))?;
                let m = rn_exponent(&w, n)?;
                acc.push(m.lambda.powf(-2.0 * m.exponent as f64));
            }
            Ok(acc)
        })
        .collect();
    let mut total = Welford::default();
    for p in parts? {
        total.merge(&p);
    }
    Ok((total.mean(), total.std_error()))
}
