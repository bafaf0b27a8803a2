//! Hopf-type conservativity diagnostic: partial sums of (T^n)' along one orbit.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::rn_exponents_upto;
use super::window::{SeedRecord, Window};
use crate::error::{Error, Result};
use crate::measure::Ladder;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HopfReport {
    pub exponents: Vec<i64>,
    /// S_N = Σ_{n <= N} lambda^{m(n)}.
    pub partial_sums: Vec<f64>,
    /// Range in which (T^n)' >= 1/n was checked.
    pub check_from: i64,
    pub check_to: i64,
    /// First n in the range with (T^n)' < 1/n.
    pub first_violation: Option<i64>,
}

impl HopfReport {
    pub fn held(&self) -> bool {
        self.first_violation.is_none()
    }
}

pub fn hopf_diagnostic(w: &Window, n_max: i64, check: (i64, i64)) -> Result<HopfReport> {
    if n_max < 1 {
        return Err(Error::Domain(format!("need N >= 1, got {n_max}")));
    }
    let (from, to) = (check.0.max(1), check.1.min(n_max));
    let exponents = rn_exponents_upto(w, n_max)?;
    let lam = w.ladder().lambda();
    let mut partial_sums = Vec::with_capacity(exponents.len());
    let mut s = 0.0;
    let mut first_violation = None;
    for (i, &m) in exponents.iter().enumerate() {
        let n = i as i64 + 1;
        s += lam.powf(m as f64);
        partial_sums.push(s);
        // lambda^m < 1/n  <=>  m ln lambda < -ln n
        if first_violation.is_none() && n >= from && n <= to && (m as f64) * lam.ln() < -(n as f64).ln() {
            first_violation = Some(n);
        }
    }
    Ok(HopfReport { exponents, partial_sums, check_from: from, check_to: to, first_violation })
}

/// Fraction of sampled windows with a violation somewhere in [n0, N], per n0.
pub fn violation_profile(ladder: Arc<dyn Ladder>, n_max: i64, starts: &[i64], windows: u64, master: u64, eps: f64) -> Result<Vec<f64>> {
    let per: Result<Vec<Vec<bool>>> = (0..windows)
        .into_par_iter()
        .map(|s| {
            let w = Window::for_shifts(Arc::clone(&ladder), 1, n_max, eps, SeedRecord::new(master, s))?;
            let exps = rn_exponents_upto(&w, n_max)?;
            let lam_ln = ladder.lambda().ln();
            // Last n with (T^n)' < 1/n decides every start at once.
            let last_bad = exps
                .iter()
                .enumerate()
                .filter(|(i, &m)| (m as f64) * lam_ln < -((*i as f64) + 1.0).ln())
                .map(|(i, _)| i as i64 + 1)
                .next_back();
            Ok(starts.iter().map(|&n0| last_bad.is_some_and(|b| b >= n0)).collect())
        })
        .collect();
    let per = per?;
    Ok((0..starts.len()).map(|i| per.iter().filter(|v| v[i]).count() as f64 / windows as f64).collect())
}
