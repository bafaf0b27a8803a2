//! Rational interval sets and the uniform tameness margin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(Error::Parameter(format!("denominator must be positive, got {den}")));
        }
        Ok(Rational { num, den })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Parse "p/q" or an integer.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parameter(format!("not a rational: '{s}'"));
        match s.split_once('/') {
            Some((p, q)) => Rational::new(p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?),
            None => Rational::new(s.parse().map_err(|_| bad())?, 1),
        }
    }
}

/// A finite union of closed intervals in [0,1], normalised to disjoint sorted pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSet {
    pieces: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn new(intervals: &[(Rational, Rational)]) -> Result<Self> {
        let mut v: Vec<(f64, f64)> = Vec::new();
        for (l, r) in intervals {
            let (l, r) = (l.value(), r.value());
            if !(0.0..=1.0).contains(&l) || !(0.0..=1.0).contains(&r) || r < l {
                return Err(Error::Parameter(format!("interval [{l}, {r}] not inside [0,1]")));
            }
            v.push((l, r));
        }
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (l, r) in v {
            match merged.last_mut() {
                Some(last) if l <= last.1 => last.1 = last.1.max(r),
                _ => merged.push((l, r)),
            }
        }
        Ok(IntervalSet { pieces: merged })
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    pub fn measure(&self) -> f64 {
        self.pieces.iter().map(|(l, r)| r - l).sum()
    }

    pub fn contains(&self, u: f64) -> bool {
        self.pieces.iter().any(|&(l, r)| u >= l && u <= r)
    }
}

/// delta = min(L(B), L(B^c)) / 2 together with the uniform lower bound c * delta
/// on r_n(B, delta).
pub fn tameness_margin(set: &IntervalSet, c: f64) -> Result<(f64, f64)> {
    let m = set.measure();
    if m <= 0.0 || m >= 1.0 {
        return Err(Error::DegenerateSet(format!("Lebesgue measure {m} is 0 or 1")));
    }
    let delta = m.min(1.0 - m) / 2.0;
    Ok((delta, c * delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pairs: &[(&str, &str)]) -> IntervalSet {
        let v: Vec<(Rational, Rational)> =
            pairs.iter().map(|(a, b)| (Rational::parse(a).unwrap(), Rational::parse(b).unwrap())).collect();
        IntervalSet::new(&v).unwrap()
    }

    #[test]
    fn margin_examples() {
        let (d, b) = tameness_margin(&set(&[("0", "1/2")]), 0.5).unwrap();
        assert!((d - 0.25).abs() < 1e-15 && (b - 0.125).abs() < 1e-15);
        let (d, b) = tameness_margin(&set(&[("0", "1/10")]), 0.5).unwrap();
        assert!((d - 0.05).abs() < 1e-15 && (b - 0.025).abs() < 1e-15);
        assert!(tameness_margin(&set(&[("0", "1")]), 0.5).is_err());
        assert!(tameness_margin(&set(&[("1/3", "1/3")]), 0.5).is_err());
    }

    #[test]
    fn overlapping_pieces_merge() {
        let s = set(&[("0", "1/3"), ("1/4", "1/2"), ("3/4", "1")]);
        assert_eq!(s.pieces().len(), 2);
        assert!((s.measure() - 0.75).abs() < 1e-15);
        assert!(s.contains(0.4) && !s.contains(0.6));
    }

    #[test]
    fn parse_errors() {
        assert!(Rational::parse("1/0").is_err());
        assert!(Rational::parse("x").is_err());
        assert_eq!(Rational::parse(" 3 / 4 ").unwrap(), Rational { num: 3, den: 4 });
    }
}
