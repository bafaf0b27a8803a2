//! Degree-d matching of b's to later a's on a finite window of {a, b} marks.
//!
//! Each pass joins every unmatched b to the a right after it, provided that
//! a still has spare degree; matched b's and saturated a's then drop out and
//! the next pass sees the new adjacencies. On ℕ every b is eventually
//! matched; on a window the leftovers are flagged as pending on the right edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::CounterRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mark {
    A,
    B,
}

/// P(ω_n = a) as a function of the absolute index n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MarkLaw {
    Constant(f64),
    /// p_n(a) = delta + amp (1 + sin n) / 2
    Oscillating { delta: f64, amp: f64 },
}

impl MarkLaw {
    pub fn p_a(&self, n: i64) -> f64 {
        match *self {
            MarkLaw::Constant(p) => p,
            MarkLaw::Oscillating { delta, amp } => delta + amp * (1.0 + (n as f64).sin()) / 2.0,
        }
    }

    /// Lower bound δ on p_n(a).
    pub fn delta(&self) -> f64 {
        match *self {
            MarkLaw::Constant(p) => p,
            MarkLaw::Oscillating { delta, .. } => delta,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = match *self {
            MarkLaw::Constant(p) => (p, p),
            MarkLaw::Oscillating { delta, amp } => (delta, delta + amp),
        };
        if !(lo > 0.0 && hi <= 1.0 && lo <= hi) {
            return Err(Error::Parameter(format!("mark law {self:?} leaves [δ, 1] with δ > 0")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkSequence {
    /// Absolute index of marks[0].
    pub start: i64,
    pub marks: Vec<Mark>,
    pub law: Option<MarkLaw>,
}

impl MarkSequence {
    pub fn parse(s: &str) -> Result<Self> {
        let marks = s
            .chars()
            .map(|c| match c {
                'a' => Ok(Mark::A),
                'b' => Ok(Mark::B),
                _ => Err(Error::Domain(format!("mark {c:?} is neither a nor b"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MarkSequence { start: 0, marks, law: None })
    }

    pub fn sample(law: MarkLaw, start: i64, len: usize, rng: &mut CounterRng) -> Result<Self> {
        law.validate()?;
        let marks = (0..len)
            .map(|i| if rng.next_bool(law.p_a(start + i as i64)) { Mark::A } else { Mark::B })
            .collect();
        Ok(MarkSequence { start, marks, law: Some(law) })
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// The window seen from `offset`: (Tⁿω) restricted to what remains.
    pub fn shifted(&self, offset: usize) -> Self {
        MarkSequence { start: self.start + offset as i64, marks: self.marks[offset..].to_vec(), law: self.law.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatchGraph {
    pub d: u32,
    /// (m, n) with m < n, window-relative; sorted.
    pub edges: Vec<(usize, usize)>,
    /// b's still unmatched at the fixpoint.
    pub pending: Vec<usize>,
    pub passes: u32,
}

impl MatchGraph {
    /// (degree violations, orientation violations) against the marks.
    pub fn violations(&self, seq: &MarkSequence) -> (usize, usize) {
        let mut deg = vec![0u32; seq.len()];
        let mut orient = 0;
        for &(m, n) in &self.edges {
            deg[m] += 1;
            deg[n] += 1;
            if !(m < n && seq.marks[m] == Mark::B && seq.marks[n] == Mark::A) {
                orient += 1;
            }
        }
        let degree = deg
            .iter()
            .zip(&seq.marks)
            .filter(|(&k, &mk)| match mk {
                Mark::B => k > 1,
                Mark::A => k > self.d,
            })
            .count();
        (degree, orient)
    }
}

const NONE: usize = usize::MAX;

pub fn build_matching(seq: &MarkSequence, d: u32) -> Result<MatchGraph> {
    if d == 0 {
        return Err(Error::Parameter("degree bound d must be at least 1".into()));
    }
    let n = seq.len();
    let marks = &seq.marks;
    // Doubly linked list over the surviving sites.
    let mut prev: Vec<usize> = (0..n).map(|i| if i == 0 { NONE } else { i - 1 }).collect();
    let mut next: Vec<usize> = (0..n).map(|i| if i + 1 == n { NONE } else { i + 1 }).collect();
    let mut deg = vec![0u32; n];
    let mut alive = vec![true; n];
    let mut edges = Vec::new();
    let mut passes = 0;
    // b's whose right neighbour may have changed since the last pass.
    let mut cand: Vec<usize> = (0..n).filter(|&i| marks[i] == Mark::B).collect();
    loop {
        // Adjacency is frozen for the whole pass.
        let mut pass_edges = Vec::new();
        for &m in &cand {
            if !alive[m] || marks[m] != Mark::B {
                continue;
            }
            let r = next[m];
            if r != NONE && marks[r] == Mark::A && deg[r] < d {
                pass_edges.push((m, r));
            }
        }
        if pass_edges.is_empty() {
            break;
        }
        passes += 1;
        let mut removed = Vec::new();
        for &(m, r) in &pass_edges {
            deg[r] += 1;
            removed.push(m);
            if deg[r] == d {
                removed.push(r);
            }
        }
        for &i in &removed {
            alive[i] = false;
            let (p, q) = (prev[i], next[i]);
            if p != NONE {
                next[p] = q;
            }
            if q != NONE {
                prev[q] = p;
            }
        }
        cand.clear();
        for &i in &removed {
            // prev of a removed node may itself be removed; walk to a live one
            let mut p = prev[i];
            while p != NONE && !alive[p] {
                p = prev[p];
            }
            if p != NONE && marks[p] == Mark::B {
                cand.push(p);
            }
        }
        cand.sort_unstable();
        cand.dedup();
        edges.extend(pass_edges);
    }
    edges.sort_unstable();
    let pending = (0..n).filter(|&i| marks[i] == Mark::B && alive[i]).collect();
    Ok(MatchGraph { d, edges, pending, passes })
}

/// Left-to-right LIFO oracle: each a takes up to d of the nearest open b's.
pub fn stack_matching(seq: &MarkSequence, d: u32) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut stack = Vec::new();
    let mut edges = Vec::new();
    for (i, &mk) in seq.marks.iter().enumerate() {
        match mk {
            Mark::B => stack.push(i),
            Mark::A => {
                for _ in 0..d {
                    match stack.pop() {
                        Some(b) => edges.push((b, i)),
                        None => break,
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    (edges, stack)
}

/// P(R' > k) for the walk with steps +d (prob δ) and -1 started at -1, where
/// R' is the first time the walk reaches 0. A b is unmatched after k further
/// sites exactly when the walk of those sites has not reached 0.
pub fn walk_tail(delta: f64, d: u32, k: u64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Parameter(format!("δ must lie in (0,1], got {delta}")));
    }
    if (d as f64) * delta < 1.0 - delta - 1e-12 {
        return Err(Error::Parameter(format!("d = {d} is below (1-δ)/δ = {}: the walk drifts down", (1.0 - delta) / delta)));
    }
    // dist[h] = P(walk = -(h+1), not yet absorbed)
    let mut dist = vec![1.0f64];
    for _ in 0..k {
        let mut nd = vec![0.0; dist.len() + 1];
        for (h, &w) in dist.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            nd[h + 1] += w * (1.0 - delta);
            if h >= d as usize {
                nd[h - d as usize] += w * delta;
            }
        }
        dist = nd;
    }
    Ok(dist.iter().sum())
}

/// Smallest k with walk_tail(δ, d, k) <= tol.
pub fn walk_buffer(delta: f64, d: u32, tol: f64, max_k: u64) -> Result<u64> {
    let mut lo = 0u64;
    let mut hi = 1u64;
    while walk_tail(delta, d, hi)? > tol {
        lo = hi;
        hi *= 2;
        if hi > max_k {
            return Err(Error::Window(format!("walk tail stays above {tol} up to k = {max_k}")));
        }
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if walk_tail(delta, d, mid)? > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Matching on the window shifted by `offset` agrees with the shifted
/// matching for every b at least `buffer` sites from the right edge.
pub fn equivariance_check(seq: &MarkSequence, d: u32, offset: usize, buffer: usize) -> Result<bool> {
    if offset > seq.len() {
        return Err(Error::Window(format!("offset {offset} beyond window of length {}", seq.len())));
    }
    if offset + buffer > seq.len() {
        return Err(Error::Window(format!(
            "shifted window of length {} is shorter than the buffer {buffer}",
            seq.len() - offset
        )));
    }
    let full = build_matching(seq, d)?;
    let shifted = build_matching(&seq.shifted(offset), d)?;
    let limit = seq.len() - buffer;
    let a: Vec<(usize, usize)> = full
        .edges
        .iter()
        .filter(|e| e.0 >= offset && e.0 < limit)
        .map(|&(m, n)| (m - offset, n - offset))
        .collect();
    let b: Vec<(usize, usize)> = shifted.edges.iter().filter(|e| e.0 + offset < limit).copied().collect();
    let pa: Vec<usize> = full.pending.iter().filter(|&&m| m >= offset && m < limit).map(|m| m - offset).collect();
    let pb: Vec<usize> = shifted.pending.iter().filter(|&&m| m + offset < limit).copied().collect();
    Ok(a == b && pa == pb)
}

/// Pending b's at distance >= k from the right edge, out of all b's there.
pub fn interior_unmatched(seq: &MarkSequence, g: &MatchGraph, k: usize) -> (u64, u64) {
    let limit = seq.len().saturating_sub(k);
    let bs = seq.marks[..limit].iter().filter(|&&m| m == Mark::B).count() as u64;
    let open = g.pending.iter().filter(|&&m| m < limit).count() as u64;
    (open, bs)
}
