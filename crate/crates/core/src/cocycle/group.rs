//! Kakutani sum for the group-indexed family.
//!
//! Sites h and h - g carry different densities only when one of them lies
//! in a box and the other does not lie in the same box. Each such pair
//! contributes kappa |Â_p - Â_q| with kappa = 2 (1 - √lambda)^2, where Â is
//! the A-length at the box level (0 for reserve sites). Pairs touching boxes
//! 1..=K are enumerated from the box boundary strips; pairs with both ends
//! beyond K are bounded by Σ_{k>K} kappa Â_k |F_k △ g F_k| < kappa / (K ln(K+2)).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{GroupElement, GroupFamily};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GroupKakutani {
    pub n_g: u64,
    pub boxes_used: u64,
    pub exact: f64,
    pub tail_bound: f64,
    /// (6/lambda)(ln ln(n(g)+1) + 1/n(g)); zero for the identity.
    pub bound: f64,
}

impl GroupKakutani {
    pub fn sum(&self) -> f64 {
        self.exact + self.tail_bound
    }

    pub fn within_bound(&self) -> bool {
        self.sum() <= self.bound
    }
}

/// Boxes needed to evaluate element index n(g).
pub fn boxes_needed(n_g: u64) -> usize {
    (n_g as usize + 1).max(32) + 2
}

pub fn group_kakutani(family: &GroupFamily, g: GroupElement) -> Result<GroupKakutani> {
    let layout = family.layout();
    let dim = layout.dim();
    let n_g = layout
        .index_of(g)
        .ok_or_else(|| Error::Domain(format!("({}, {}) is not an element of Z^{dim}", g.x, g.y)))?;
    if n_g == 0 {
        return Ok(GroupKakutani { n_g, boxes_used: 0, exact: 0.0, tail_bound: 0.0, bound: 0.0 });
    }
    let need = boxes_needed(n_g);
    if layout.count() < need {
        return Err(Error::Domain(format!(
            "element index {n_g} needs {need} laid-out boxes, layout has {}",
            layout.count()
        )));
    }
    let k_max = (need - 2) as u64;
    let lam = family.lambda();
    let kappa = 2.0 * (1.0 - lam.sqrt()).powi(2);
    let len = |n: Option<u64>| n.map_or(0.0, |n| family.len_a(n));

    let mut exact = 0.0;
    for k in 1..=k_max {
        let b = layout.folner(k)?;
        let ak = family.len_a(k);
        let mut box_sum = 0.0;
        // Pairs (h, h - g) with h in F_k and h - g outside F_k.
        for h in b.leaving(dim, g) {
            let q = layout.box_of(h.sub(g))?;
            box_sum += (ak - len(q)).abs();
        }
        // Pairs (h, h - g) with h - g in F_k and h outside F_k; pairs whose h
        // lies in a box <= K were already counted from that box.
        for hp in b.leaving(dim, g.neg()) {
            let p = layout.box_of(hp.add(g))?;
            if p.is_none_or(|p| p > k_max) {
                box_sum += (len(p) - ak).abs();
            }
        }
        exact += kappa * box_sum;
    }
    let kf = k_max as f64;
    let tail_bound = kappa / (kf * (kf + 2.0).ln());
    let nf = n_g as f64;
    let bound = (6.0 / lam) * ((nf + 1.0).ln().ln() + 1.0 / nf);
    Ok(GroupKakutani { n_g, boxes_used: k_max, exact, tail_bound, bound })
}

/// Brute-force contribution of the single pair (h, h - g).
pub fn pair_term(family: &GroupFamily, h: GroupElement, g: GroupElement) -> Result<f64> {
    let layout = family.layout();
    let p = layout.box_of(h)?;
    let q = layout.box_of(h.sub(g))?;
    if p == q {
        return Ok(0.0);
    }
    let lam = family.lambda();
    let kappa = 2.0 * (1.0 - lam.sqrt()).powi(2);
    let len = |n: Option<u64>| n.map_or(0.0, |n| family.len_a(n));
    Ok(kappa * (len(p) - len(q)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::GroupLayout;

    fn family(dim: u8, boxes: usize) -> GroupFamily {
        GroupFamily::new(GroupLayout::new(dim, boxes).unwrap(), 0.5).unwrap()
    }

    #[test]
    fn identity_is_zero() {
        let f = family(1, 40);
        let r = group_kakutani(&f, GroupElement::IDENTITY).unwrap();
        assert_eq!(r.sum(), 0.0);
    }

    #[test]
    fn matches_brute_force_scan() {
        for dim in [1u8, 2] {
            let f = family(dim, 40);
            for n in [1u64, 2, 5] {
                let g = f.layout().element(n);
                let r = group_kakutani(&f, g).unwrap();
                // Scan every element left of box K+1 (and a strip of y values in Z^2).
                let k_max = r.boxes_used;
                let stop = f.layout().folner(k_max + 1).unwrap().x0;
                let mut brute = 0.0;
                let ys: Vec<i64> = if dim == 1 { vec![0] } else { (-3..f.layout().folner(k_max).unwrap().side + 3).collect() };
                for x in -10..stop {
                    for &y in &ys {
                        let h = GroupElement::z2(x, y);
                        brute += pair_term(&f, h, g).unwrap();
                    }
                }
                assert!((r.exact - brute).abs() <= r.tail_bound, "dim {dim} n {n}: brute {brute} exact {}", r.exact);
            }
        }
    }

    #[test]
    fn only_shift_differences_contribute() {
        let f = family(1, 40);
        let g = f.layout().element(1);
        let mut support = std::collections::HashSet::new();
        for k in 1..=38 {
            support.extend(f.layout().shift_difference(k, g).unwrap());
        }
        let stop = f.layout().folner(38).unwrap().x0;
        for x in -20..stop {
            let h = GroupElement::z(x);
            if pair_term(&f, h, g).unwrap() > 0.0 {
                assert!(support.contains(&h), "site {x} contributes outside every F_k △ gF_k");
            }
        }
    }

    #[test]
    fn h_sets_miss_the_left_edge() {
        // F_1 = [s, s+L) and g = 1: site s pairs with the reserve site s - 1,
        // yet F_1 △ (gF_1 ∪ g^{-1}F_1) = {s - 1, s + L}.
        let f = family(1, 40);
        let g = f.layout().element(1);
        let b = *f.layout().folner(1).unwrap();
        let h = f.layout().h_set(1, g).unwrap();
        assert_eq!(h.len(), 2);
        assert!(h.contains(&GroupElement::z(b.x0 - 1)) && h.contains(&GroupElement::z(b.x0 + b.side)));
        assert!(pair_term(&f, GroupElement::z(b.x0), g).unwrap() > 0.0);
    }

    #[test]
    fn contract_bound_on_first_hundred() {
        let f = family(1, boxes_needed(99));
        for n in 0..100 {
            let r = group_kakutani(&f, f.layout().element(n)).unwrap();
            assert!(r.within_bound(), "n(g) = {n}: {r:?}");
        }
    }

    #[test]
    fn needs_enough_boxes() {
        let f = family(1, 10);
        assert!(group_kakutani(&f, GroupElement::z(1)).is_err());
        assert!(group_kakutani(&family(1, 40), GroupElement::z2(1, 1)).is_err());
    }
}
