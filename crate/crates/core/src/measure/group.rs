//! Box Følner sets in Z and Z^2 and the group-indexed density family.
//!
//! Group elements are enumerated g_0 = identity, g_1, g_2, ... (Z: 0, 1, -1,
//! 2, -2, ...; Z^2: square shells by max-norm, lexicographic within a shell).
//! Box F_n (n >= 1) is the smallest box, no smaller than F_{n-1}, with
//! |F_n △ g_k F_n| / |F_n| < 1/n for all k < n. Boxes sit along the
//! nonnegative x-axis with an empty slot of equal width after each one, so
//! the gaps and everything left of the origin form the infinite reserve.

use crate::error::{Error, Result};
use crate::stats::CounterRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub x: i64,
    pub y: i64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { x: 0, y: 0 };

    pub fn z(x: i64) -> Self {
        GroupElement { x, y: 0 }
    }

    pub fn z2(x: i64, y: i64) -> Self {
        GroupElement { x, y }
    }

    pub fn add(self, o: GroupElement) -> Self {
        GroupElement { x: self.x + o.x, y: self.y + o.y }
    }

    pub fn sub(self, o: GroupElement) -> Self {
        GroupElement { x: self.x - o.x, y: self.y - o.y }
    }

    pub fn neg(self) -> Self {
        GroupElement { x: -self.x, y: -self.y }
    }
}

/// The n-th enumerated element.
pub fn enumerate(dim: u8, n: u64) -> GroupElement {
    if n == 0 {
        return GroupElement::IDENTITY;
    }
    if dim == 1 {
        let i = n.div_ceil(2) as i64;
        return GroupElement::z(if n % 2 == 1 { i } else { -i });
    }
    // Shell r holds indices (2r-1)^2 .. (2r+1)^2 - 1.
    let mut r = ((((n + 1) as f64).sqrt() - 1.0) / 2.0).ceil() as i64;
    while ((2 * r + 1) * (2 * r + 1)) as u64 <= n {
        r += 1;
    }
    while r > 1 && ((2 * r - 1) * (2 * r - 1)) as u64 > n {
        r -= 1;
    }
    let mut pos = (n - ((2 * r - 1) * (2 * r - 1)) as u64) as i64;
    let full = 2 * r + 1;
    if pos < full {
        return GroupElement::z2(-r, -r + pos);
    }
    pos -= full;
    let inner = 2 * (2 * r - 1);
    if pos < inner {
        let x = -r + 1 + pos / 2;
        let y = if pos % 2 == 0 { -r } else { r };
        return GroupElement::z2(x, y);
    }
    pos -= inner;
    GroupElement::z2(r, -r + pos)
}

/// Inverse of `enumerate`.
pub fn index_of(dim: u8, g: GroupElement) -> Option<u64> {
    if dim == 1 {
        if g.y != 0 {
            return None;
        }
        return Some(match g.x {
            0 => 0,
            x if x > 0 => 2 * x as u64 - 1,
            x => 2 * (-x) as u64,
        });
    }
    let r = g.x.abs().max(g.y.abs());
    if r == 0 {
        return Some(0);
    }
    let base = ((2 * r - 1) * (2 * r - 1)) as u64;
    let full = 2 * r + 1;
    let pos = if g.x == -r {
        g.y + r
    } else if g.x == r {
        full + 2 * (2 * r - 1) + (g.y + r)
    } else {
        full + 2 * (g.x + r - 1) + if g.y == -r { 0 } else { 1 }
    };
    Some(base + pos as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FolnerBox {
    /// 1-based position in the sequence.
    pub n: u64,
    pub x0: i64,
    pub side: i64,
}

impl FolnerBox {
    pub fn cardinality(&self, dim: u8) -> u64 {
        if dim == 1 {
            self.side as u64
        } else {
            (self.side * self.side) as u64
        }
    }

    pub fn contains(&self, dim: u8, h: GroupElement) -> bool {
        let in_x = h.x >= self.x0 && h.x < self.x0 + self.side;
        if dim == 1 {
            in_x && h.y == 0
        } else {
            in_x && h.y >= 0 && h.y < self.side
        }
    }

    /// Elements h of the box with h - t outside the box.
    pub fn leaving(&self, dim: u8, t: GroupElement) -> Vec<GroupElement> {
        let xs = self.x0..self.x0 + self.side;
        let strip = |lo: i64, len: i64, shift: i64| -> Vec<i64> {
            (lo..lo + len).filter(|&v| v - shift < lo || v - shift >= lo + len).collect()
        };
        if dim == 1 {
            return strip(self.x0, self.side, t.x).into_iter().map(GroupElement::z).collect();
        }
        let sx = strip(self.x0, self.side, t.x);
        let sy = strip(0, self.side, t.y);
        let mut out = Vec::with_capacity((sx.len() + sy.len()) * self.side as usize);
        for x in xs {
            if x - t.x < self.x0 || x - t.x >= self.x0 + self.side {
                out.extend((0..self.side).map(|y| GroupElement::z2(x, y)));
            } else {
                out.extend(sy.iter().map(|&y| GroupElement::z2(x, y)));
            }
        }
        out
    }

    pub fn elements(&self, dim: u8) -> Vec<GroupElement> {
        let xs = self.x0..self.x0 + self.side;
        if dim == 1 {
            xs.map(GroupElement::z).collect()
        } else {
            xs.flat_map(|x| (0..self.side).map(move |y| GroupElement::z2(x, y))).collect()
        }
    }
}

/// |F △ tF| for a box of the given side, by the closed form.
fn sym_diff_formula(dim: u8, side: i64, t: GroupElement) -> i64 {
    if dim == 1 {
        2 * t.x.abs().min(side)
    } else {
        let ox = (side - t.x.abs()).max(0);
        let oy = (side - t.y.abs()).max(0);
        2 * (side * side - ox * oy)
    }
}

fn box_ok(dim: u8, n: u64, side: i64) -> bool {
    let card = if dim == 1 { side } else { side * side };
    (0..n).all(|k| (n as i64) * sym_diff_formula(dim, side, enumerate(dim, k)) < card)
}

/// Side of the n-th box, given the previous side.
fn minimal_side(dim: u8, n: u64, prev: i64) -> i64 {
    let floor = if dim == 1 { 4 } else { 2 };
    let nf = n as f64;
    let mut guess = prev.max(floor);
    for k in 0..n {
        let g = enumerate(dim, k);
        let (a, b) = (g.x.abs() as f64, g.y.abs() as f64);
        let root = if dim == 1 {
            2.0 * nf * a
        } else {
            // n * 2 (L(a+b) - ab) < L^2
            let s = nf * (a + b);
            s + (s * s - 2.0 * nf * a * b).max(0.0).sqrt()
        };
        guess = guess.max((root.floor() as i64 - 2).max(floor));
    }
    while !box_ok(dim, n, guess) {
        guess += 1;
    }
    guess
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupLayout {
    dim: u8,
    boxes: Vec<FolnerBox>,
}

impl GroupLayout {
    pub fn new(dim: u8, count: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Parameter(format!("only Z and Z^2 are supported, got dim {dim}")));
        }
        if count == 0 {
            return Err(Error::Parameter("layout needs at least one box".into()));
        }
        let mut boxes = Vec::with_capacity(count);
        let mut x0 = 0i64;
        let mut prev = 0i64;
        for n in 1..=count as u64 {
            let side = minimal_side(dim, n, prev);
            boxes.push(FolnerBox { n, x0, side });
            x0 += 2 * side;
            prev = side;
        }
        Ok(GroupLayout { dim, boxes })
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.boxes.len()
    }

    pub fn boxes(&self) -> &[FolnerBox] {
        &self.boxes
    }

    /// F_n, 1-based.
    pub fn folner(&self, n: u64) -> Result<&FolnerBox> {
        if n == 0 || n as usize > self.boxes.len() {
            return Err(Error::Domain(format!("box {n} outside the laid-out range 1..={}", self.boxes.len())));
        }
        Ok(&self.boxes[n as usize - 1])
    }

    /// Right end of the region whose box membership is known.
    pub fn known_until(&self) -> i64 {
        let last = self.boxes[self.boxes.len() - 1];
        last.x0 + 2 * last.side
    }

    /// Index n of the box containing h, if any.
    pub fn box_of(&self, h: GroupElement) -> Result<Option<u64>> {
        if h.x >= self.known_until() {
            return Err(Error::Window(format!("element ({}, {}) beyond the laid-out boxes", h.x, h.y)));
        }
        if h.x < 0 {
            return Ok(None);
        }
        let i = self.boxes.partition_point(|b| b.x0 <= h.x);
        if i == 0 {
            return Ok(None);
        }
        let b = &self.boxes[i - 1];
        Ok(if b.contains(self.dim, h) { Some(b.n) } else { None })
    }

    pub fn element(&self, n: u64) -> GroupElement {
        enumerate(self.dim, n)
    }

    pub fn index_of(&self, g: GroupElement) -> Option<u64> {
        index_of(self.dim, g)
    }

    /// Largest |F_n △ g_k F_n| / |F_n| over k < n and both g_k, g_k^{-1},
    /// counted element by element.
    pub fn verify_folner(&self, n: u64) -> Result<f64> {
        let b = self.folner(n)?;
        let card = b.cardinality(self.dim) as f64;
        let elems = b.elements(self.dim);
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let g = self.element(k);
            for t in [g, g.neg()] {
                // |F △ tF| = 2 |F \ tF| = 2 #{h in F : h - t not in F}
                let out = elems.iter().filter(|&&h| !b.contains(self.dim, h.sub(t))).count();
                worst = worst.max(2.0 * out as f64 / card);
            }
        }
        Ok(worst)
    }

    /// Boxes pairwise disjoint and reserve elements present between consecutive boxes.
    pub fn verify_disjoint_with_reserve(&self) -> bool {
        self.boxes.windows(2).all(|w| w[0].x0 + w[0].side < w[1].x0)
    }

    /// F_k △ g F_k: the sites h for which exactly one of h, h - g lies in F_k.
    pub fn shift_difference(&self, k: u64, g: GroupElement) -> Result<Vec<GroupElement>> {
        let b = self.folner(k)?;
        let mut out = b.leaving(self.dim, g);
        out.extend(b.leaving(self.dim, g.neg()).into_iter().map(|h| h.add(g)));
        Ok(out)
    }

    /// H_k(g) = F_k △ (g F_k ∪ g^{-1} F_k), by enumeration.
    pub fn h_set(&self, k: u64, g: GroupElement) -> Result<Vec<GroupElement>> {
        let b = self.folner(k)?;
        let mut out = Vec::new();
        for h in b.elements(self.dim) {
            if !b.contains(self.dim, h.sub(g)) && !b.contains(self.dim, h.add(g)) {
                out.push(h);
            }
        }
        for h in b.elements(self.dim) {
            for t in [h.add(g), h.sub(g)] {
                if !b.contains(self.dim, t) && !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        Ok(out)
    }
}

/// `folner_boxes(dim, n)`: the n-th box of a fresh layout.
pub fn folner_boxes(dim: u8, n: u64) -> Result<FolnerBox> {
    if n == 0 {
        return Err(Error::Domain("Følner boxes are indexed from 1".into()));
    }
    let layout = GroupLayout::new(dim, n as usize)?;
    Ok(*layout.folner(n)?)
}

/// Density family indexed by the group: sites in F_n carry the ladder with
/// |A_n| = 1/(n ln(n+1) |F_n|), |B_n| = lambda |A_n|; reserve sites carry 1.
#[derive(Clone, Debug)]
pub struct GroupFamily {
    layout: GroupLayout,
    lambda: f64,
}

impl GroupFamily {
    pub fn new(layout: GroupLayout, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Parameter(format!("lambda must lie in (0,1), got {lambda}")));
        }
        Ok(GroupFamily { layout, lambda })
    }

    pub fn layout(&self) -> &GroupLayout {
        &self.layout
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// |A_n| for box n.
    pub fn len_a(&self, n: u64) -> f64 {
        let card = self.layout.boxes[n as usize - 1].cardinality(self.layout.dim) as f64;
        let nf = n as f64;
        1.0 / (nf * (nf + 1.0).ln() * card)
    }

    fn level(&self, h: &GroupElement) -> Option<u64> {
        self.layout.box_of(*h).ok().flatten()
    }

    pub fn density_value(&self, h: &GroupElement, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("coordinate {u} outside [0,1]")));
        }
        let Some(n) = self.level(h) else { return Ok(1.0) };
        let a = self.len_a(n);
        Ok(if u > 0.0 && u < a {
            self.lambda
        } else if u > 0.5 && u < 0.5 + self.lambda * a {
            1.0 / self.lambda
        } else {
            1.0
        })
    }

    pub fn integral(&self, h: &GroupElement) -> f64 {
        let Some(n) = self.level(h) else { return 1.0 };
        let a = self.len_a(n);
        let b = self.lambda * a;
        self.lambda * a + b / self.lambda + (1.0 - a - b)
    }

    pub fn sample_site(&self, h: &GroupElement, rng: &mut CounterRng) -> f64 {
        let Some(n) = self.level(h) else { return rng.next_f64() };
        let a = self.len_a(n);
        let b = self.lambda * a;
        let u = rng.next_f64();
        let v = rng.next_open_f64();
        if u < self.lambda * a {
            a * v
        } else if u < self.lambda * a + b / self.lambda {
            0.5 + b * v
        } else {
            // Uniform on the complement [a, 1/2] ∪ [1/2 + b, 1].
            let rest = 1.0 - a - b;
            let t = v * rest;
            if t < 0.5 - a {
                a + t
            } else {
                0.5 + b + (t - (0.5 - a))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_round_trips() {
        for dim in [1u8, 2] {
            let mut seen = std::collections::HashSet::new();
            for n in 0..2000u64 {
                let g = enumerate(dim, n);
                assert_eq!(index_of(dim, g), Some(n), "dim {dim} n {n}");
                assert!(seen.insert(g));
            }
        }
        assert_eq!(enumerate(1, 1), GroupElement::z(1));
        assert_eq!(enumerate(1, 2), GroupElement::z(-1));
        assert_eq!(enumerate(2, 1), GroupElement::z2(-1, -1));
        // Shell 1 of Z^2 is exactly the 8 neighbours.
        let shell: Vec<GroupElement> = (1..9).map(|n| enumerate(2, n)).collect();
        assert!(shell.iter().all(|g| g.x.abs().max(g.y.abs()) == 1));
    }

    #[test]
    fn first_box_in_z() {
        let b = folner_boxes(1, 1).unwrap();
        assert!(b.side >= 4);
        let layout = GroupLayout::new(1, 5).unwrap();
        assert_eq!(layout.verify_folner(1).unwrap(), 0.0);
        for later in &layout.boxes()[1..] {
            assert!(later.x0 >= b.x0 + b.side);
        }
    }

    #[test]
    fn z2_tenth_box_side() {
        let b = folner_boxes(2, 10).unwrap();
        assert!(b.side >= 20);
        // Minimality: one less fails the ratio bound.
        assert!(!box_ok(2, 10, b.side - 1) || b.side - 1 < folner_boxes(2, 9).unwrap().side);
    }

    #[test]
    fn verifier_agrees_with_formula() {
        for dim in [1u8, 2] {
            let layout = GroupLayout::new(dim, 12).unwrap();
            for n in 1..=12u64 {
                let r = layout.verify_folner(n).unwrap();
                assert!(r < 1.0 / n as f64, "dim {dim} n {n} ratio {r}");
            }
            assert!(layout.verify_disjoint_with_reserve());
        }
    }

    #[test]
    fn box_lookup() {
        let layout = GroupLayout::new(1, 4).unwrap();
        let b2 = *layout.folner(2).unwrap();
        assert_eq!(layout.box_of(GroupElement::z(b2.x0)).unwrap(), Some(2));
        assert_eq!(layout.box_of(GroupElement::z(b2.x0 + b2.side)).unwrap(), None);
        assert_eq!(layout.box_of(GroupElement::z(-5)).unwrap(), None);
        assert!(layout.box_of(GroupElement::z(layout.known_until())).is_err());
    }

    #[test]
    fn leaving_strip_matches_scan() {
        for dim in [1u8, 2] {
            let layout = GroupLayout::new(dim, 6).unwrap();
            let b = *layout.folner(6).unwrap();
            for t in [GroupElement::z2(2, if dim == 2 { -1 } else { 0 }), GroupElement::z(-3)] {
                let fast = b.leaving(dim, t);
                let slow: Vec<GroupElement> = b.elements(dim).into_iter().filter(|&h| !b.contains(dim, h.sub(t))).collect();
                assert_eq!(fast.len(), slow.len());
                assert!(fast.iter().all(|h| slow.contains(h)));
            }
        }
    }

    #[test]
    fn group_family_integrates_to_one() {
        let f = GroupFamily::new(GroupLayout::new(2, 8).unwrap(), 0.5).unwrap();
        for x in -3..200 {
            for y in 0..3 {
                let h = GroupElement::z2(x, y);
                assert!((f.integral(&h) - 1.0).abs() < 1e-12);
            }
        }
        for n in 1..8 {
            assert!(f.len_a(n + 1) < f.len_a(n));
        }
        assert!(f.len_a(1) < 0.5);
    }
}
