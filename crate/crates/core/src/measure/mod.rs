//! Site-indexed density families and single-coordinate sampling.

pub mod conditional;
pub mod countable;
pub mod group;
pub mod ladder;
pub mod piecewise;
pub mod tameness;
pub mod type3;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::CounterRng;

pub use conditional::ConditionalSpec;
pub use countable::CountableLadder;
pub use group::{folner_boxes, GroupElement, GroupFamily, GroupLayout};
pub use ladder::{a_n, ContinuousLadder, LadderParams};
pub use tameness::{tameness_margin, IntervalSet, Rational};
pub use type3::{BiasedPairFamily, TwoScaleFamily};

/// A coordinate value: a point of [0,1] or a nonnegative integer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Symbol {
    Real(f64),
    Count(u64),
}

/// A sampled coordinate. Points of the conditional set drawn by the sampler
/// carry the key of their digit stream, so G(x) is known to any precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coord {
    pub symbol: Symbol,
    pub digits: Option<u64>,
}

impl Coord {
    pub fn real(u: f64) -> Self {
        Coord { symbol: Symbol::Real(u), digits: None }
    }

    pub fn count(k: u64) -> Self {
        Coord { symbol: Symbol::Count(k), digits: None }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self.symbol {
            Symbol::Real(u) => Some(u),
            Symbol::Count(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    InA,
    InB,
    Neutral,
}

/// Ladder position of a coordinate: l_j(x) = sign for first <= j <= depth, else 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Mark {
    pub sign: i8,
    pub depth: i64,
}

impl Mark {
    pub const NEUTRAL: Mark = Mark { sign: 0, depth: i64::MIN };

    #[inline]
    pub fn log_at(&self, level: i64, first: i64) -> i64 {
        if self.sign != 0 && level >= first && level <= self.depth {
            self.sign as i64
        } else {
            0
        }
    }

    /// Whether l_j is nonzero for some level j >= `level`.
    #[inline]
    pub fn active_from(&self, level: i64) -> bool {
        self.sign != 0 && self.depth >= level
    }
}

/// log_lambda of a density value in {lambda, 1, 1/lambda}.
pub fn region_log(r: Region) -> i64 {
    match r {
        Region::InA => 1,
        Region::InB => -1,
        Region::Neutral => 0,
    }
}

/// The nested two-ladder families whose cocycle is an exact power of lambda.
pub trait Ladder: Send + Sync + std::fmt::Debug {
    fn lambda(&self) -> f64;
    fn first(&self) -> i64;
    /// Base-measure mass of A_level, level >= first.
    fn len_a(&self, level: i64) -> f64;
    /// Base-measure mass of B_level, level >= first.
    fn len_b(&self, level: i64) -> f64;
    /// Region by direct membership test.
    fn classify(&self, s: Symbol, n: i64) -> Result<Region>;
    /// Kind and depth of a coordinate.
    fn mark(&self, s: Symbol) -> Result<Mark>;
    /// Coordinate in A_from \ A_to under the base measure.
    fn sample_a(&self, from: i64, to: Option<i64>, rng: &mut CounterRng) -> Coord;
    fn sample_b(&self, from: i64, to: Option<i64>, rng: &mut CounterRng) -> Coord;
    /// Coordinate outside A_first ∪ B_first.
    fn sample_base(&self, rng: &mut CounterRng) -> Coord;

    fn density_value(&self, n: i64, s: Symbol) -> Result<f64> {
        let lam = self.lambda();
        Ok(match self.classify(s, n)? {
            Region::InA => lam,
            Region::InB => 1.0 / lam,
            Region::Neutral => 1.0,
        })
    }

    fn site_log(&self, n: i64, s: Symbol) -> Result<i64> {
        Ok(region_log(self.classify(s, n)?))
    }

    /// Closed-form integral of f_n against the base measure.
    fn integral(&self, n: i64) -> f64 {
        let f = self.first();
        if n < f {
            return 1.0;
        }
        let (la, lb) = (self.len_a(n), self.len_b(n));
        let lam = self.lambda();
        lam * la + lb / lam + (1.0 - la - lb)
    }

    /// Draw x_n with density f_n.
    fn sample_site(&self, n: i64, rng: &mut CounterRng) -> Coord {
        let f = self.first();
        let lam = self.lambda();
        let (a1, b1) = (self.len_a(f), self.len_b(f));
        let u = rng.next_f64();
        if n < f {
            if u < a1 {
                return self.sample_a(f, None, rng);
            }
            if u < a1 + b1 {
                return self.sample_b(f, None, rng);
            }
            return self.sample_base(rng);
        }
        let (an, bn) = (self.len_a(n), self.len_b(n));
        let mut acc = lam * an;
        if u < acc {
            return self.sample_a(n, None, rng);
        }
        acc += a1 - an;
        if u < acc {
            return self.sample_a(f, Some(n), rng);
        }
        acc += bn / lam;
        if u < acc {
            return self.sample_b(n, None, rng);
        }
        acc += b1 - bn;
        if u < acc {
            return self.sample_b(f, Some(n), rng);
        }
        self.sample_base(rng)
    }

    /// Upper bound, nonincreasing in n, on P_{f_n}(A_level ∪ B_level).
    fn active_mass_bound(&self, level: i64) -> f64 {
        let l = level.max(self.first());
        (self.len_a(l) + self.len_b(l) / self.lambda()).min(1.0)
    }

    /// Exact P_{f_n}(A_level ∪ B_level) for first <= level <= n.
    fn active_mass(&self, n: i64, level: i64) -> f64 {
        let lam = self.lambda();
        let (al, bl) = (self.len_a(level), self.len_b(level));
        let (an, bn) = (self.len_a(n), self.len_b(n));
        lam * an + (al - an) + bn / lam + (bl - bn)
    }

    /// Thinned draw: with `bound` >= P_{f_n}(A_level ∪ B_level), return a
    /// draw of x_n conditioned on that event with probability mass/bound,
    /// otherwise None. Requires first <= level <= n.
    fn sample_active(&self, n: i64, level: i64, bound: f64, rng: &mut CounterRng) -> Option<Coord> {
        let lam = self.lambda();
        let (al, bl) = (self.len_a(level), self.len_b(level));
        let (an, bn) = (self.len_a(n), self.len_b(n));
        let u = rng.next_f64() * bound;
        let mut acc = lam * an;
        if u < acc {
            return Some(self.sample_a(n, None, rng));
        }
        acc += al - an;
        if u < acc {
            return Some(self.sample_a(level, Some(n), rng));
        }
        acc += bn / lam;
        if u < acc {
            return Some(self.sample_b(n, None, rng));
        }
        acc += bl - bn;
        if u < acc {
            return Some(self.sample_b(level, Some(n), rng));
        }
        None
    }
}

impl Ladder for ContinuousLadder {
    fn lambda(&self) -> f64 {
        ContinuousLadder::lambda(self)
    }

    fn first(&self) -> i64 {
        ContinuousLadder::first(self)
    }

    fn len_a(&self, level: i64) -> f64 {
        self.len_a_f(level as f64)
    }

    fn len_b(&self, level: i64) -> f64 {
        self.len_b_f(level as f64)
    }

    fn classify(&self, s: Symbol, n: i64) -> Result<Region> {
        match s {
            Symbol::Real(u) => ContinuousLadder::classify(self, u, n),
            Symbol::Count(_) => Err(Error::Domain("integer symbol for the continuous family".into())),
        }
    }

    fn mark(&self, s: Symbol) -> Result<Mark> {
        match s {
            Symbol::Real(u) => self.mark_of(u),
            Symbol::Count(_) => Err(Error::Domain("integer symbol for the continuous family".into())),
        }
    }

    fn sample_a(&self, from: i64, to: Option<i64>, rng: &mut CounterRng) -> Coord {
        Coord::real(self.sample_a_real(from as f64, to.map(|t| t as f64), rng))
    }

    fn sample_b(&self, from: i64, to: Option<i64>, rng: &mut CounterRng) -> Coord {
        Coord::real(self.sample_b_real(from as f64, to.map(|t| t as f64), rng))
    }

    fn sample_base(&self, rng: &mut CounterRng) -> Coord {
        self.sample_base_coord(rng)
    }
}

impl Ladder for CountableLadder {
    fn lambda(&self) -> f64 {
        CountableLadder::lambda(self)
    }

    fn first(&self) -> i64 {
        1
    }

    fn len_a(&self, level: i64) -> f64 {
        a_n(level as f64)
    }

    fn len_b(&self, level: i64) -> f64 {
        CountableLadder::lambda(self) * a_n(level as f64)
    }

    fn classify(&self, s: Symbol, n: i64) -> Result<Region> {
        match s {
            Symbol::Count(k) => Ok(CountableLadder::classify(self, k, n)),
            Symbol::Real(_) => Err(Error::Domain("real symbol for the countable family".into())),
        }
    }

    fn mark(&self, s: Symbol) -> Result<Mark> {
        match s {
            Symbol::Count(k) => Ok(self.mark_of(k)),
            Symbol::Real(_) => Err(Error::Domain("real symbol for the countable family".into())),
        }
    }

    fn sample_a(&self, from: i64, to: Option<i64>, rng: &mut CounterRng) -> Coord {
        Coord::count(CountableLadder::sample_a(self, from, to, rng))
    }

    fn sample_b(&self, from: i64, to: Option<i64>, rng: &mut CounterRng) -> Coord {
        Coord::count(CountableLadder::sample_b(self, from, to, rng))
    }

    fn sample_base(&self, _rng: &mut CounterRng) -> Coord {
        Coord::count(0)
    }
}

/// JSON description of a family, e.g. `{"kind": "continuous", "lambda": 0.5}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: String,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<u8>,
    /// Second scale for the two-scale family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Number of Følner boxes to lay out for the group family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boxes: Option<usize>,
}

impl FamilySpec {
    pub fn continuous(lambda: f64) -> Self {
        FamilySpec { kind: "continuous".into(), lambda, dim: None, delta: None, boxes: None }
    }

    pub fn countable(lambda: f64) -> Self {
        FamilySpec { kind: "countable".into(), lambda, dim: None, delta: None, boxes: None }
    }

    pub fn build(&self) -> Result<Family> {
        match self.kind.as_str() {
            "continuous" => Ok(Family::Continuous(ContinuousLadder::new(self.lambda)?)),
            "countable" => Ok(Family::Countable(CountableLadder::new(self.lambda)?)),
            "group" => {
                let dim = self.dim.unwrap_or(1);
                let layout = GroupLayout::new(dim, self.boxes.unwrap_or(50))?;
                Ok(Family::Group(GroupFamily::new(layout, self.lambda)?))
            }
            "typeIII1a" => Ok(Family::TwoScale(TwoScaleFamily::new(self.lambda, self.delta.unwrap_or(1.0 / 3.0))?)),
            "typeIII1b" => Ok(Family::BiasedPair(BiasedPairFamily::new())),
            other => Err(Error::Parameter(format!("unknown family kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Family {
    Continuous(ContinuousLadder),
    Countable(CountableLadder),
    Group(GroupFamily),
    TwoScale(TwoScaleFamily),
    BiasedPair(BiasedPairFamily),
}

impl Family {
    pub fn kind(&self) -> &'static str {
        match self {
            Family::Continuous(_) => "continuous",
            Family::Countable(_) => "countable",
            Family::Group(_) => "group",
            Family::TwoScale(_) => "typeIII1a",
            Family::BiasedPair(_) => "typeIII1b",
        }
    }

    pub fn ladder(&self) -> Option<&dyn Ladder> {
        match self {
            Family::Continuous(l) => Some(l),
            Family::Countable(l) => Some(l),
            _ => None,
        }
    }

    pub fn require_ladder(&self) -> Result<&dyn Ladder> {
        self.ladder().ok_or_else(|| Error::NotLattice(format!("{} family has no lambda-lattice cocycle", self.kind())))
    }

    /// f_n(s). For the group family on Z the site n is the group element itself.
    pub fn density_value(&self, n: i64, s: Symbol) -> Result<f64> {
        match self {
            Family::Continuous(l) => l.density_value(n, s),
            Family::Countable(l) => l.density_value(n, s),
            Family::Group(g) => g.density_value(&GroupElement::z(n), real(s)?),
            Family::TwoScale(t) => t.density_value(n, real(s)?),
            Family::BiasedPair(b) => b.density_value(n, real(s)?),
        }
    }

    pub fn sample_site(&self, n: i64, rng: &mut CounterRng) -> Coord {
        match self {
            Family::Continuous(l) => l.sample_site(n, rng),
            Family::Countable(l) => l.sample_site(n, rng),
            Family::Group(g) => Coord::real(g.sample_site(&GroupElement::z(n), rng)),
            Family::TwoScale(t) => Coord::real(t.sample_site(n, rng)),
            Family::BiasedPair(b) => b.sample_site(n, rng),
        }
    }

    /// Closed-form integral of f_n.
    pub fn integral(&self, n: i64) -> f64 {
        match self {
            Family::Continuous(l) => l.integral(n),
            Family::Countable(l) => l.integral(n),
            Family::Group(g) => g.integral(&GroupElement::z(n)),
            Family::TwoScale(t) => t.integral(n),
            Family::BiasedPair(b) => b.integral(n),
        }
    }
}

fn real(s: Symbol) -> Result<f64> {
    match s {
        Symbol::Real(u) if (0.0..=1.0).contains(&u) => Ok(u),
        Symbol::Real(u) => Err(Error::Domain(format!("coordinate {u} outside [0,1]"))),
        Symbol::Count(_) => Err(Error::Domain("integer symbol for an interval family".into())),
    }
}
