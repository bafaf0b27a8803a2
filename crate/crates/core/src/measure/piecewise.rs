//! Piecewise-constant densities on [0,1] with inverse-CDF sampling.

use crate::error::{Error, Result};
use crate::stats::CounterRng;

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseUniform {
    edges: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

impl PiecewiseUniform {
    /// `edges` strictly increasing, one density per cell between consecutive edges.
    pub fn new(edges: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if edges.len() != density.len() + 1 || density.is_empty() {
            return Err(Error::Parameter("need one more edge than densities".into()));
        }
        if edges.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Parameter("edges must be nondecreasing".into()));
        }
        if density.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
            return Err(Error::Parameter("densities must be finite and nonnegative".into()));
        }
        let mut cdf = Vec::with_capacity(edges.len());
        cdf.push(0.0);
        for i in 0..density.len() {
            let prev = cdf[i];
            cdf.push(prev + density[i] * (edges[i + 1] - edges[i]));
        }
        Ok(PiecewiseUniform { edges, density, cdf })
    }

    pub fn total_mass(&self) -> f64 {
        self.cdf[self.cdf.len() - 1]
    }

    pub fn density_at(&self, u: f64) -> f64 {
        match self.edges.windows(2).position(|w| u >= w[0] && u < w[1]) {
            Some(i) => self.density[i],
            None if u == self.edges[self.edges.len() - 1] => self.density[self.density.len() - 1],
            None => 0.0,
        }
    }

    /// Mass of [l, r].
    pub fn mass_between(&self, l: f64, r: f64) -> f64 {
        let mut m = 0.0;
        for i in 0..self.density.len() {
            let lo = self.edges[i].max(l);
            let hi = self.edges[i + 1].min(r);
            if hi > lo {
                m += self.density[i] * (hi - lo);
            }
        }
        m
    }

    /// The same density restricted to [l, r] (not renormalised).
    pub fn restrict(&self, l: f64, r: f64) -> Result<Self> {
        if r <= l {
            return Err(Error::Parameter(format!("empty restriction [{l}, {r}]")));
        }
        let mut edges = vec![l];
        let mut density = Vec::new();
        for i in 0..self.density.len() {
            let lo = self.edges[i].max(l);
            let hi = self.edges[i + 1].min(r);
            if hi > lo {
                if lo > *edges.last().unwrap() {
                    edges.push(lo);
                    density.push(0.0);
                }
                edges.push(hi);
                density.push(self.density[i]);
            }
        }
        if density.is_empty() {
            return Err(Error::Parameter("restriction misses the support".into()));
        }
        PiecewiseUniform::new(edges, density)
    }

    /// Draw from the normalised density.
    pub fn sample(&self, rng: &mut CounterRng) -> f64 {
        let t = rng.next_f64() * self.total_mass();
        let i = match self.cdf[1..].iter().position(|&c| t < c) {
            Some(i) => i,
            None => self.density.iter().rposition(|&d| d > 0.0).unwrap_or(0),
        };
        let (lo, hi) = (self.edges[i], self.edges[i + 1]);
        if self.density[i] == 0.0 {
            return lo;
        }
        let x = lo + (t - self.cdf[i]) / self.density[i];
        x.clamp(lo, hi)
    }
}
