//! Discrete Maharam extension (x, z) -> (Tx, z - φ(x)) with φ = log_lambda T'.

pub mod probe;
pub mod product;

use num_bigint::BigInt;
use serde::Serialize;

use crate::cocycle::{rn_exponents_upto, Window};
use crate::error::Result;

pub use probe::{essential_value_probe, probe_search, Cylinder, ProbeReport, ProbeSearch};
pub use product::{product_criterion, ProductReport, ProductSpec};

#[derive(Clone, Debug)]
pub struct SkewState {
    pub window: Window,
    pub height: BigInt,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitPoint {
    pub step: i64,
    /// m(j): (T^j)'(x) = lambda^{m(j)}.
    pub exponent: i64,
    #[serde(serialize_with = "serialize_bigint")]
    pub height: BigInt,
}

fn serialize_bigint<S: serde::Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl SkewState {
    pub fn new(window: Window, height: impl Into<BigInt>) -> Self {
        SkewState { window, height: height.into() }
    }
}

/// Orbit of (x, z_0) for `steps` steps: z_j = z_0 - m(j).
pub fn maharam_orbit(s: &SkewState, steps: i64) -> Result<Vec<OrbitPoint>> {
    let exps = rn_exponents_upto(&s.window, steps)?;
    let mut out = Vec::with_capacity(exps.len() + 1);
    out.push(OrbitPoint { step: 0, exponent: 0, height: s.height.clone() });
    let mut z = s.height.clone();
    let mut prev = 0i64;
    for (i, &m) in exps.iter().enumerate() {
        // z_j - z_{j-1} = -(m(j) - m(j-1)) = -φ(T^{j-1} x)
        z -= m - prev;
        prev = m;
        out.push(OrbitPoint { step: i as i64 + 1, exponent: m, height: z.clone() });
    }
    Ok(out)
}

/// log_lambda of the Maharam weight ratio lambda^{z_j} / lambda^{z_0}.
pub fn weight_log(trace: &[OrbitPoint], j: usize) -> BigInt {
    &trace[j].height - &trace[0].height
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{rn_exponent, SeedRecord};
    use crate::measure::{ContinuousLadder, Coord, Ladder};
    use std::sync::Arc;

    #[test]
    fn neutral_orbit_is_flat() {
        let lad: Arc<dyn Ladder> = Arc::new(ContinuousLadder::new(0.5).unwrap());
        let w = Window::from_coords(lad, -50, vec![Coord::real(0.9); 300]).unwrap().with_epsilon(1.0);
        let t = maharam_orbit(&SkewState::new(w, 7), 40).unwrap();
        assert!(t.iter().all(|p| p.height == BigInt::from(7)));
    }

    #[test]
    fn heights_track_fresh_exponents() {
        let lad: Arc<dyn Ladder> = Arc::new(ContinuousLadder::new(0.3).unwrap());
        let w = Window::for_shifts(lad, 1, 80, 1e-6, SeedRecord::new(12, 0)).unwrap();
        let t = maharam_orbit(&SkewState::new(w.clone(), -3), 80).unwrap();
        let mut incr = BigInt::from(0);
        for j in 1..t.len() {
            let m = rn_exponent(&w, j as i64).unwrap().exponent;
            assert_eq!(t[j].height, BigInt::from(-3 - m));
            incr += &t[j].height - &t[j - 1].height;
            assert_eq!(weight_log(&t, j), incr);
        }
    }
}
