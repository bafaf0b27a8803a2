//! Nonsingular Bernoulli shifts built from nested ladder densities: cocycles,
//! Maharam extensions, finitary factor codes and the statistics to check them.

pub mod cocycle;
pub mod error;
pub mod factors;
pub mod maharam;
pub mod matching;
pub mod measure;
pub mod permutation;
pub mod stats;

pub use error::{Error, Result};
