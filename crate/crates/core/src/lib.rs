//! Numerical laboratory for large two-color Pólya urns.
//!
//! Exact finite-time laws, Monte Carlo estimators of the martingale limits
//! `W^DT` and `W^CT`, particle solvers for the smoothing fixed-point systems
//! they satisfy, exact moment recursions, Dirichlet limits of diagonal urns,
//! and empirical density / characteristic-function diagnostics.

pub mod density;
pub mod dirichlet;
pub mod error;
pub mod exact;
pub mod exec;
pub mod fixpoint;
pub mod mc;
pub mod moments;
pub mod rational;
pub mod rng;
pub mod sample;
pub mod special;
pub mod stats;
pub mod urn;

pub use error::{Result, UrnError};
pub use sample::{SampleMeta, SampleSet};
pub use urn::{Composition, UrnClass, UrnSpec};
