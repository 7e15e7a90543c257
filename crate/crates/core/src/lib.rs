//! Pseudo-orbits, shadowing, chain recurrence, semi-horseshoes and weak*
//! measure approximation on finitely represented dynamical systems.
//!
//! Every quantity is exact: distances are rationals and symbolic points are
//! eventually periodic sequences, so each claim can be re-checked.

pub mod acceptance;
pub mod approx;
pub mod chain;
pub mod construct;
pub mod entropy;
pub mod error;
pub mod horseshoe;
pub mod measure;
pub mod orbit;
pub mod rational;
pub mod shadow;
pub mod space;

pub use error::{Error, Result};
pub use rational::Rational;
pub use space::{
    symbolic_distance, DistanceSpec, MetricReport, NetSystem, SymbolicPoint, SymbolicSystem, System,
    SystemPoint, SystemSpec,
};
