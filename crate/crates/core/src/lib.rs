//! Discrete homotopy invariants of finite metric spaces.
//!
//! Distances are exact rationals. Entourages are dense symmetric relations,
//! chains are vertex sequences, and every homotopy claim comes with either a
//! replayable move sequence or an algebraic obstruction.

pub mod chains;
pub mod complex;
pub mod cover;
pub mod entourage;
pub mod io;
pub mod rational;
pub mod space;
pub mod spectra;

pub use entourage::{base_entourage, compose, metric_entourage, union, Entourage, Sigma};
pub use rational::{parse_rational, render, Rational};
pub use space::{CoveringNumber, FiniteMetricSpace, GeneratorSpec, SpaceError};
