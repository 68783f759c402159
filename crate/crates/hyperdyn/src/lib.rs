//! Numerical laboratory for the boundary dynamics of Schottky groups:
//! twisted transfer operators and their spectral gaps, the critical exponent,
//! cylinder-level equilibrium measures, closed-geodesic holonomy statistics,
//! and suspension-flow mixing experiments.

pub mod coding;
pub mod config;
pub mod geodesics;
pub mod manifest;
pub mod measures;
pub mod transfer;
pub mod error;
pub mod experiments;
pub mod moebius;
pub mod schottky;

pub use error::{Error, ErrorClass, Result};
