//! Numerical toolkit for G2-structure geometry on flat periodic tori.
//!
//! The crate is organised bottom-up: [`linear`] holds pointwise multilinear
//! algebra at a single point, [`grid`] the discrete exterior and covariant
//! calculus on periodic grids, and the remaining modules build torsion,
//! curvature, flows, symbol analysis and the six-dimensional reduction on
//! top of those two layers.

pub mod curvature;
pub mod error;
pub mod exact4;
pub mod exec;
pub mod flow;
pub mod generators;
pub mod geometry;
pub mod grid;
pub mod identities;
pub mod linear;
pub mod reduction;
pub mod report;
pub mod symbol;
pub mod torsion;

pub use error::{G2Error, Result};
pub use grid::{Field, GridSpec, Shape};
pub use linear::{AltForm, G2Frame, Tensor2, Vector7};
