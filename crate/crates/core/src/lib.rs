//! Numerical construction and verification of multi-bump solutions of the
//! Schrödinger-Poisson system `-Δu + u + V(x) φ_u u = |u|^{p-1} u`,
//! `-Δφ_u = V u^2`, with `k` bumps placed on a regular polygon.

pub mod cli;
pub mod corrector;
pub mod energy;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod groundstate;
pub mod interactions;
pub mod multipole;
pub mod potentials;
pub mod quadrature;
pub mod sector;

pub use error::{Error, Result};
