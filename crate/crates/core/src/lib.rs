//! Numerical laboratory for the obstacle problem `div(a grad w) = chi_{w>0} f`,
//! `w >= 0`, with variable symmetric elliptic coefficients.
//!
//! [`grid`] and [`coeff`] build the discretization, [`solver`] computes the
//! solution as a linear complementarity problem, [`fb`] extracts and measures
//! the free boundary, and [`experiments`] turns the regularity statements
//! (quadratic growth, nondegeneracy, density alternative, stability, flatness)
//! into falsifiable checks.

pub mod coeff;
pub mod error;
pub mod experiments;
pub mod fb;
pub mod fixtures;
pub mod grid;
pub mod solver;

pub use error::{Error, Result};
