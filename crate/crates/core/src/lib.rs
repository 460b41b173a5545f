//! Exact movable-cone volume computations for rank-2 models with a
//! hyperbolic automorphism action, growth-exponent estimation, and the
//! quadratic-form side for higher-dimensional analogues.

pub mod error;
pub mod exact;
pub mod model;
pub mod dynamics;
pub mod sweep;
pub mod volume;
pub mod kappa;
pub mod hk;
pub mod acceptance;

pub use error::{Error, Result};
