//! Multi-material transport at desk scale.
//!
//! Vector-valued minimum-cost flows on geometric candidate graphs under a
//! material-bundle norm h, the generated matrix norm H with certified
//! two-sided evaluation, calibration certificates from exact LP duality,
//! h-masses of finite chains, and grid flat norms.

pub mod error;
pub mod linalg;
pub mod polytope;

pub mod norm;

pub mod chains;
pub mod grid;

pub mod lp;

pub mod flow;

pub mod duality;

pub mod flatnorm;

pub mod catalog;
pub mod generators;

pub use error::{Error, Result};
