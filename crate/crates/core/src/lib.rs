//! Simulation and design toolkit for Bloch-band atom interferometry.
//!
//! Computes the band structure of a shaken 1D optical lattice, synthesizes
//! the universal matterwave gate set by gradient-based optimal control,
//! stitches gates into inertial-sensing circuits, propagates the full
//! atom-lattice dynamics under applied signals, and evaluates fringes,
//! Fisher information, and sensitivity.

pub mod circuit;
pub mod dynamics;
pub mod error;
pub mod gatesynth;
pub mod lattice;
pub mod linalg;
pub mod sensing;

pub use error::{Error, Result};
