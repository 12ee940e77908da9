//! Level-3 algebraic rough-path integration.
//!
//! The crate covers discrete increments and the sewing construction, geometric
//! lifts (areas and volumes, including doubly delayed families), exact sampling of
//! fractional Brownian motion, and explicit solvers for rough differential and
//! delay differential equations driven by paths of Hölder regularity above 1/4.

pub mod catalog;
pub mod controlled;
pub mod dde;
pub mod error;
pub mod fbm;
pub mod field;
pub mod increments;
pub mod io;
pub mod lift;
pub mod sde;
pub mod tensor;

pub use error::{Error, Result};
