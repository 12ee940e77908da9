//! Geometric level-3 lifts of piecewise-linear paths (areas and volumes), their
//! doubly delayed families, and an audit of the algebraic relations they satisfy.

mod audit;
mod delayed;
mod linear;

pub use audit::{verify_delayed, verify_lift, AuditRow, AuditReport, EXHAUSTIVE_LIMIT, SAMPLE_SIZE};
pub use delayed::{delayed_area, delayed_volume, AreaFamily, DelayedLift, VolumeFamily};
pub use linear::{chen2, chen3, lift_linear, CellView, Level3, LevelRef, RoughLift3};
