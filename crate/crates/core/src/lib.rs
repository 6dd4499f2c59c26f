//! Hand-eye and robot-world calibration (`AX = YB`) on SE(3) with
//! uncertainty-aware solvers.

// `!(a > b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod se3;
pub mod solvers;
pub mod synth;
pub mod uncertainty;

pub use error::{Error, Result};
