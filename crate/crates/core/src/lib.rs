//! Speed-up factor evaluation of active-learning query methods.
//!
//! Learning curves are approximated by saturating functions of `x / b`
//! sharing asymptote and intercept across query methods, so the ratio of the
//! fitted scales `b_qm / b_rand` is the fraction of samples a method needs
//! to match random sampling. The crate also provides the connected
//! (inverted piecewise-linear) speed-up ratio, the usual multi-iteration
//! baselines, stop-budget stability analysis and a small emulator that
//! produces learning curves from a synthetic active-learning loop.

// `!(a > b)` is used on purpose so that NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod curve;
pub mod emulator;
pub mod error;
pub mod fitting;
pub mod io;
pub mod metrics;

pub use curve::{build_curve, CurvePoint, LearningCurve};
pub use error::{Error, Result};
pub use fitting::{ApproxModel, FunctionFamily};
