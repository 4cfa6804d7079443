//! Sampled-data stabilization of nonlinear control systems from control
//! Lyapunov functions, with a small-gain composition for interconnected
//! driftless systems.
//!
//! * [`dynamics`] — vector fields, scalar fields, control systems, Lie
//!   derivatives and brackets.
//! * [`integrate`] — fixed-step RK4 under piecewise-constant inputs.
//! * [`clf_sdf`] — feedback synthesis for control-affine systems from a CLF.
//! * [`sampled_loop`] — the closed sampling loop, its ledger and verifiers.
//! * [`smallgain`] — gain algebra, Lie-rank checks and the composite
//!   controller.
//! * [`scenarios`] — built-in and configured scenarios plus file output.

// `!(a < b)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clf_sdf;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod par;
pub mod sampled_loop;
pub mod scenarios;
pub mod smallgain;

pub use error::{Error, Result};
