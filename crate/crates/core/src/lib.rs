//! Simulation core for a driven two-level energy-storage element.
//!
//! The crate is `no_std` (it needs `alloc` for trajectories and reports) and
//! covers four layers:
//!
//! * [`model`]: states, operators and state-level observables,
//! * [`analytic`]: closed-form constant-drive results,
//! * [`dynamics`]: Schrödinger and Lindblad propagation with an adaptive
//!   Dormand-Prince integrator,
//! * [`verify`]: oracle comparisons between the closed forms, finite
//!   differences and the integrator.
//!
//! Units follow ħ = 1, so energies, drive amplitudes and rates are all
//! angular frequencies. Matrices use the ordered basis `(|e⟩, |g⟩)`.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analytic;
pub mod dynamics;
mod error;
pub mod model;
mod ode;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
