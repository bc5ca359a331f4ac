//! Numerical laboratory for the semilinear wave equation with
//! time-dependent strong damping
//!
//! ```text
//! u_tt - Δu - b0 (1+t)^(-β) Δu_t = |u|^p,   x ∈ [-L, L)^n (periodic), t > 0
//! ```
//!
//! The crate is organised by concern:
//!
//! - [`exponents`]: critical exponents and the blow-up region classifier.
//! - [`grid`]: periodic lattice, spectral operators, quadrature and field I/O.
//! - [`model`]: PDE parameters, damping coefficient, nonlinearity, initial data.
//! - [`stepper`]: IMEX time stepping, energy ledger, blow-up detection.
//! - [`testfn`]: cut-off test functions, weak-form residual, bound terms and power laws.
//! - [`scalelab`]: scaling maps of the linear equation and invariance checks.
//! - [`oracle`]: independent ODE references (homogeneous reduction, single Fourier mode).
//! - [`sweep`]: parameter sweeps producing regime maps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exponents;
pub mod grid;
pub mod model;
pub mod oracle;
pub mod quad;
pub mod scalelab;
pub mod stepper;
pub mod sweep;
pub mod testfn;

pub use error::{Error, Result};
pub use exponents::{RegionVerdict, Threshold};
pub use grid::{Field, Grid};
pub use model::{InitialData, Params, Source};
pub use stepper::{BlowupEstimate, Controls, EnergyRecord, Outcome, RunReport, State};
pub use testfn::{CutoffSpec, TermBundle};


