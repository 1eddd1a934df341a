//! Radial Lagrangian solver for the vacuum free boundary problem of the
//! compressible Navier–Stokes equations with density-proportional viscosity.
//!
//! The moving gas ball is pulled back to the fixed interval `(0, 1)` by the
//! flow map `η(t, r)`. The velocity `U` is expanded in the Sturm–Liouville
//! basis of [`eigen`], each nonlinear window is solved by Picard iteration
//! over linear Galerkin problems ([`picard`], [`galerkin`]), and the weighted
//! energy estimates that guarantee regularity are evaluated as runtime
//! monitors ([`diagnostics`]).
//!
//! The crate is `no_std` with `alloc`; file formats and the command-line
//! front end live in the `lagvac` crate.

#![no_std]
// NaN has to fail every admissibility check, so `!(x > 0.0)` is preferred
// over `x <= 0.0`; nodal loops index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod cutoff;
pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod eulerian;
pub mod galerkin;
pub mod grid;
pub mod initial;
mod jet;
pub mod lagrangian;
pub mod manufactured;
pub mod picard;

pub use error::{Error, Result};
pub use grid::{GridSpec, RadialGrid};
