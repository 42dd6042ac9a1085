//! Diffusion-velocity particle method for the porous medium equation
//! `∂_t u = Δ(u²)/2` on the periodic unit torus.
//!
//! The porous medium velocity `-∇u` is mollified to `V_ε = -∇R_ε ⋆ u`, which
//! turns the equation into the aggregation equation `∂_t u + div(V_ε u) = 0`
//! and lets `N` particles carry the density. The crate provides
//!
//! * [`grid`]: periodic grids, fields and FFT calculus;
//! * [`kernels`]: mollifiers, their torus realisation and admissibility checks;
//! * [`dynamics`]: particle, aggregation and porous medium solvers;
//! * [`transport`]: Wasserstein-2 distances on the torus;
//! * [`diagnostics`]: energy ledgers, kernel inequalities, commutator terms;
//! * [`harness`]: convergence experiments and report files.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field_io;
pub mod grid;
pub mod harness;
pub mod kernels;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{FieldKind, GridField, PeriodicGrid, SpectralCoefficients};
