//! Contour dynamics for the one-phase Muskat problem with `2pi`-periodic graph
//! interfaces `y = f(x)`.
//!
//! The evolution `f_t = -kappa G(f)f + eps f_xx` is advanced with the
//! Dirichlet-Neumann operator `G(f)` expressed through layer potentials on the
//! graph, discretized by a trapezoid Nyström method on a uniform grid.

// `!(x >= 0.0)` style guards are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bie;
pub mod diagnostics;
pub mod dno;
pub mod error;
mod gmres;
pub mod kernels;
pub mod oracles;
pub mod profiles;
pub mod spectral;
pub mod stepper;
pub mod validate;

pub use error::{Error, Result};
pub use spectral::{GridFunction, PeriodicGrid};

/// Deliberate defects used by the validation suite's mutation canaries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FaultInjection {
    /// Negate the Hilbert transform inside the Dirichlet-Neumann split.
    pub flip_hilbert_sign: bool,
    /// Negate the diagonal limit of the `K*` integrand during assembly.
    pub corrupt_kstar_diagonal: bool,
}
