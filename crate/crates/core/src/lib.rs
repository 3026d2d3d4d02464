//! Spectral-Galerkin variational solver for the weakly coupled elliptic system
//!
//! ```text
//! -Δu₁ - κ₁u₁ = μ₁|u₁|^{p-2}u₁ + λα|u₁|^{α-2}|u₂|^β u₁
//! -Δu₂ - κ₂u₂ = μ₂|u₂|^{p-2}u₂ + λβ|u₁|^α|u₂|^{β-2}u₂
//! ```
//!
//! with homogeneous Dirichlet data on an axis-aligned box, `α + β = p`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and parallel sweeps live in the `weakcoupled` crate.
//!
//! Layout:
//! - [`spectral`]: box domains, the Dirichlet sine eigenbasis, tensor quadrature.
//! - [`system`]: problem parameters, the quadratic forms `B_i`, the energy
//!   functional and its Galerkin gradient/Hessian, the spectral splitting.
//! - [`nehari`]: generalized Nehari projection, ground states, the `c₀`
//!   threshold, deflated multiplicity search and linking-geometry quantities.
//! - [`limit`]: the ℝᴺ limit system, the Aubin–Talenti bubble and `S_{∞,λ}`.
//! - [`sync`]: synchronized solutions `(s·w, t·w)`.
//! - [`estimates`]: cutoff-bubble integrals and the critical-case checks.
#![no_std]
#![allow(clippy::too_many_arguments, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimates;
pub mod limit;
pub mod math;
pub mod nehari;
pub mod optimize;
pub mod quadrature;
pub mod spectral;
pub mod sync;
pub mod system;

pub use error::{Error, Result};
pub use spectral::{BoxDomain, QuadratureGrid, ScalarField, SineBasis};
pub use system::{Component, PairField, SpectralSplit, SystemParams};
