//! Forward and inverse numerical toolkit for mean field games with
//! reflecting boundaries.
//!
//! The library solves the coupled value-function / density system
//!
//! ```text
//!   -∂_t u - Δu + ½|∇u|² = F(x, m)     u(·, T) = G
//!    ∂_t m - Δm - div(m ∇u) = 0        m(·, 0) = m₀
//! ```
//!
//! on the unit interval with zero-flux (Neumann) boundaries, so the
//! density stays a probability density: nonnegative with unit mass at
//! every time. Around the uniform density the solution map is smooth in
//! the initial perturbation, and its derivatives solve linear systems
//! that decouple over the Neumann cosine basis. The toolkit exploits this
//! twice: closed-form probing modes certify the linear structure, and a
//! staged reconstruction recovers the Taylor coefficients of the running
//! cost `F` from boundary-time measurements `(u(·,0), m(·,T))`.
//!
//! Modules, roughly bottom-up:
//!
//! - [`mesh`], [`operators`], [`basis`]: grids, trapezoid quadrature, the
//!   reflected Laplacian, and the sampled cosine eigenbasis.
//! - [`running_cost`]: truncated Taylor representation of `F` and its
//!   admissibility checks.
//! - [`forward`]: damped fixed-point solver for the full nonlinear
//!   system with structurally exact mass conservation.
//! - [`linearized`]: per-mode closed-form solvers for the first- and
//!   second-order systems and the backward (adjoint) system.
//! - [`probes`]: closed-form special solutions with exponential time
//!   branches, plus numerical certificates.
//! - [`identity`]: the pairing identity that links measurement agreement
//!   to coefficient equality, verified on manufactured scenarios.
//! - [`measurement`]: the measurement map and difference stencils that
//!   extract derivative data from nonlinear solves.
//! - [`inverse`]: the staged coefficient reconstruction.
//! - [`checks`]: the verification suite shared by the test gate and the
//!   command-line runner.
//!
//! The [`guide`] module embeds the book chapters from `book/src`, so the
//! guide's code blocks run under `cargo test --doc`.

pub mod basis;
pub mod checks;
pub mod error;
pub mod forward;
pub mod guide;
pub mod identity;
pub mod inverse;
pub mod linearized;
pub mod measurement;
pub mod mesh;
pub mod operators;
pub mod probes;
pub mod running_cost;
pub mod tolerances;

pub use error::{Error, Result};
