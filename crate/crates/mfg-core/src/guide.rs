//! The guide chapters from `book/src`, included as documentation so
//! `cargo test --doc` compiles and runs every code block in the book.
//! A chapter that drifts from the API breaks the build here.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/grids-and-basis.md")]
pub mod grids_and_basis {}

#[doc = include_str!("../../../book/src/forward-solver.md")]
pub mod forward_solver {}

#[doc = include_str!("../../../book/src/linear-structure.md")]
pub mod linear_structure {}

#[doc = include_str!("../../../book/src/probing-modes.md")]
pub mod probing_modes {}

#[doc = include_str!("../../../book/src/pairing-identity.md")]
pub mod pairing_identity {}

#[doc = include_str!("../../../book/src/inverse-recovery.md")]
pub mod inverse_recovery {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
