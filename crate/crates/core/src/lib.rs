//! Spectral theory of canonical systems `Ju′ = −zHu` and compilation of
//! quantum graphs into higher-order canonical systems.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod graph;
pub mod hamiltonian;
pub mod io;
pub mod quadrature;
pub mod schrodinger;
pub mod spectral;

pub use error::{Error, Result};
