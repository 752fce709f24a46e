//! Numerical toolkit for a rotating, translating strand field theory on a
//! periodic line: so(3) algebra, reduced multimomentum state, Hamiltonian
//! density, covariant brackets, method-of-lines dynamics and verification
//! harnesses.

pub mod algebra;
pub mod brackets;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fourier;
pub mod hamiltonian;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
