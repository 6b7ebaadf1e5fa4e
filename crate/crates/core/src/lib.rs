//! Exact reduced dynamics of a `d`-level system coupled to a discretized
//! bosonic reservoir, restricted to states with at most one excitation.
//!
//! A model is a set of level energies `ε_i`, reservoir modes `(ω_n, w_n)`
//! and form factors `f_ij(ω_n)`. States are amplitudes `c_i(t)` plus mode
//! functions `g^i(ω_n)`; all mode overlaps use the weighted inner product
//! `(f, g) = Σ_n w_n conj(f_n) g_n`.

pub mod error;
pub mod export;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod random;
pub mod reduced;
pub mod solvers;
pub mod spinboson;

pub use error::{Error, Result};
pub use model::{build_model, InitialState, Model};
