//! Chart-local numerics for a metric `g₀` and an almost-symplectic form `ω`.
//! Alternates metric- and ω-preserving connections and certifies Kähler
//! structure pointwise via the Gromov almost-complex structure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod connections;
pub mod error;
pub mod field;
pub mod gromov;
pub mod kahler;
pub mod linalg;
pub mod sequence;
pub mod tensor;
pub mod zoo;

pub use error::{Error, Result};
