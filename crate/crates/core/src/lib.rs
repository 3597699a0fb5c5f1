//! Greedy m-term approximation and metric entropy in finite-dimensional ℓ_p.
//!
//! * [`space`]: ℓ_p^n norms, norming functionals, modulus of smoothness and
//!   segment line search.
//! * [`systems`]: finite symmetric systems, q-hull sampling and the certified
//!   Hilbert-case hull distance.
//! * [`greedy`]: the Weak Relaxed Greedy Algorithm, its recursion checks and
//!   the two-stage m-term scheme.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entropy;
pub mod error;
pub mod greedy;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod space;
pub mod systems;

pub use error::{Error, Result};
pub use space::LpSpace;
pub use systems::{CoefRepr, SymmetricSystem};
