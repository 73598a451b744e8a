//! Symbolic-numeric engine for Ricci-type curvature conditions on Riemannian metrics.

pub mod classical;
pub mod conditions;
pub mod corpus;
pub mod dsl;
pub mod expr;
pub mod fd;
pub mod geometry;
pub mod identities;
pub mod linalg;
pub mod ode;
pub mod sampling;
pub mod scalar;
pub mod tensor;
#[cfg(test)]
mod testutil;

pub use expr::{Bindings, EvalError, Expr, Symbol, Tape};
pub use scalar::Real;
