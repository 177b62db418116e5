//! Exact-arithmetic rent division across several candidate apartments.

pub mod document;
pub mod error;
pub mod extensions;
pub mod fairness;
pub mod fixtures;
pub mod lp;
pub mod matching;
pub mod model;
pub mod money;
pub mod negotiation;
mod programs;
pub mod solvers;
pub mod stochastic;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use model::{Assignment, Instance, PartialSolution, PriceMatrix, Solution};
pub use money::Money;
