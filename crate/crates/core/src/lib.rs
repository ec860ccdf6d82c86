//! Binary marginal independence models for bi-directed graphs.
//!
//! Distributions over `{0,1}^V` are handled in cell coordinates
//! ([`CellDistribution`]) or Möbius coordinates (`q_A = P(X_A = 0)`), in which
//! membership in the model of a bi-directed graph becomes a product
//! factorization over connected sets. Fitting is by iterative conditional
//! fitting ([`icf_fit`]) or quasi-Newton ascent ([`gradient_fit`]).

pub mod datasets;
pub mod error;
pub mod graph;
pub mod icf;
pub mod io;
pub mod likelihood;
pub mod mobius;
pub mod select;
pub mod symmetry;

pub use error::{Error, Result};
pub use graph::{
    BidirectedGraph, ConnectedSetCatalog, Permutation, VertexPermutationGroup, VertexSet,
};
pub use icf::{fit, gradient_fit, icf_fit, Algorithm, FitOptions, InnerMethod};
pub use likelihood::{loglik, lr_test, saturated_loglik, CountTable, FitResult, LrTest};
pub use mobius::{
    mobius_forward, mobius_inverse, parametrize, CellDistribution, ConnectedParams, MobiusVector,
};
pub use select::{backward_stepwise, StepwiseTrace};
pub use symmetry::{combined_fit, symmetry_mle};
