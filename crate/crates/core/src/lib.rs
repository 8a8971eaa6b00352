//! Evaluation, constraint checking, certification and search over the
//! parameter space of the fourth tensor power bound on omega(kappa).

pub mod certifier;
pub mod combination_loss;
pub mod combinatorics;
pub mod constraints;
pub mod error;
pub mod marginals;
pub mod optimizer;
pub mod params;
pub mod sum;
pub mod value_terms;

pub use combinatorics::{IndexSet, RolePermutation, TripleIndex};
pub use error::Error;
pub use params::ParameterSet;
