//! Sparse Bayesian linear regression under three-parameter-beta (TPB) normal
//! scale-mixture priors.
//!
//! The crate bundles the special functions and distributions behind the prior
//! family, three inference engines over one regression model (a Gibbs
//! sampler, a variational-Bayes fixed-point iteration and an EM routine for
//! sparse MAP estimates), a cross-validated lasso baseline and a simulation
//! harness for relative-model-error studies.
//!
//! Monte Carlo loops (replicates, folds, sampler batteries) go through
//! [`par`], which uses rayon when the `parallel` feature is enabled and falls
//! back to plain iteration otherwise. Results never depend on which path ran.

pub mod dist;
pub mod em;
pub mod error;
pub mod gibbs;
pub mod lasso;
pub mod linalg;
pub mod model;
pub mod par;
pub mod quad;
pub mod report;
pub mod rng;
pub mod sim;
pub mod specfun;
pub mod stats;
pub mod vb;

pub use error::{Error, Result};
