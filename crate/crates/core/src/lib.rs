//! Average treatment effects on latent outcomes learned by Poisson NMF.
//!
//! The crate provides KL-divergence multiplicative-update factorization,
//! factor alignment, counterfactual imputation on the square-root scale,
//! seven ATE estimation algorithms, a bootstrap wrapper with consensus
//! alignment, and a simulation harness quantifying learning-induced
//! interference through indirect-effect metrics.

pub mod alignment;
pub mod bootstrap;
pub mod cli;
pub mod data;
pub mod error;
pub mod estimators;
pub mod factorization;
pub mod imputation;
pub mod io;
pub mod rng;
pub mod simulation;

pub use data::{CountMatrix, TreatmentVector};
pub use error::{Error, ErrorCategory, Result};
pub use estimators::{Algorithm, AteEstimate, EstimatorForm, LearnedOutcomes, PotentialOutcomes};
pub use factorization::{kl_divergence, nmf_fit, nnlm_fit, normalize, FactorModel, FitConfig};
