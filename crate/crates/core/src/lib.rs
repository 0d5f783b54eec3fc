//! Digital-population simulation engine.
//!
//! Virtual participants answer a problem by blending a reference decision from
//! a language-model backend with a profile-conditioned belief offset drawn from
//! a small conditional VAE. Crowds of such participants are aggregated and
//! evaluated against human data.

pub mod analysis;
pub mod backend;
pub mod beliefnet;
pub mod data;
pub mod decision;
pub mod error;
pub mod harness;
pub mod population;
pub mod rng;

pub use data::{DecisionScale, Problem, ProblemSet, Response, ResponseMatrix, RunReport};
pub use error::{Error, Result};
pub use population::{Profile, ProfileSpec};
