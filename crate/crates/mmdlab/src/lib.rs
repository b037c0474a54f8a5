//! mmdlab: kernel maximum mean discrepancy estimators, complexity measures,
//! concentration/generalization bounds, and seeded Monte-Carlo experiments
//! that verify the bounds against closed-form population oracles.
//!
//! The pieces fit together like this: [`kernels`] supplies reproducing
//! kernels with certified Lipschitz/boundedness constants; [`mmd`] estimates
//! squared MMD from samples and computes population values exactly (Gaussian
//! case) or by Monte Carlo; [`function_classes`] holds the finite generator
//! and feature classes; [`complexity`] estimates their Gaussian/Rademacher
//! complexity; [`bounds`] evaluates the closed-form deviation and
//! excess-risk bounds those quantities feed; [`estimators`] fits min-MMD and
//! min-max estimators by exhaustive enumeration; [`experiments`] wires it all
//! into seeded coverage/decay/excess-risk/audit studies.
//!
//! Everything that consumes randomness takes an explicit seed and is
//! bit-reproducible independent of thread count.

pub mod bounds;
pub mod complexity;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod function_classes;
pub mod kernels;
pub mod mmd;
pub mod report;
pub mod rng;
pub mod samples;
pub mod sampling;

pub use error::{Error, Result};
