//! Community recovery in the stochastic block model by counting blow-up
//! cycle motifs with fasteners.
//!
//! The pipeline:
//!
//! 1. [`motif::build_blowup_motif`] builds `G(L, B, a)`;
//!    [`verifier`] certifies its partition condition.
//! 2. [`sbm::sample`] draws a graph; [`sbm::SbmSample::centered`] gives `Y`.
//! 3. [`counter::count_blocks`] evaluates the per-block counts `R_ij`.
//! 4. [`estimator::recover`] thresholds their median and clusters.
//!
//! [`experiment`] reruns the finite-n identities as Monte Carlo checks.

pub mod counter;
pub mod estimator;
pub mod experiment;
pub mod motif;
pub mod rational;
pub mod rng;
pub mod sbm;
pub mod verifier;

pub use counter::{count_attached, count_blocks, expected_count_same, CountRequest, CountResult};
pub use estimator::{estimate_pair, recover, EstimatorConfig, PairEstimate, RecoveryResult};
pub use motif::{build_blowup_motif, Motif, MotifError};
pub use rational::Rational;
pub use sbm::{sample, sample_conditioned, Pin, SbmParams, SbmSample, SymMatrix};
pub use verifier::{certify_exhaustive, certify_sampled, SlackReport};
