//! Verification-based (VB) recovery of sparse signals over random biregular
//! sensing graphs.
//!
//! The crate has four parts:
//!
//! * [`ensembles`] — random biregular weighted sensing graphs, sparse input
//!   signals and (optionally noisy) measurement vectors.
//! * [`decoder`] — the node-based VB recovery algorithms (Genie, LM, SBB, XH)
//!   as round-structured message passing, plus the noisy-measurement
//!   thresholding preprocessor and a ground-truth audit.
//! * [`de`] — density evolution: exact numerical iteration of the Genie, LM
//!   and SBB recursions and a binary search for the success threshold on the
//!   signal density factor.
//! * [`experiments`] — seeded Monte-Carlo harnesses (success-ratio sweeps,
//!   DE-vs-simulation traces, concentration statistics, threshold tables,
//!   noisy recovery) with deterministic CSV output.
//!
//! All randomness flows through explicitly seeded ChaCha generators (see
//! [`rng`]), so every result in the crate is a pure function of its inputs.

pub mod de;
pub mod decoder;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod rng;

pub use error::Error;
