//! Polar-code flip-decoding laboratory.
//!
//! This crate implements successive-cancellation (SC) decoding of polar codes
//! together with the CRC-aided flip decoders built on top of it (SCF and
//! DSCF-ω), the Fast-SSC decoder with R0/R1/REP/SPC special nodes, and a
//! family of restart mechanisms (LRT, SRM, GRM) that skip redundant
//! computations in additional decoding trials. Restarts never change decoder
//! decisions; they only reduce the modeled execution time.
//!
//! Alongside the decoders, the crate provides an analytic cycle-count model
//! for a semi-parallel decoder with `P` processing elements, a memory
//! estimator, and a deterministic Monte-Carlo simulation engine for
//! frame-error-rate and average-execution-time sweeps.

pub mod channel;
pub mod code;
pub mod cost;
pub mod fast;
pub mod flip;
pub mod restart;
pub mod sc;
pub mod sim;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
