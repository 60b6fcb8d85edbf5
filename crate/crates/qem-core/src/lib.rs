//! Simulation and post-processing core for neural-network error reduction of
//! Trotterized spin-chain dynamics on a noisy quantum backend.
//!
//! The crate is organized around the stages of the protocol:
//!
//! - [`qsim`] — density-matrix simulator for small qubit registers with
//!   depolarizing gate noise, readout confusion, and shot sampling;
//! - [`circuits`] — Trotter-step gate sequences for the transverse-field
//!   Ising and XY chains, including "empty" (fictitious) Trotter blocks;
//! - [`reference`] — exact Schrödinger evolution and noise-free Trotterized
//!   evolution used as ground truth;
//! - [`datasets`] — generation, post-selection, and pairing of observation
//!   datasets for training and evaluation;
//! - [`mitigator`] — the feed-forward network, Adam training, checkpoint
//!   selection, and inference;
//! - [`metrics`] — mean-square error between dataset roles, magnetization
//!   curves, and deviation curves.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats, and the CLI
//! live in the companion `qem-cli` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod circuits;
pub mod datasets;
mod error;
pub mod linalg;
pub mod metrics;
pub mod mitigator;
pub mod qsim;
pub mod reference;
pub mod rng;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
