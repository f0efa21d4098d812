//! Core model of two flux-biased phase qubits joined by a current-biased
//! Josephson tunable coupler: circuit formulas, coupler branch structure and
//! reset, open-system two-qubit dynamics, pulse sequences, and the curve
//! fits the experiment drivers rely on.
//!
//! The crate is no_std + alloc; the `std` feature (default) only widens
//! error trait integration for downstream binaries. File IO, experiment
//! orchestration and the CLI live in the companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod device;
pub mod dynamics;
pub mod fitting;
pub mod hysteresis;
pub mod math;
pub mod sequences;
