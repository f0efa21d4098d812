//! Experiment drivers, configuration and reporting for the coupler model.
//! The device physics and integrators live in coupler-core; this crate adds
//! run configs, gridded experiments, fits-to-figures and file output.

pub mod config;
pub mod experiments;
pub mod report;
