//! Experiment driver for correlation-plus-network OFDM timing
//! synchronization: configuration, dataset generation, Monte Carlo
//! error-probability evaluation, scenario sweeps, and result export.

pub mod config;
pub mod curve;
pub mod dataset;
pub mod estimators;
pub mod selftest;
pub mod sweep;
pub mod trial;
