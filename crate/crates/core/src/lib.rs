//! Building blocks for OFDM timing synchronization under transmitter
//! nonlinearity.
//!
//! The crate covers the full signal path of a timing-synchronization
//! experiment: baseband frame synthesis with a half-repeating preamble
//! ([`frame`]), a Saleh power-amplifier model with EVM calibration
//! ([`saleh`]), multipath/CFO/noise impairments ([`channel`]), the classic
//! half-symbol correlation timing metric ([`metric`]), target-vector
//! construction for learned refinement ([`labels`]), and a single-hidden-layer
//! random-feature network trained in closed form ([`elm`]).
//!
//! Everything is deterministic under explicit seeds; see [`rng`] for how
//! per-trial streams are derived.

pub mod channel;
pub mod elm;
pub mod error;
pub mod frame;
pub mod labels;
pub mod metric;
pub mod model_io;
pub mod params;
pub mod rng;
pub mod saleh;

pub use error::Error;
pub use params::SystemParams;

/// Complex baseband sample type used throughout.
pub type Sample = num_complex::Complex64;
