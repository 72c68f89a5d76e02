//! Simulation of dual-polarization coherent optical OFDM links with
//! phase-conjugated twin coding for Kerr nonlinearity cancellation.

pub mod channel;
pub mod coding;
pub mod error;
pub mod fft;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod ofdm;
pub mod oracle;
pub mod rxdsp;
pub mod signal;

pub use error::{Error, Result};
pub use num_complex::Complex64;
