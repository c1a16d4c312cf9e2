//! Unruh-DeWitt detectors with amplitude and derivative coupling, the dual
//! switching transform that maps one onto the other at large gap, and
//! two-detector entanglement harvesting.

pub mod acceptance;
pub mod detector;
mod engine;
pub mod error;
pub mod experiments;
pub mod faddeeva;
pub mod field;
pub mod harvesting;
mod profile;
pub mod quad;
pub mod switching;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
