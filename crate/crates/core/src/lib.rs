//! Dispersive optical bistability of saturable two-level atoms in a driven cavity:
//! steady-state response, hysteresis scans, time-domain dynamics, spectral
//! analysis and parameter fitting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod params;
mod poly;
pub mod steady;

pub use error::{ConfigError, Error, Result};
