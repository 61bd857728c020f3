//! Quantum-rotor gyroscope model: cold atoms in a lattice of Laguerre–Gauss
//! ring traps, Raman transitions between orbital states, and the resulting
//! rotation-sensing figures of merit.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// 3.142 rad/s is the reference Rabi frequency, not π.
#![cfg_attr(test, allow(clippy::approx_constant))]

pub mod cli;
pub mod config;
pub mod error;
pub mod optics;
pub mod output;
pub mod raman;
pub mod sensor;
pub mod spectrum;
pub mod tridiag;
pub mod units;

pub use error::{Error, Result};
