//! Behavioral simulation of subthreshold neuromorphic circuits.
//!
//! The crate models a differential-pair-integrator (DPI) synapse, a
//! current-mode adaptive exponential integrate-and-fire neuron with its
//! address-event handshake, and the experiments used to characterize them:
//! time-constant extraction, F-I sweeps, spike-frequency adaptation, an
//! energy-per-spike model and Monte Carlo mismatch.
//!
//! ```
//! use neurosim::device::{effective_tau, LeakModel, PhysicalConstants};
//!
//! let tau = effective_tau(821e-15, 100e-15, &LeakModel::disabled(), &PhysicalConstants::default())?;
//! assert!((tau - 0.2737).abs() < 1e-3);
//! # Ok::<(), neurosim::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aer;
pub mod analysis;
pub mod device;
pub mod engine;
mod error;
pub mod neuron;
pub mod synapse;

pub use error::{Error, Result};
