//! Command-line front end for the `neurosim` library: configuration files
//! with SI units, one subcommand per characterization experiment, and
//! CSV/JSON/SVG output.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
mod error;
pub mod output;
pub mod plot;
pub mod units;

pub use error::{CliError, CliResult};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/synapse.md")]
    mod synapse {}
    #[doc = include_str!("../../../book/src/neuron.md")]
    mod neuron {}
    #[doc = include_str!("../../../book/src/aer.md")]
    mod aer {}
    #[doc = include_str!("../../../book/src/energy-mismatch.md")]
    mod energy_mismatch {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
