use thiserror::Error;

use crate::aer::{HandshakePhase, HandshakeSignal};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or inconsistent configuration. `line` is set when the error
    /// originates from a config file.
    #[error("{}", match .line { Some(l) => format!("config error (line {l}): {msg}"), None => format!("config error: {msg}") })]
    Config { line: Option<usize>, msg: String },

    #[error("protocol violation at t={time:e}s: signal {signal:?} is illegal in phase {phase:?}")]
    Protocol {
        phase: HandshakePhase,
        signal: HandshakeSignal,
        time: f64,
    },

    #[error("routing error: unknown source neuron {0}")]
    Routing(usize),

    #[error("fit error: {0}")]
    Fit(String),

    /// Engine invariant broken. Indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            msg: msg.into(),
        }
    }

    pub fn config_at(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line: Some(line),
            msg: msg.into(),
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
