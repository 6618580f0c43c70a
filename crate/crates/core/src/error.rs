use thiserror::Error;

use crate::classical::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the region where the quantity is defined.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A numerical budget (tail bound, subdivision count, time horizon) was exhausted.
    #[error("budget exceeded in {module}::{op}: {budget}")]
    Budget {
        module: &'static str,
        op: &'static str,
        budget: String,
    },

    /// Orbit integration failed; the trajectory up to the failure is attached.
    #[error("integration failed at t = {t}: {msg}")]
    Integration {
        t: f64,
        msg: String,
        partial: Box<Trajectory>,
    },

    #[error("insufficient data in {op}: {msg}")]
    InsufficientData { op: &'static str, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    pub(crate) fn budget(
        module: &'static str,
        op: &'static str,
        budget: impl Into<String>,
    ) -> Self {
        Error::Budget {
            module,
            op,
            budget: budget.into(),
        }
    }

    pub(crate) fn insufficient(op: &'static str, msg: impl Into<String>) -> Self {
        Error::InsufficientData {
            op,
            msg: msg.into(),
        }
    }
}
