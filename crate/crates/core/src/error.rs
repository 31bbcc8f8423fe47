use std::fmt;

use thiserror::Error;

/// A single violated invariant, identified by the configuration key path
/// of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every invariant violation found while validating a scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationErrors(pub Vec<Violation>);

impl ValidationErrors {
    pub fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Violation> {
        self.0.iter()
    }

    /// True if any violation message contains `needle`.
    pub fn mentions(&self, needle: &str) -> bool {
        self.0.iter().any(|v| v.message.contains(needle) || v.path.contains(needle))
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario:\n{0}")]
    Validation(#[from] ValidationErrors),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("quadrature on [{lo}, {hi}] did not converge (error estimate {estimate:e})")]
    Quadrature { lo: f64, hi: f64, estimate: f64 },

    #[error("could not bracket a detection threshold for target {target}")]
    ThresholdBracket { target: f64 },

    #[error("PU arrival offset {t} outside the sensing window [0, {sensing_time}]")]
    ArrivalOutOfWindow { t: f64, sensing_time: f64 },

    #[error("{count} partitions of {users} users over {channels} channels exceed the limit of {limit}")]
    Capacity {
        users: usize,
        channels: usize,
        count: f64,
        limit: u64,
    },

    #[error("no per-channel throughput for channel {channel} with {users} contenders")]
    MissingEntry { channel: usize, users: usize },

    #[error("selection optimizer did not converge: projected gradient norm {gradient_norm:e}")]
    NotConverged {
        gradient_norm: f64,
        best: Box<crate::optimizer::SelectionOptimum>,
    },

    #[error("fixed assignment needs the user count {users} to be divisible by {channels} channels")]
    UnevenAssignment { users: usize, channels: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::ThresholdBracket { .. }
                | Error::NotConverged { .. }
                | Error::Capacity { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
