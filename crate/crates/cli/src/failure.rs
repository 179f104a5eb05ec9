//! Command failures and their exit codes.

use std::fmt;

/// Exit code for bad input data, flags or configuration.
pub const EXIT_INPUT: u8 = 1;
/// Exit code for a broken internal invariant.
pub const EXIT_INTERNAL: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    Input(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }

    /// Wraps a library error with the name of the stage that raised it.
    pub fn staged(stage: &str, e: mtvar_core::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(format!("{stage}: {e}"))
        } else {
            Failure::Internal(format!("{stage}: {e}"))
        }
    }

    pub fn io(what: &std::path::Path, e: std::io::Error) -> Self {
        Failure::Input(format!("{}: {e}", what.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "error: {m}"),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_error_kind() {
        let input = Failure::staged("load", mtvar_core::Error::EmptyDataset);
        assert_eq!(input.code(), EXIT_INPUT);
        assert_eq!(input.to_string(), "error: load: dataset has no segments");
        let internal = Failure::staged("grid", mtvar_core::Error::Invariant("x".into()));
        assert_eq!(internal.code(), EXIT_INTERNAL);
    }
}
