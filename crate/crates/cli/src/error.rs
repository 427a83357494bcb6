use std::fmt;

use dlqr_core::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

/// A failure carrying the process exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, message: message.into() }
    }

    /// Wraps a library error, prefixing `context` (usually a config location).
    pub fn from_core(context: &str, err: Error) -> Self {
        let message = if context.is_empty() { err.to_string() } else { format!("{context}: {err}") };
        Self { code: exit_code(&err), message }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        Self::from_core("", err)
    }
}

/// Bad inputs map to 2, a design or certificate that does not exist to 3,
/// and breakdowns of the numerics to 4.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::BudgetInfeasible { .. } | Error::CostInfinite { .. } => EXIT_INFEASIBLE,
        Error::NonFinite { what: "state" }
        | Error::IllConditioned(_)
        | Error::InequalityNotStrict { .. }
        | Error::NotHurwitz { .. } => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

pub type CliResult<T> = Result<T, CliError>;
