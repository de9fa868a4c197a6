use thiserror::Error;

/// Exit status for a negative verdict.
pub const EXIT_NEGATIVE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] postq_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_solver_failure() => EXIT_SOLVER,
            _ => EXIT_INPUT,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_failures_map_to_three() {
        assert_eq!(CliError::Core(postq_core::Error::Solver("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(postq_core::Error::InvalidInput("x".into())).exit_code(), 2);
        assert_eq!(CliError::Input("x".into()).exit_code(), 2);
    }
}
