use std::fmt;

/// Failures mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Malformed scenario, bad flags or unreadable files: exit 2.
    Input(String),
    /// No result exists, such as an infeasible input design: exit 3.
    NoResult(String),
    /// Solver or linear-algebra breakdown: exit 4.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::NoResult(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::NoResult(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<lz_setkit::Error> for CliError {
    fn from(e: lz_setkit::Error) -> Self {
        use lz_setkit::Error as E;
        match e {
            E::NoSeparatingInput(n) => CliError::NoResult(format!("no separating input at horizon {n}")),
            E::EmptySet | E::Infeasible => CliError::NoResult(e.to_string()),
            E::DimensionMismatch { .. } | E::NonFinite(_) | E::InvalidArgument(_) | E::IndexOutOfRange(_) => CliError::Input(e.to_string()),
            E::ZeroPivot { .. } | E::Unbounded | E::IterationLimit(_) | E::Numerical(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("i/o error: {e}"))
    }
}
