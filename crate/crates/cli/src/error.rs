use photonchip::calibration::CalibrationError;
use photonchip::circuit::CircuitError;
use photonchip::fock::FockError;
use photonchip::source::SourceError;
use photonchip::stategen::StateGenError;
use photonchip::tomography::TomographyError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const VALIDATION: i32 = 3;
    pub const CONVERGENCE: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("did not converge: {0}")]
    Convergence(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Convergence(_) => exit::CONVERGENCE,
            CliError::Io(_) => exit::IO,
            CliError::Other(_) => exit::OTHER,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        match e {
            CircuitError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<StateGenError> for CliError {
    fn from(e: StateGenError) -> Self {
        match e {
            StateGenError::Circuit(c) => c.into(),
            StateGenError::NotConverged { .. } => CliError::Convergence(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TomographyError> for CliError {
    fn from(e: TomographyError) -> Self {
        match e {
            TomographyError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::Circuit(c) => c.into(),
            CalibrationError::Diverged { .. } | CalibrationError::NotConverged { .. } => {
                CliError::Convergence(e.to_string())
            }
            CalibrationError::Io { .. } => CliError::Io(e.to_string()),
            CalibrationError::Csv(ref c) if c.is_io_error() => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SourceError> for CliError {
    fn from(e: SourceError) -> Self {
        match e {
            SourceError::Circuit(c) => c.into(),
            SourceError::StateGen(s) => s.into(),
            SourceError::Io { .. } => CliError::Io(e.to_string()),
            SourceError::Csv(ref c) if c.is_io_error() => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io(e.to_string())
        } else {
            CliError::Other(e.to_string())
        }
    }
}
