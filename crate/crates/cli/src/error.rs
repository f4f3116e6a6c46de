//! Error type carrying the process exit-code contract: 0 success, 2 usage,
//! 3 I/O, 4 validation, 5 convergence.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("I/O: {0}")]
    Io(String),
    #[error("validation: {0}")]
    Validation(String),
    #[error("convergence: {0}")]
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Validation(_) => 4,
            CliError::Convergence(_) => 5,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<sqz_core::io::FormatError> for CliError {
    fn from(e: sqz_core::io::FormatError) -> Self {
        match e {
            sqz_core::io::FormatError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<sqz_core::curve_fit::FitError> for CliError {
    fn from(e: sqz_core::curve_fit::FitError) -> Self {
        match e {
            sqz_core::curve_fit::FitError::NoConvergence { .. }
            | sqz_core::curve_fit::FitError::Optim(_) => CliError::Convergence(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<sqz_core::noise_model::NoiseModelError> for CliError {
    fn from(e: sqz_core::noise_model::NoiseModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<sqz_core::pulses::PulseError> for CliError {
    fn from(e: sqz_core::pulses::PulseError) -> Self {
        match e {
            sqz_core::pulses::PulseError::NoConvergence { .. }
            | sqz_core::pulses::PulseError::Optim(_) => CliError::Convergence(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<sqz_core::modes::ModeError> for CliError {
    fn from(e: sqz_core::modes::ModeError) -> Self {
        match e {
            sqz_core::modes::ModeError::NoConvergence { .. } => {
                CliError::Convergence(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<sqz_core::synth::SynthError> for CliError {
    fn from(e: sqz_core::synth::SynthError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<sqz_core::polarization::ChainError> for CliError {
    fn from(e: sqz_core::polarization::ChainError) -> Self {
        CliError::Validation(e.to_string())
    }
}
