use std::fmt;
use std::process::ExitCode;

use lbcac::admission::AdmissionError;
use lbcac::calibration::CalibrationError;
use lbcac::flowpaths::FlowError;
use lbcac::model::{ModelError, ScenarioFileError};
use lbcac::oracle::OracleError;
use lbcac::simulator::SimError;

/// Exit status classes. The numeric values are part of the command-line contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    /// Unreadable or malformed input, invalid arguments.
    Input = 2,
    /// Input is well-formed but the requested computation makes no sense for it.
    Domain = 3,
    Solver = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub class: Class,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { class: Class::Input, message: message.into() }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Self { class: Class::Domain, message: message.into() }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        Self { class: Class::Solver, message: message.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.class as u8)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(format!("i/o error: {e}"))
    }
}

impl From<ScenarioFileError> for CliError {
    fn from(e: ScenarioFileError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<AdmissionError> for CliError {
    fn from(e: AdmissionError) -> Self {
        Self::solver(e.to_string())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        Self::domain(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::PathExplosion { .. } => Self::domain(e.to_string()),
            _ => Self::solver(e.to_string()),
        }
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::ZeroLocalCalls => Self::domain(e.to_string()),
            CalibrationError::Solver(_) => Self::solver(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Admission(inner) => inner.into(),
            SimError::Flow(inner) => inner.into(),
            _ => Self::input(e.to_string()),
        }
    }
}
