use std::fmt;
use std::path::PathBuf;

use multicopter_energy::Error;
use serde_json::json;

/// Exit codes, stable across releases.
pub mod code {
    pub const IO: u8 = 1;
    pub const CONFIG_NOT_FOUND: u8 = 2;
    pub const INVALID_INPUT: u8 = 3;
    pub const POWER_INFEASIBLE: u8 = 4;
    pub const OUT_OF_RANGE: u8 = 5;
    pub const MALFORMED_LOG: u8 = 6;
    pub const NO_SENSOR: u8 = 7;
    pub const HALTED: u8 = 8;
    pub const USAGE: u8 = 64;
}

#[derive(Debug)]
pub enum CliError {
    Model(Error),
    ConfigNotFound(PathBuf),
    NoSensorConfigured,
    Usage(String),
    Io { path: PathBuf, source: std::io::Error },
    Scenario { path: PathBuf, message: String },
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Model(e)
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(e) => match e {
                Error::PowerInfeasible { .. } | Error::InvalidVoltage(_) => code::POWER_INFEASIBLE,
                Error::OutOfRange { .. } | Error::NoSuchSegment { .. } => code::OUT_OF_RANGE,
                Error::MalformedLog { .. } => code::MALFORMED_LOG,
                Error::SingularOrientation { .. } | Error::ConstraintHalt { .. } => code::HALTED,
                Error::InvalidOrder(_) => code::USAGE,
                Error::DimensionMismatch { .. }
                | Error::NegativeSpeed { .. }
                | Error::SamplingMismatch(..)
                | Error::DegenerateFov(_)
                | Error::CoincidentTarget
                | Error::InvalidParameter { .. }
                | Error::Config { .. } => code::INVALID_INPUT,
            },
            CliError::ConfigNotFound(_) => code::CONFIG_NOT_FOUND,
            CliError::NoSensorConfigured => code::NO_SENSOR,
            CliError::Usage(_) => code::USAGE,
            CliError::Io { .. } => code::IO,
            CliError::Scenario { .. } => code::INVALID_INPUT,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Model(e) => match e {
                Error::SingularOrientation { .. } => "SingularOrientation",
                Error::DimensionMismatch { .. } => "DimensionMismatch",
                Error::NegativeSpeed { .. } => "NegativeSpeed",
                Error::OutOfRange { .. } => "OutOfRange",
                Error::NoSuchSegment { .. } => "NoSuchSegment",
                Error::InvalidVoltage(_) => "InvalidVoltage",
                Error::PowerInfeasible { .. } => "PowerInfeasible",
                Error::InvalidOrder(_) => "InvalidOrder",
                Error::SamplingMismatch(..) => "SamplingMismatch",
                Error::DegenerateFov(_) => "DegenerateFov",
                Error::CoincidentTarget => "CoincidentTarget",
                Error::ConstraintHalt { .. } => "ConstraintHalt",
                Error::MalformedLog { .. } => "MalformedLog",
                Error::InvalidParameter { .. } => "InvalidParameter",
                Error::Config { .. } => "ConfigError",
            },
            CliError::ConfigNotFound(_) => "ConfigNotFound",
            CliError::NoSensorConfigured => "NoSensorConfigured",
            CliError::Usage(_) => "Usage",
            CliError::Io { .. } => "Io",
            CliError::Scenario { .. } => "ScenarioError",
        }
    }

    /// One JSON object on a single line.
    pub fn json_line(&self) -> String {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            CliError::Model(Error::MalformedLog { line, .. }) => v["line"] = json!(line),
            CliError::Model(Error::Config { context, .. }) => v["file"] = json!(context),
            CliError::ConfigNotFound(p) | CliError::Io { path: p, .. } | CliError::Scenario { path: p, .. } => {
                v["file"] = json!(p.display().to_string())
            }
            _ => {}
        }
        v.to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Model(e) => write!(f, "{e}"),
            CliError::ConfigNotFound(p) => write!(f, "config not found: {}", p.display()),
            CliError::NoSensorConfigured => write!(f, "no [camera] or [lidar] section in the config"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Scenario { path, message } => write!(f, "scenario {}: {message}", path.display()),
        }
    }
}
