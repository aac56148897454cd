use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("orientation too close to gimbal lock (phi = {phi} rad, theta = {theta} rad, guard = {guard} rad)")]
    SingularOrientation { phi: f64, theta: f64, guard: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("motor {index} has negative speed {value} rad/s")]
    NegativeSpeed { index: usize, value: f64 },

    #[error("depth of discharge {dod} outside the open-circuit-voltage domain [0, {max}]")]
    OutOfRange { dod: f64, max: f64 },

    #[error("OCV segment {} does not exist (curve has {count} segments)", index + 1)]
    /// `index` is zero-based; the message counts from 1.
    NoSuchSegment { index: usize, count: usize },

    #[error("battery voltage must be positive, got {0} V")]
    InvalidVoltage(f64),

    #[error("power demand {demand:.3} W exceeds what the battery can deliver ({limit:.3} W) at this state")]
    PowerInfeasible { demand: f64, limit: f64 },

    #[error("discretization order must be at least 1, got {0}")]
    InvalidOrder(usize),

    #[error("sampling times differ: {0} s vs {1} s")]
    SamplingMismatch(f64, f64),

    #[error("degenerate field of view {0} rad")]
    DegenerateFov(f64),

    #[error("target coincides with the vehicle position")]
    CoincidentTarget,

    #[error("simulation halted at t = {time} s: {reason}")]
    ConstraintHalt { time: f64, reason: String },

    #[error("malformed flight log (line {line}): {message}")]
    MalformedLog { line: usize, message: String },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: String, message: String },

    #[error("config error in {context}: {message}")]
    Config { context: String, message: String },
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            message: message.into(),
        }
    }
}
