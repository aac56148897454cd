//! Energy-aware multicopter modeling.
//!
//! A nonlinear 6-DOF vehicle model with per-rotor mixing, a battery/ESC/motor
//! power-train model, camera and LiDAR operating limits, hover linearization
//! with Taylor-Lie discretization, and a fixed-step simulator that runs the
//! vehicle and power train together. Flight logs can be replayed through the
//! battery models to measure state-of-charge error.
//!
//! ```
//! use multicopter_energy::{fixtures, simulate, CombinedState, InputCommand, Schedule, SimOptions, WindDisturbance};
//!
//! let cfg = fixtures::holybro();
//! let traj = simulate(
//!     &CombinedState::default(),
//!     &Schedule::Constant(InputCommand::Hover),
//!     &Schedule::Constant(WindDisturbance::default()),
//!     &cfg,
//!     &SimOptions::lpv(10.0),
//! )
//! .unwrap();
//! assert!(traj.last().output.soc < 1.0);
//! ```

// `!(x <= y)` comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constraints;
pub mod energy_aware;
pub mod error;
pub mod fixtures;
pub mod frames;
pub mod integrate;
pub mod linear;
pub mod powertrain;
pub mod sensors;
pub mod vehicle;

pub use config::ModelConfig;
pub use constraints::{ConstraintCheck, ConstraintReport};
pub use energy_aware::{
    combined_dynamics, generate_synthetic_log, simulate, thrust_correction, validate_against_log, CombinedState,
    EcmModel, EtlParams, FlightLog, InputCommand, Schedule, SimMode, SimOptions, Trajectory, ValidationOptions,
    ValidationReport,
};
pub use error::{Error, Result};
pub use frames::EulerAngles;
pub use linear::{hover_set_point, DiscreteLinearModel, HoverSetPoint, LinearOptions, LpvModel};
pub use powertrain::{BatteryParams, MotorEscParams, OcvCurve, PowertrainOutput, PowertrainState};
pub use vehicle::{UavInput, UavState, VehicleParams, WindDisturbance};
