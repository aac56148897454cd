//! The combined energy-aware model: the vehicle and power-train models
//! driven by the same motor speeds, plus the thrust correction used to feed
//! the linear battery model during tilted or fast flight.

mod log;
mod simulate;
mod validation;

pub use log::{FlightLog, LogDrive, LogRecord};
pub use simulate::{
    simulate, CombinedVector, InputCommand, OutputHook, Schedule, SimMode, SimOptions, StateHook, Trajectory,
    TrajectoryRecord,
};
pub use validation::{
    generate_synthetic_log, validate_against_log, EcmModel, SyntheticOptions, ValidationOptions, ValidationReport,
    VALIDATION_WINDOW,
};

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::powertrain::{ecm_dynamics, PowertrainOutput, PowertrainState};
use crate::vehicle::{dynamics, mix_motor_speeds, UavState, UavStateVector, VehicleParams, WindDisturbance};

/// Effective-translational-lift parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtlParams {
    /// Speed above which the efficiency gain saturates, m/s.
    pub v_th: f64,
    /// Horizontal drag coefficient, N s/m.
    pub c_f: f64,
    /// Use `T_v tan(alpha)` for the horizontal thrust instead of `m g alpha`.
    pub exact_tilt: bool,
}

impl EtlParams {
    /// Relative thrust saving at `v_th`: the extra thrust that steady level
    /// flight at `v_th` would need without the lift gain.
    pub fn eta_etl(&self, vp: &VehicleParams) -> f64 {
        let r = self.c_f * self.v_th / vp.weight();
        (1.0 + r * r).sqrt() - 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_th > 0.0 && self.v_th.is_finite()) {
            return Err(Error::param("v_th", format!("must be positive, got {}", self.v_th)));
        }
        if !(self.c_f >= 0.0) {
            return Err(Error::param("c_F", "must be non-negative"));
        }
        Ok(())
    }
}

/// Thrust reduction from translational lift at ground speed `v_g`, N.
pub fn etl_thrust(v_g: f64, vp: &VehicleParams, etl: &EtlParams) -> f64 {
    etl.eta_etl(vp) * vp.weight() * (v_g / etl.v_th).min(1.0)
}

/// Thrust deviation from hover that the battery sees for lift `lift`, tilt
/// `alpha` and ground speed `v_g`.
pub fn thrust_correction(lift: f64, alpha: f64, v_g: f64, vp: &VehicleParams, etl: &EtlParams) -> f64 {
    let t_sp = vp.weight();
    let t_v = t_sp + lift;
    let t_h = if etl.exact_tilt { t_v * alpha.tan() } else { t_sp * alpha };
    t_v.hypot(t_h) - etl_thrust(v_g, vp, etl) - t_sp
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CombinedState {
    pub uav: UavState,
    pub pt: PowertrainState,
}

impl CombinedState {
    pub fn to_vector(&self) -> CombinedVector {
        let mut v = CombinedVector::zeros();
        v.fixed_rows_mut::<12>(0).copy_from(&self.uav.to_vector());
        v[12] = self.pt.dod;
        v[13] = self.pt.u_th;
        v
    }

    pub fn from_vector(v: &CombinedVector) -> Self {
        let uav: UavStateVector = v.fixed_rows::<12>(0).into_owned();
        Self {
            uav: UavState::from_vector(&uav),
            pt: PowertrainState { dod: v[12], u_th: v[13] },
        }
    }
}

/// Stacked vehicle and power-train derivatives for one set of motor speeds.
pub fn combined_dynamics(
    x: &CombinedState,
    omegas: &[f64],
    wind: &WindDisturbance,
    extra_load: f64,
    cfg: &ModelConfig,
) -> Result<(SVector<f64, 14>, PowertrainOutput)> {
    let u = mix_motor_speeds(omegas, &cfg.vehicle)?;
    let dx_u = dynamics(&x.uav, &u, wind, &cfg.vehicle)?;
    let (dx_e, out) = ecm_dynamics(&x.pt, omegas, extra_load, &cfg.battery, &cfg.motor)?;
    let mut dx = SVector::<f64, 14>::zeros();
    dx.fixed_rows_mut::<12>(0).copy_from(&dx_u);
    dx.fixed_rows_mut::<2>(12).copy_from(&dx_e);
    Ok((dx, out))
}
