//! Simulation scenario files.

use std::path::Path;

use multicopter_energy::energy_aware::{CombinedState, InputCommand, Schedule, SimMode, SimOptions};
use multicopter_energy::frames::EulerAngles;
use multicopter_energy::powertrain::PowertrainState;
use multicopter_energy::vehicle::UavState;
use multicopter_energy::{ModelConfig, WindDisturbance};
use nalgebra::Vector3;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub horizon: f64,
    pub dt: Option<f64>,
    pub mode: Option<SimMode>,
    pub vehicle_order: Option<usize>,
    pub ecm_order: Option<usize>,
    pub psi_sp_deg: Option<f64>,
    pub extra_load: Option<f64>,
    pub halt_on_violation: Option<bool>,
    #[serde(default)]
    pub initial: Initial,
    #[serde(default)]
    pub input: Vec<InputStep>,
    #[serde(default)]
    pub wind: Vec<WindStep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Initial {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub attitude_deg: [f64; 3],
    pub rates_deg_s: [f64; 3],
    pub soc: f64,
    pub u_th: f64,
}

impl Default for Initial {
    fn default() -> Self {
        Self {
            position: [0.0; 3],
            velocity: [0.0; 3],
            attitude_deg: [0.0; 3],
            rates_deg_s: [0.0; 3],
            soc: 1.0,
            u_th: 0.0,
        }
    }
}

/// One entry of the held input schedule. With neither motor speeds nor
/// lift/torque the vehicle hovers.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputStep {
    pub t: f64,
    pub motor_speeds: Option<Vec<f64>>,
    pub lift: Option<f64>,
    pub torque: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindStep {
    pub t: f64,
    pub velocity: [f64; 3],
}

/// Overrides from the command line.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub mode: Option<SimMode>,
    pub order: Option<usize>,
}

pub struct Prepared {
    pub x0: CombinedState,
    pub inputs: Schedule<InputCommand>,
    pub wind: Schedule<WindDisturbance>,
    pub options: SimOptions,
}

impl Scenario {
    pub fn hover(horizon: f64) -> Self {
        Self {
            horizon,
            dt: None,
            mode: None,
            vehicle_order: None,
            ecm_order: None,
            psi_sp_deg: None,
            extra_load: None,
            halt_on_violation: None,
            initial: Initial::default(),
            input: Vec::new(),
            wind: Vec::new(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Scenario {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })
    }

    /// Checks the scenario against the vehicle and builds the simulator
    /// inputs. `path` only labels diagnostics.
    pub fn prepare(&self, cfg: &ModelConfig, ov: Overrides, path: &Path) -> Result<Prepared, CliError> {
        let bad = |message: String| CliError::Scenario {
            path: path.to_path_buf(),
            message,
        };
        let n = cfg.vehicle.motor_count();
        let mut steps = Vec::with_capacity(self.input.len());
        for (i, s) in self.input.iter().enumerate() {
            let cmd = match (&s.motor_speeds, s.lift, s.torque) {
                (Some(w), None, None) => {
                    if w.len() != n {
                        return Err(multicopter_energy::Error::DimensionMismatch {
                            expected: n,
                            got: w.len(),
                        }
                        .into());
                    }
                    InputCommand::MotorSpeeds(w.clone())
                }
                (Some(_), _, _) => {
                    return Err(bad(format!("input[{i}]: give motor_speeds or lift/torque, not both")));
                }
                (None, None, None) => InputCommand::Hover,
                (None, lift, torque) => InputCommand::Reduced {
                    lift: lift.unwrap_or(0.0),
                    torque: Vector3::from(torque.unwrap_or([0.0; 3])),
                },
            };
            steps.push((s.t, cmd));
        }
        let inputs = if steps.is_empty() {
            Schedule::Constant(InputCommand::Hover)
        } else {
            Schedule::Steps(steps)
        };
        let wind = if self.wind.is_empty() {
            Schedule::Constant(WindDisturbance::default())
        } else {
            Schedule::Steps(
                self.wind
                    .iter()
                    .map(|w| (w.t, WindDisturbance::new(w.velocity[0], w.velocity[1], w.velocity[2])))
                    .collect(),
            )
        };

        let init = &self.initial;
        if !(0.0..=1.0).contains(&init.soc) {
            return Err(bad(format!("initial.soc must lie in [0, 1], got {}", init.soc)));
        }
        let deg = |a: [f64; 3]| a.map(f64::to_radians);
        let att = deg(init.attitude_deg);
        let x0 = CombinedState {
            uav: UavState {
                position: Vector3::from(init.position),
                velocity: Vector3::from(init.velocity),
                attitude: EulerAngles::new(att[0], att[1], att[2]),
                rates: Vector3::from(deg(init.rates_deg_s)),
            },
            pt: PowertrainState {
                dod: 1.0 - init.soc,
                u_th: init.u_th,
            },
        };

        let mode = ov.mode.or(self.mode).unwrap_or(SimMode::Nonlinear);
        let mut options = SimOptions::new(mode, self.horizon);
        if let Some(dt) = ov.dt.or(self.dt) {
            options.dt = dt;
        }
        if let Some(o) = self.vehicle_order {
            options.vehicle_order = o;
        }
        if let Some(o) = self.ecm_order {
            options.ecm_order = o;
        }
        if let Some(o) = ov.order {
            options.vehicle_order = o;
            options.ecm_order = o;
        }
        if let Some(psi) = self.psi_sp_deg {
            options.psi_sp = psi.to_radians();
        }
        options.extra_load = self.extra_load.unwrap_or(0.0);
        options.halt_on_violation = self.halt_on_violation.unwrap_or(false);
        Ok(Prepared {
            x0,
            inputs,
            wind,
            options,
        })
    }
}
