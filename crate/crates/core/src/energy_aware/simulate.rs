use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DVector, SVector, Vector3};
use serde::{Deserialize, Serialize};

use super::{combined_dynamics, thrust_correction, CombinedState};
use crate::config::ModelConfig;
use crate::constraints::ConstraintReport;
use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::linear::{hover_set_point, LinearOptions, LpvModel, DEFAULT_ECM_ORDER, DEFAULT_VEHICLE_ORDER};
use crate::powertrain::{battery_current, battery_response, check_powertrain_constraints, PowertrainOutput};
use crate::vehicle::{allocate_motor_speeds, check_vehicle_constraints, mix_motor_speeds, UavInput, WindDisturbance};

pub type CombinedVector = SVector<f64, 14>;
/// Additive state uncertainty `Gamma_x(t, x)`.
pub type StateHook = Arc<dyn Fn(f64, &CombinedVector) -> CombinedVector + Send + Sync>;
/// Additive output uncertainty `Gamma_y(t, x)` on `(SoC, u_b, i_b)`.
pub type OutputHook = Arc<dyn Fn(f64, &CombinedVector) -> Vector3<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Nonlinear,
    #[serde(rename = "lpv")]
    LinearLpv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputCommand {
    /// All motors at the hover speed.
    Hover,
    MotorSpeeds(Vec<f64>),
    /// Lift above hover thrust (N) and body torques (N m).
    Reduced { lift: f64, torque: Vector3<f64> },
}

/// A time-indexed value.
pub enum Schedule<T> {
    Constant(T),
    /// Zero-order hold: each value applies from its time until the next.
    /// The first entry must start at or before zero.
    Steps(Vec<(f64, T)>),
    Function(Arc<dyn Fn(f64) -> T + Send + Sync>),
}

impl<T: Clone> Clone for Schedule<T> {
    fn clone(&self) -> Self {
        match self {
            Schedule::Constant(v) => Schedule::Constant(v.clone()),
            Schedule::Steps(s) => Schedule::Steps(s.clone()),
            Schedule::Function(f) => Schedule::Function(Arc::clone(f)),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Schedule<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Schedule::Steps(s) => f.debug_tuple("Steps").field(s).finish(),
            Schedule::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl<T: Clone> Schedule<T> {
    pub fn at(&self, t: f64) -> T {
        match self {
            Schedule::Constant(v) => v.clone(),
            Schedule::Steps(s) => {
                let i = s.partition_point(|(ts, _)| *ts <= t);
                s[i.saturating_sub(1)].1.clone()
            }
            Schedule::Function(f) => f(t),
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if let Schedule::Steps(s) = self {
            let first = s
                .first()
                .ok_or_else(|| Error::param(name, "schedule has no entries"))?;
            if first.0 > 0.0 {
                return Err(Error::param(name, format!("schedule starts at {} s, not at 0", first.0)));
            }
            if s.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(Error::param(name, "schedule times must be strictly increasing"));
            }
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct SimOptions {
    pub dt: f64,
    pub horizon: f64,
    pub mode: SimMode,
    pub vehicle_order: usize,
    pub ecm_order: usize,
    pub psi_sp: f64,
    /// Additional electrical load (avionics, payload), W.
    pub extra_load: f64,
    /// Stop with `ConstraintHalt` when the battery cannot supply the demand
    /// or the SoC falls below its cutoff.
    pub halt_on_violation: bool,
    pub state_uncertainty: Option<StateHook>,
    pub output_uncertainty: Option<OutputHook>,
}

impl fmt::Debug for SimOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimOptions")
            .field("dt", &self.dt)
            .field("horizon", &self.horizon)
            .field("mode", &self.mode)
            .field("vehicle_order", &self.vehicle_order)
            .field("ecm_order", &self.ecm_order)
            .field("psi_sp", &self.psi_sp)
            .field("extra_load", &self.extra_load)
            .field("halt_on_violation", &self.halt_on_violation)
            .field("state_uncertainty", &self.state_uncertainty.is_some())
            .field("output_uncertainty", &self.output_uncertainty.is_some())
            .finish()
    }
}

impl SimOptions {
    pub fn new(mode: SimMode, horizon: f64) -> Self {
        Self {
            dt: match mode {
                SimMode::Nonlinear => 0.01,
                SimMode::LinearLpv => 0.1,
            },
            horizon,
            mode,
            vehicle_order: DEFAULT_VEHICLE_ORDER,
            ecm_order: DEFAULT_ECM_ORDER,
            psi_sp: 0.0,
            extra_load: 0.0,
            halt_on_violation: false,
            state_uncertainty: None,
            output_uncertainty: None,
        }
    }

    pub fn nonlinear(horizon: f64) -> Self {
        Self::new(SimMode::Nonlinear, horizon)
    }

    pub fn lpv(horizon: f64) -> Self {
        Self::new(SimMode::LinearLpv, horizon)
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }

    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("horizon", format!("must be non-negative, got {}", self.horizon)));
        }
        Ok((self.horizon / self.dt).round() as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub state: CombinedState,
    pub omegas: Vec<f64>,
    pub input: UavInput,
    /// Thrust deviation fed to the linear battery model (LPV mode only).
    pub delta_thrust: Option<f64>,
    pub output: PowertrainOutput,
    /// Zero-based OCV segment (LPV mode only).
    pub segment: Option<usize>,
    pub report: ConstraintReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mode: SimMode,
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryRecord {
        self.records.last().expect("trajectory has at least the initial record")
    }

    /// Trapezoidal integral of the battery current over the run, A s.
    pub fn charge_drawn(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| 0.5 * (w[0].output.i_b + w[1].output.i_b) * (w[1].t - w[0].t))
            .sum()
    }

    /// One row per step: time, full state, outputs, inputs, motor speeds,
    /// segment, and the margin of every constraint.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| Error::param("output", e.to_string());
        let mut out = csv::Writer::from_writer(w);
        let first = &self.records[0];
        let mut header: Vec<String> = [
            "t", "x", "y", "z", "vx", "vy", "vz", "phi", "theta", "psi", "wx", "wy", "wz", "DoD", "u_th", "SoC",
            "u_b", "i_b", "T", "tau_x", "tau_y", "tau_z", "dT",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((1..=first.omegas.len()).map(|i| format!("omega_{i}")));
        header.push("segment".into());
        header.push("all_pass".into());
        header.extend(first.report.checks.iter().map(|c| format!("margin_{}", c.name)));
        out.write_record(&header).map_err(io)?;
        for r in &self.records {
            let mut row: Vec<String> = Vec::with_capacity(header.len());
            row.push(r.t.to_string());
            row.extend(r.state.to_vector().iter().map(|v| v.to_string()));
            row.extend([r.output.soc, r.output.u_b, r.output.i_b].iter().map(|v| v.to_string()));
            row.push(r.input.thrust.to_string());
            row.extend(r.input.torque.iter().map(|v| v.to_string()));
            row.push(r.delta_thrust.map(|v| v.to_string()).unwrap_or_default());
            row.extend(r.omegas.iter().map(|v| v.to_string()));
            row.push(r.segment.map(|s| (s + 1).to_string()).unwrap_or_default());
            row.push(r.report.all_pass().to_string());
            row.extend(r.report.checks.iter().map(|c| {
                if c.margin.is_finite() {
                    c.margin.to_string()
                } else {
                    String::new()
                }
            }));
            out.write_record(&row).map_err(io)?;
        }
        out.flush().map_err(|e| Error::param("output", e.to_string()))?;
        Ok(())
    }
}

fn halt(t: f64, reason: impl Into<String>) -> Error {
    Error::ConstraintHalt {
        time: t,
        reason: reason.into(),
    }
}

fn soc_halt(t: f64, out: &PowertrainOutput, cfg: &ModelConfig, opts: &SimOptions) -> Result<()> {
    if opts.halt_on_violation && out.soc < cfg.battery.soc_cutoff() {
        return Err(halt(
            t,
            format!("SoC {:.4} below cutoff {:.4}", out.soc, cfg.battery.soc_cutoff()),
        ));
    }
    Ok(())
}

fn infeasible_halt(t: f64, e: Error, opts: &SimOptions) -> Error {
    match e {
        Error::PowerInfeasible { .. } | Error::OutOfRange { .. } if opts.halt_on_violation => halt(t, e.to_string()),
        e => e,
    }
}

/// Motor speeds that realize `cmd` on the nonlinear vehicle.
fn command_speeds(cmd: &InputCommand, cfg: &ModelConfig, hover_speed: f64) -> Result<Vec<f64>> {
    let vp = &cfg.vehicle;
    match cmd {
        InputCommand::Hover => Ok(vec![hover_speed; vp.motor_count()]),
        InputCommand::MotorSpeeds(w) => {
            mix_motor_speeds(w, vp)?;
            Ok(w.clone())
        }
        InputCommand::Reduced { lift, torque } => allocate_motor_speeds(vp.weight() + lift, torque, vp),
    }
}

fn with_output_hook(t: f64, x: &CombinedVector, out: PowertrainOutput, opts: &SimOptions) -> PowertrainOutput {
    match &opts.output_uncertainty {
        Some(hook) => {
            let g = hook(t, x);
            PowertrainOutput {
                soc: out.soc + g[0],
                u_b: out.u_b + g[1],
                i_b: out.i_b + g[2],
            }
        }
        None => out,
    }
}

/// Fixed-step simulation of the combined model from `x0`.
///
/// Inputs and wind are sampled at the start of each step and held over it.
/// The trajectory holds one record per step boundary, including `t = 0` and
/// the final time.
pub fn simulate(
    x0: &CombinedState,
    inputs: &Schedule<InputCommand>,
    wind: &Schedule<WindDisturbance>,
    cfg: &ModelConfig,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let steps = opts.steps()?;
    inputs.validate("input")?;
    wind.validate("wind")?;
    match opts.mode {
        SimMode::Nonlinear => simulate_nonlinear(x0, inputs, wind, cfg, opts, steps),
        SimMode::LinearLpv => simulate_lpv(x0, inputs, wind, cfg, opts, steps),
    }
}

fn simulate_nonlinear(
    x0: &CombinedState,
    inputs: &Schedule<InputCommand>,
    wind: &Schedule<WindDisturbance>,
    cfg: &ModelConfig,
    opts: &SimOptions,
    steps: usize,
) -> Result<Trajectory> {
    let hover_speed = (cfg.vehicle.weight() / (cfg.vehicle.motor_count() as f64 * cfg.vehicle.k_f)).sqrt();
    let mut x = x0.to_vector();
    let mut records = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * opts.dt;
        let state = CombinedState::from_vector(&x);
        let omegas = command_speeds(&inputs.at(t), cfg, hover_speed)?;
        let d = wind.at(t);
        let input = mix_motor_speeds(&omegas, &cfg.vehicle)?;
        let i_b = battery_current(&state.pt, &omegas, opts.extra_load, &cfg.battery, &cfg.motor)
            .map_err(|e| infeasible_halt(t, e, opts))?;
        let (_, out) = battery_response(&state.pt, i_b, &cfg.battery).map_err(|e| infeasible_halt(t, e, opts))?;
        let out = with_output_hook(t, &x, out, opts);
        soc_halt(t, &out, cfg, opts)?;
        let mut report = check_vehicle_constraints(&state.uav, &omegas, &cfg.vehicle);
        report.extend(check_powertrain_constraints(&out, &cfg.battery));
        records.push(TrajectoryRecord {
            t,
            state,
            omegas: omegas.clone(),
            input,
            delta_thrust: None,
            output: out,
            segment: None,
            report,
        });
        if k == steps {
            break;
        }
        x = rk4_step(
            |ts, xs: &CombinedVector| {
                let (mut dx, _) = combined_dynamics(&CombinedState::from_vector(xs), &omegas, &d, opts.extra_load, cfg)
                    .map_err(|e| infeasible_halt(ts, e, opts))?;
                if let Some(hook) = &opts.state_uncertainty {
                    dx += hook(ts, xs);
                }
                Ok::<_, Error>(dx)
            },
            t,
            &x,
            opts.dt,
        )?;
    }
    Ok(Trajectory {
        mode: SimMode::Nonlinear,
        records,
    })
}

fn simulate_lpv(
    x0: &CombinedState,
    inputs: &Schedule<InputCommand>,
    wind: &Schedule<WindDisturbance>,
    cfg: &ModelConfig,
    opts: &SimOptions,
    steps: usize,
) -> Result<Trajectory> {
    let vp = &cfg.vehicle;
    let lin = LinearOptions {
        dt: opts.dt,
        vehicle_order: opts.vehicle_order,
        ecm_order: opts.ecm_order,
        psi_sp: opts.psi_sp,
    };
    let lpv = LpvModel::build(vp, &cfg.battery, &cfg.motor, &lin)?;
    let sp = hover_set_point(vp, &cfg.battery, &cfg.motor)?;
    let t_sp = lpv.hover_thrust();
    let mut x = DVector::from_column_slice(x0.to_vector().as_slice());
    let mut records = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * opts.dt;
        let xs = CombinedVector::from_column_slice(x.as_slice());
        let state = CombinedState::from_vector(&xs);
        let cmd = inputs.at(t);
        let omegas = command_speeds(&cmd, cfg, sp.motor_speed)?;
        let (lift, torque) = match &cmd {
            InputCommand::Hover => (0.0, Vector3::zeros()),
            InputCommand::Reduced { lift, torque } => (*lift, *torque),
            InputCommand::MotorSpeeds(w) => {
                let u = mix_motor_speeds(w, vp)?;
                (u.thrust - t_sp, u.torque)
            }
        };
        let delta_t = thrust_correction(lift, state.uav.tilt(), state.uav.ground_speed(), vp, &cfg.etl);
        let u = DVector::from_row_slice(&[lift, torque.x, torque.y, torque.z, delta_t]);
        let d = DVector::from_column_slice(wind.at(t).velocity.as_slice());
        let segment = lpv.segment_for(state.pt.dod).map_err(|e| infeasible_halt(t, e, opts))?;
        let model = lpv.model(segment);
        let y = model.output(&x, &u)?;
        let out = with_output_hook(
            t,
            &xs,
            PowertrainOutput {
                soc: y[0],
                u_b: y[1],
                i_b: y[2],
            },
            opts,
        );
        soc_halt(t, &out, cfg, opts)?;
        let mut report = check_vehicle_constraints(&state.uav, &omegas, vp);
        report.extend(check_powertrain_constraints(&out, &cfg.battery));
        records.push(TrajectoryRecord {
            t,
            state,
            omegas,
            input: UavInput {
                thrust: t_sp + lift,
                torque,
                rotor_speed_diff: 0.0,
            },
            delta_thrust: Some(delta_t),
            output: out,
            segment: Some(segment),
            report,
        });
        if k == steps {
            break;
        }
        x = model.step(&x, &u, &d)?;
        if let Some(hook) = &opts.state_uncertainty {
            x += DVector::from_column_slice(hook(t, &xs).as_slice()) * opts.dt;
        }
    }
    Ok(Trajectory {
        mode: SimMode::LinearLpv,
        records,
    })
}
