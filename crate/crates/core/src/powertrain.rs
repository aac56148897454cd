//! Power-train energy consumption: Thevenin battery with a DoD-dependent
//! open-circuit voltage, lossy ESCs and DC-motor approximations of the BLDC
//! drives, combined into a two-state equivalent circuit model.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintCheck, ConstraintReport};
use crate::error::{Error, Result};

/// Largest jump allowed between adjacent OCV segments at a breakpoint, V.
pub const OCV_CONTINUITY_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcvSegment {
    pub b0: f64,
    pub b1: f64,
    pub dod_start: f64,
    pub dod_end: f64,
}

impl OcvSegment {
    pub fn voltage(&self, dod: f64) -> f64 {
        self.b0 + self.b1 * dod
    }
}

/// Open-circuit cell voltage as a function of depth of discharge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OcvCurve {
    /// Single line valid on `[0, dod_max]`.
    Linear { b0: f64, b1: f64, dod_max: f64 },
    /// Contiguous segments starting at DoD = 0. At a shared breakpoint the
    /// segment on the left is active.
    Piecewise { segments: Vec<OcvSegment> },
}

impl OcvCurve {
    pub fn segment_count(&self) -> usize {
        match self {
            OcvCurve::Linear { .. } => 1,
            OcvCurve::Piecewise { segments } => segments.len(),
        }
    }

    pub fn domain_end(&self) -> f64 {
        match self {
            OcvCurve::Linear { dod_max, .. } => *dod_max,
            OcvCurve::Piecewise { segments } => segments.last().map_or(0.0, |s| s.dod_end),
        }
    }

    /// Segment by zero-based index.
    pub fn segment(&self, index: usize) -> Result<OcvSegment> {
        match self {
            OcvCurve::Linear { b0, b1, dod_max } if index == 0 => Ok(OcvSegment {
                b0: *b0,
                b1: *b1,
                dod_start: 0.0,
                dod_end: *dod_max,
            }),
            OcvCurve::Piecewise { segments } if index < segments.len() => Ok(segments[index]),
            _ => Err(Error::NoSuchSegment {
                index,
                count: self.segment_count(),
            }),
        }
    }

    /// Zero-based index of the segment active at `dod`.
    pub fn segment_index(&self, dod: f64) -> Result<usize> {
        let end = self.domain_end();
        if !(0.0..=end).contains(&dod) {
            return Err(Error::OutOfRange { dod, max: end });
        }
        match self {
            OcvCurve::Linear { .. } => Ok(0),
            OcvCurve::Piecewise { segments } => Ok(segments
                .iter()
                .position(|s| dod <= s.dod_end)
                .unwrap_or(segments.len() - 1)),
        }
    }

    pub fn voltage(&self, dod: f64) -> Result<f64> {
        let idx = self.segment_index(dod)?;
        Ok(self.segment(idx)?.voltage(dod))
    }

    /// Absolute voltage jump at every interior breakpoint.
    pub fn breakpoint_jumps(&self) -> Vec<(f64, f64)> {
        match self {
            OcvCurve::Linear { .. } => Vec::new(),
            OcvCurve::Piecewise { segments } => segments
                .windows(2)
                .map(|w| {
                    let at = w[0].dod_end;
                    (at, (w[0].voltage(at) - w[1].voltage(at)).abs())
                })
                .collect(),
        }
    }

    pub fn validate(&self, dod_cutoff: f64) -> Result<()> {
        if self.domain_end() < dod_cutoff {
            return Err(Error::param(
                "ocv",
                format!("curve ends at DoD {} before the cutoff {dod_cutoff}", self.domain_end()),
            ));
        }
        if let OcvCurve::Piecewise { segments } = self {
            let first = segments
                .first()
                .ok_or_else(|| Error::param("ocv", "piecewise curve has no segments"))?;
            if first.dod_start != 0.0 {
                return Err(Error::param("ocv", "first segment must start at DoD = 0"));
            }
            for (i, w) in segments.windows(2).enumerate() {
                if w[0].dod_end != w[1].dod_start {
                    return Err(Error::param(
                        "ocv",
                        format!("segments {} and {} are not contiguous", i + 1, i + 2),
                    ));
                }
            }
            if segments.iter().any(|s| s.dod_end <= s.dod_start) {
                return Err(Error::param("ocv", "segment with empty DoD interval"));
            }
            if let Some((at, jump)) = self
                .breakpoint_jumps()
                .into_iter()
                .find(|(_, j)| *j > OCV_CONTINUITY_TOLERANCE)
            {
                return Err(Error::param(
                    "ocv",
                    format!("discontinuity of {jump} V at DoD {at}"),
                ));
            }
        }
        Ok(())
    }
}

pub fn open_circuit_voltage(dod: f64, curve: &OcvCurve) -> Result<f64> {
    curve.voltage(dod)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryParams {
    pub cells_series: u32,
    pub cells_parallel: u32,
    /// Capacity, A s.
    pub capacity: f64,
    pub coulombic_efficiency: f64,
    /// Ohmic resistance per cell, ohm.
    pub r_int: f64,
    /// Polarization resistance, ohm.
    pub r_th: f64,
    /// Polarization capacitance, F.
    pub c_th: f64,
    pub ocv: OcvCurve,
    pub dod_cutoff: f64,
    /// Per-cell voltage window, V.
    pub u_cell_min: f64,
    pub u_cell_max: f64,
    pub i_charge_max: f64,
    pub i_discharge_max: f64,
}

impl BatteryParams {
    pub fn ns(&self) -> f64 {
        f64::from(self.cells_series)
    }

    pub fn np(&self) -> f64 {
        f64::from(self.cells_parallel)
    }

    pub fn soc_cutoff(&self) -> f64 {
        1.0 - self.dod_cutoff
    }

    pub fn with_ocv(&self, ocv: OcvCurve) -> Self {
        Self { ocv, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells_series == 0 || self.cells_parallel == 0 {
            return Err(Error::param("N_S/N_P", "need at least one cell in series and in parallel"));
        }
        for (name, v) in [
            ("Q_b", self.capacity),
            ("eta_b", self.coulombic_efficiency),
            ("R_int", self.r_int),
            ("R_th", self.r_th),
            ("C_th", self.c_th),
            ("u_c_min", self.u_cell_min),
            ("u_c_max", self.u_cell_max),
            ("i_charge_max", self.i_charge_max),
            ("i_discharge_max", self.i_discharge_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.dod_cutoff > 0.0 && self.dod_cutoff <= 1.0) {
            return Err(Error::param("DoD_cutoff", "must lie in (0, 1]"));
        }
        if self.u_cell_min >= self.u_cell_max {
            return Err(Error::param("u_c_min", "must be below u_c_max"));
        }
        self.ocv.validate(self.dod_cutoff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorEscParams {
    /// Motor winding resistance, ohm.
    pub r_dc: f64,
    /// Voltage constant, (rad/s)/V.
    pub k_v: f64,
    /// Viscous damping, N m s/rad.
    pub damping: f64,
    /// Load torque constant, N m/(rad/s)^2.
    pub k_m: f64,
    pub eta_esc: f64,
    pub motor_count: usize,
    /// Slope of the PWM duty to output-voltage ratio map.
    pub pwm_gain: f64,
}

impl MotorEscParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_dc > 0.0) {
            return Err(Error::param("R_DC", "must be positive"));
        }
        if !(self.k_v > 0.0) {
            return Err(Error::param("K_V", "must be positive"));
        }
        if !(self.damping >= 0.0) {
            return Err(Error::param("D_f", "must be non-negative"));
        }
        if !(self.eta_esc > 0.0 && self.eta_esc <= 1.0) {
            return Err(Error::param("eta_ESC", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowertrainState {
    pub dod: f64,
    /// Polarization voltage, V.
    pub u_th: f64,
}

impl PowertrainState {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn soc(&self) -> f64 {
        1.0 - self.dod
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowertrainOutput {
    pub soc: f64,
    pub u_b: f64,
    pub i_b: f64,
}

/// Breakdown of the DC supply power of one motor, W.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BldcPower {
    pub electrical_loss: f64,
    pub mechanical_loss: f64,
    pub output: f64,
}

impl BldcPower {
    pub fn total(&self) -> f64 {
        self.electrical_loss + self.mechanical_loss + self.output
    }
}

/// Steady-state supply power of a DC motor driving a fixed rotor at `omega`.
pub fn bldc_power(omega: f64, p: &MotorEscParams) -> BldcPower {
    let load = p.damping * omega + p.k_m * omega * omega;
    BldcPower {
        electrical_loss: p.r_dc * p.k_v * p.k_v * load * load,
        mechanical_loss: p.damping * omega * omega,
        output: p.k_m * omega * omega * omega,
    }
}

pub fn esc_input_current(p_dc: f64, u_b: f64, eta_esc: f64) -> Result<f64> {
    if !(u_b > 0.0) {
        return Err(Error::InvalidVoltage(u_b));
    }
    Ok(p_dc / (eta_esc * u_b))
}

/// Motor voltage produced by the ESC for a PWM duty in [0, 1].
pub fn esc_output_voltage(s_pwm: f64, u_b: f64, p: &MotorEscParams) -> f64 {
    p.pwm_gain * s_pwm.clamp(0.0, 1.0) * u_b
}

/// Power drawn from the battery terminals: motor supply power through the
/// ESC efficiencies plus any additional load.
pub fn total_demand(omegas: &[f64], extra_load: f64, mp: &MotorEscParams) -> Result<f64> {
    if omegas.len() != mp.motor_count {
        return Err(Error::DimensionMismatch {
            expected: mp.motor_count,
            got: omegas.len(),
        });
    }
    if let Some((index, &value)) = omegas.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
        return Err(Error::NegativeSpeed { index, value });
    }
    let motors: f64 = omegas.iter().map(|&w| bldc_power(w, mp).total()).sum();
    Ok(motors / mp.eta_esc + extra_load)
}

/// Battery current delivering `demand` watts at the terminals.
///
/// Solves `u_b(i) * i = demand` and keeps the root that vanishes at zero
/// demand. The root is evaluated as `c / (i~ + sqrt(i~^2 - c))`, which is
/// the same number as `i~ - sqrt(i~^2 - c)` without the cancellation.
pub fn battery_current_from_power(state: &PowertrainState, demand: f64, bp: &BatteryParams) -> Result<f64> {
    let u_oc = bp.ocv.voltage(state.dod)?;
    if demand == 0.0 {
        return Ok(0.0);
    }
    let (ns, np) = (bp.ns(), bp.np());
    let i_tilde = np * (u_oc - state.u_th) / (2.0 * bp.r_int);
    let c = np / (ns * bp.r_int) * demand;
    let disc = i_tilde * i_tilde - c;
    if i_tilde <= 0.0 || disc < 0.0 {
        let headroom = (u_oc - state.u_th).max(0.0);
        return Err(Error::PowerInfeasible {
            demand,
            limit: ns * np * headroom * headroom / (4.0 * bp.r_int),
        });
    }
    Ok(c / (i_tilde + disc.sqrt()))
}

pub fn battery_current(
    state: &PowertrainState,
    omegas: &[f64],
    extra_load: f64,
    bp: &BatteryParams,
    mp: &MotorEscParams,
) -> Result<f64> {
    let demand = total_demand(omegas, extra_load, mp)?;
    battery_current_from_power(state, demand, bp)
}

/// State derivative and outputs of the battery for a known current.
pub fn battery_response(
    state: &PowertrainState,
    i_b: f64,
    bp: &BatteryParams,
) -> Result<(Vector2<f64>, PowertrainOutput)> {
    let u_oc = bp.ocv.voltage(state.dod)?;
    let np = bp.np();
    let deriv = Vector2::new(
        bp.coulombic_efficiency / bp.capacity * i_b,
        -state.u_th / (bp.r_th * bp.c_th) + i_b / (np * bp.c_th),
    );
    let out = PowertrainOutput {
        soc: 1.0 - state.dod,
        u_b: bp.ns() * (u_oc - state.u_th - bp.r_int / np * i_b),
        i_b,
    };
    Ok((deriv, out))
}

/// Nonlinear ECM: `(dDoD/dt, du_th/dt)` and `(SoC, u_b, i_b)`.
pub fn ecm_dynamics(
    state: &PowertrainState,
    omegas: &[f64],
    extra_load: f64,
    bp: &BatteryParams,
    mp: &MotorEscParams,
) -> Result<(Vector2<f64>, PowertrainOutput)> {
    let i_b = battery_current(state, omegas, extra_load, bp, mp)?;
    battery_response(state, i_b, bp)
}

pub fn check_powertrain_constraints(out: &PowertrainOutput, bp: &BatteryParams) -> ConstraintReport {
    ConstraintReport {
        checks: vec![
            ConstraintCheck::between("soc", out.soc, bp.soc_cutoff(), 1.0),
            ConstraintCheck::between(
                "battery_voltage",
                out.u_b,
                bp.u_cell_min * bp.ns(),
                bp.u_cell_max * bp.ns(),
            ),
            ConstraintCheck::between("battery_current", out.i_b, -bp.i_charge_max, bp.i_discharge_max),
        ],
    }
}
