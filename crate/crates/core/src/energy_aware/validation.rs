use nalgebra::{DVector, Vector2};
use serde::{Deserialize, Serialize};

use super::log::{FlightLog, LogDrive, LogRecord};
use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::linear::{hover_set_point_with_ocv, linearize_ecm, ContinuousLinearModel, HoverSetPoint};
use crate::powertrain::{ecm_dynamics, BatteryParams, OcvCurve, PowertrainOutput, PowertrainState};

/// Horizon over which the SoC error is reported, s.
pub const VALIDATION_WINDOW: f64 = 300.0;

/// Battery model driven open-loop from a log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EcmModel {
    /// Nonlinear model with the linear OCV curve.
    Nonlinear,
    /// Nonlinear model with the piecewise-linear OCV curve.
    Npv,
    /// Linearized model with the linear OCV curve.
    Linear,
    /// Linearized model switched over the piecewise-linear OCV segments.
    Lpv,
}

impl EcmModel {
    pub const ALL: [EcmModel; 4] = [EcmModel::Nonlinear, EcmModel::Npv, EcmModel::Linear, EcmModel::Lpv];

    pub fn name(self) -> &'static str {
        match self {
            EcmModel::Nonlinear => "nonlinear",
            EcmModel::Npv => "npv",
            EcmModel::Linear => "linear",
            EcmModel::Lpv => "lpv",
        }
    }

    fn piecewise(self) -> bool {
        matches!(self, EcmModel::Npv | EcmModel::Lpv)
    }

    fn linearized(self) -> bool {
        matches!(self, EcmModel::Linear | EcmModel::Lpv)
    }

    /// Battery parameters carrying the OCV curve this model uses.
    pub fn battery(self, cfg: &ModelConfig) -> Result<BatteryParams> {
        let (curve, key) = if self.piecewise() {
            (&cfg.ocv_piecewise, "battery.ocv.segment")
        } else {
            (&cfg.ocv_linear, "battery.ocv.b0/b1")
        };
        let curve = curve
            .clone()
            .ok_or_else(|| Error::param(key, format!("the {} model needs this OCV curve", self.name())))?;
        Ok(cfg.battery.with_ocv(curve))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub model: EcmModel,
    /// Largest integration step between log samples, s.
    pub max_step: f64,
}

impl ValidationOptions {
    pub fn new(model: EcmModel) -> Self {
        Self { model, max_step: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub model: EcmModel,
    /// SoC-change error after [`VALIDATION_WINDOW`] seconds, percent.
    /// `None` when the log is shorter.
    pub f_error_window: Option<f64>,
    /// SoC-change error at the end of the log, percent.
    pub f_error_end: f64,
    pub rms_voltage: f64,
    pub rms_current: f64,
    /// Set when the log is shorter than [`VALIDATION_WINDOW`].
    pub partial: bool,
    pub duration: f64,
    pub measured_delta_soc: f64,
    pub estimated_delta_soc: f64,
    /// Model outputs at each log timestamp.
    #[serde(skip)]
    pub estimated: Vec<PowertrainOutput>,
}

/// One linearized battery model per OCV segment.
struct LinearEcm {
    curve: OcvCurve,
    set_points: Vec<HoverSetPoint>,
    models: Vec<ContinuousLinearModel>,
    k_f: f64,
    eta_esc: f64,
}

impl LinearEcm {
    fn build(cfg: &ModelConfig, bp: &BatteryParams) -> Result<Self> {
        let mut set_points = Vec::new();
        let mut models = Vec::new();
        for i in 0..bp.ocv.segment_count() {
            let seg = bp.ocv.segment(i)?;
            let sp = hover_set_point_with_ocv(&cfg.vehicle, bp, &cfg.motor, seg.b0, seg.b1)?;
            models.push(linearize_ecm(bp, &sp, &cfg.vehicle));
            set_points.push(sp);
        }
        Ok(Self {
            curve: bp.ocv.clone(),
            set_points,
            models,
            k_f: cfg.vehicle.k_f,
            eta_esc: cfg.motor.eta_esc,
        })
    }

    /// Thrust deviation with the same battery load as `omegas` plus `extra`.
    fn delta_thrust(&self, omegas: &[f64], extra: f64) -> f64 {
        let sp = &self.set_points[0];
        let thrust: f64 = omegas.iter().map(|w| self.k_f * w * w).sum();
        thrust - sp.thrust + extra * self.eta_esc * self.k_f / sp.kappas.dc
    }

    fn model_at(&self, dod: f64) -> Result<&ContinuousLinearModel> {
        Ok(&self.models[self.curve.segment_index(dod)?])
    }

    fn derivative(&self, x: &Vector2<f64>, omegas: &[f64], extra: f64) -> Result<Vector2<f64>> {
        let m = self.model_at(x[0])?;
        let u = DVector::from_element(1, self.delta_thrust(omegas, extra));
        let dx = m.derivative(&DVector::from_column_slice(x.as_slice()), &u, &DVector::zeros(0))?;
        Ok(Vector2::new(dx[0], dx[1]))
    }

    fn output(&self, x: &Vector2<f64>, omegas: &[f64], extra: f64) -> Result<PowertrainOutput> {
        let m = self.model_at(x[0])?;
        let u = DVector::from_element(1, self.delta_thrust(omegas, extra));
        let y = m.output(&DVector::from_column_slice(x.as_slice()), &u)?;
        Ok(PowertrainOutput {
            soc: y[0],
            u_b: y[1],
            i_b: y[2],
        })
    }
}

enum Engine {
    Nonlinear(BatteryParams),
    Linear(LinearEcm),
}

impl Engine {
    fn new(cfg: &ModelConfig, model: EcmModel) -> Result<Self> {
        let bp = model.battery(cfg)?;
        Ok(if model.linearized() {
            Engine::Linear(LinearEcm::build(cfg, &bp)?)
        } else {
            Engine::Nonlinear(bp)
        })
    }

    fn derivative(&self, x: &Vector2<f64>, omegas: &[f64], extra: f64, cfg: &ModelConfig) -> Result<Vector2<f64>> {
        match self {
            Engine::Nonlinear(bp) => {
                let s = PowertrainState { dod: x[0], u_th: x[1] };
                Ok(ecm_dynamics(&s, omegas, extra, bp, &cfg.motor)?.0)
            }
            Engine::Linear(l) => l.derivative(x, omegas, extra),
        }
    }

    fn output(&self, x: &Vector2<f64>, omegas: &[f64], extra: f64, cfg: &ModelConfig) -> Result<PowertrainOutput> {
        match self {
            Engine::Nonlinear(bp) => {
                let s = PowertrainState { dod: x[0], u_th: x[1] };
                Ok(ecm_dynamics(&s, omegas, extra, bp, &cfg.motor)?.1)
            }
            Engine::Linear(l) => l.output(x, omegas, extra),
        }
    }

    /// Outputs at each of `times`, integrating with RK4 steps no longer
    /// than `max_step`. `input(t)` gives motor speeds and extra load.
    fn run<F>(&self, cfg: &ModelConfig, x0: Vector2<f64>, times: &[f64], max_step: f64, input: F) -> Result<Vec<PowertrainOutput>>
    where
        F: Fn(f64) -> Result<(Vec<f64>, f64)>,
    {
        if !(max_step > 0.0 && max_step.is_finite()) {
            return Err(Error::param("max_step", format!("must be positive, got {max_step}")));
        }
        let mut x = x0;
        let mut out = Vec::with_capacity(times.len());
        for (k, &t) in times.iter().enumerate() {
            let (w, extra) = input(t)?;
            out.push(self.output(&x, &w, extra, cfg)?);
            let Some(&t_next) = times.get(k + 1) else { break };
            let n = ((t_next - t) / max_step - 1e-9).ceil().max(1.0) as usize;
            let h = (t_next - t) / n as f64;
            for j in 0..n {
                let s = t + j as f64 * h;
                x = rk4_step(
                    |ts, xs: &Vector2<f64>| {
                        let (w, extra) = input(ts)?;
                        self.derivative(xs, &w, extra, cfg)
                    },
                    s,
                    &x,
                    h,
                )?;
            }
        }
        Ok(out)
    }
}

fn delta_at(t: f64, times: &[f64], soc: &[f64]) -> f64 {
    let i = times.partition_point(|&x| x <= t);
    if i == 0 {
        return 0.0;
    }
    let v = if i == times.len() {
        soc[i - 1]
    } else {
        let s = (t - times[i - 1]) / (times[i] - times[i - 1]);
        soc[i - 1] + s * (soc[i] - soc[i - 1])
    };
    v - soc[0]
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), e| (s + e * e, n + 1));
    (sum / n as f64).sqrt()
}

/// Drives the chosen battery model from the logged motor speeds (linearly
/// interpolated between samples) and compares it with the logged outputs.
///
/// The model starts at the logged initial SoC with a relaxed polarization
/// voltage.
pub fn validate_against_log(log: &FlightLog, cfg: &ModelConfig, opts: &ValidationOptions) -> Result<ValidationReport> {
    let engine = Engine::new(cfg, opts.model)?;
    let speeds: Vec<Vec<f64>> = log
        .records
        .iter()
        .map(|r| log.motor_speeds(r, &cfg.vehicle))
        .collect::<Result<_>>()?;
    let times: Vec<f64> = log.records.iter().map(|r| r.t).collect();
    let input = |t: f64| -> Result<(Vec<f64>, f64)> {
        let i = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
        let s = ((t - times[i - 1]) / (times[i] - times[i - 1])).clamp(0.0, 1.0);
        let w = speeds[i - 1]
            .iter()
            .zip(&speeds[i])
            .map(|(a, b)| a + s * (b - a))
            .collect();
        Ok((w, log.interpolate(t, |r| r.p_extra)))
    };
    let soc0 = log.records[0].soc;
    let estimated = engine.run(cfg, Vector2::new(1.0 - soc0, 0.0), &times, opts.max_step, input)?;

    let measured: Vec<f64> = log.records.iter().map(|r| r.soc).collect();
    let est_soc: Vec<f64> = estimated.iter().map(|o| o.soc).collect();
    let t0 = times[0];
    let duration = log.duration();
    let partial = duration < VALIDATION_WINDOW;
    let f_error = |t: f64| (delta_at(t, &times, &measured) - delta_at(t, &times, &est_soc)).abs() * 100.0;
    let t_end = *times.last().unwrap();
    Ok(ValidationReport {
        model: opts.model,
        f_error_window: (!partial).then(|| f_error(t0 + VALIDATION_WINDOW)),
        f_error_end: f_error(t_end),
        rms_voltage: rms(log.records.iter().zip(&estimated).map(|(r, e)| r.u_b - e.u_b)),
        rms_current: rms(log.records.iter().zip(&estimated).map(|(r, e)| r.i_b - e.i_b)),
        partial,
        duration,
        measured_delta_soc: delta_at(t_end, &times, &measured),
        estimated_delta_soc: delta_at(t_end, &times, &est_soc),
        estimated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOptions {
    pub model: EcmModel,
    pub soc0: f64,
    /// Relative bias applied to the logged current and to the logged SoC
    /// change.
    pub current_bias: f64,
    pub max_step: f64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self {
            model: EcmModel::Nonlinear,
            soc0: 1.0,
            current_bias: 0.0,
            max_step: 0.01,
        }
    }
}

/// A log produced by running a battery model on `profile` (motor speeds as
/// a function of time), sampled every `sample_period` seconds.
///
/// With a bias `b` the logged current is `(1 + b) i_b` and the logged SoC
/// is Coulomb-counted from that current, so its change from `soc0` scales
/// by the same factor.
pub fn generate_synthetic_log<F>(
    cfg: &ModelConfig,
    profile: F,
    duration: f64,
    sample_period: f64,
    opts: &SyntheticOptions,
) -> Result<FlightLog>
where
    F: Fn(f64) -> Vec<f64>,
{
    if !(sample_period > 0.0 && duration >= sample_period) {
        return Err(Error::param(
            "sample_period",
            format!("need 0 < sample_period <= duration, got {sample_period} and {duration}"),
        ));
    }
    if !(0.0..=1.0).contains(&opts.soc0) {
        return Err(Error::param("soc0", "must lie in [0, 1]"));
    }
    let engine = Engine::new(cfg, opts.model)?;
    let n = (duration / sample_period).round() as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * sample_period).collect();
    let input = |t: f64| -> Result<(Vec<f64>, f64)> { Ok((profile(t), 0.0)) };
    let outs = engine.run(cfg, Vector2::new(1.0 - opts.soc0, 0.0), &times, opts.max_step, input)?;
    let scale = 1.0 + opts.current_bias;
    let records = times
        .iter()
        .zip(&outs)
        .map(|(&t, o)| LogRecord {
            t,
            drive: profile(t),
            u_b: o.u_b,
            i_b: o.i_b * scale,
            soc: opts.soc0 - scale * (opts.soc0 - o.soc),
            p_extra: 0.0,
        })
        .collect();
    Ok(FlightLog {
        drive: LogDrive::MotorSpeeds(cfg.vehicle.motor_count()),
        records,
    })
}
