//! Declarative vehicle description. Key names follow the usual symbols of a
//! multicopter parameter sheet (`m`, `k_F`, `R_int`, ...); angles that are
//! customarily quoted in degrees carry a `_deg` suffix.

use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;

use crate::energy_aware::EtlParams;
use crate::error::{Error, Result};
use crate::frames::DEFAULT_EULER_GUARD;
use crate::powertrain::{BatteryParams, MotorEscParams, OcvCurve, OcvSegment};
use crate::sensors::{CameraMount, CameraSpec, LidarConfig, LidarSpec};
use crate::vehicle::{Limits, Rotor, Spin, VehicleParams, STANDARD_GRAVITY};

/// Everything needed to run the models for one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub name: String,
    pub vehicle: VehicleParams,
    /// Battery with the OCV curve selected by `battery.ocv.model`.
    pub battery: BatteryParams,
    pub motor: MotorEscParams,
    pub etl: EtlParams,
    pub ocv_linear: Option<OcvCurve>,
    pub ocv_piecewise: Option<OcvCurve>,
    /// Planning limit on the depth of discharge, if given.
    pub dod_max: Option<f64>,
    pub camera: Option<CameraSpec>,
    pub lidar: Option<LidarSpec>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    vehicle: RawVehicle,
    limits: RawLimits,
    motor: RawMotor,
    battery: RawBattery,
    etl: RawEtl,
    camera: Option<RawCamera>,
    lidar: Option<RawLidar>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PerAxis {
    Shared(f64),
    Axes([f64; 3]),
}

impl PerAxis {
    fn vector(&self) -> Vector3<f64> {
        match *self {
            PerAxis::Shared(v) => Vector3::repeat(v),
            PerAxis::Axes(a) => Vector3::from(a),
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVehicle {
    m: f64,
    J_xx: f64,
    J_yy: f64,
    J_zz: f64,
    J_r: f64,
    c_F: PerAxis,
    c_tau: PerAxis,
    k_F: f64,
    k_M: f64,
    g: Option<f64>,
    euler_guard: Option<f64>,
    rotor: Vec<Rotor>,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    v_max: f64,
    v_z_max: f64,
    alpha_max_deg: f64,
    omega_max_deg_s: f64,
    Omega_max: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMotor {
    R_DC: f64,
    K_V: f64,
    D_f: Option<f64>,
    eta_ESC: f64,
    pwm_gain: Option<f64>,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBattery {
    N_S: u32,
    N_P: u32,
    Q_b: f64,
    eta_b: f64,
    R_int: f64,
    R_th: f64,
    C_th: f64,
    u_c_min: f64,
    u_c_max: f64,
    i_charge_max: f64,
    i_discharge_max: f64,
    DoD_cutoff: f64,
    DoD_max: Option<f64>,
    ocv: RawOcv,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum OcvModel {
    Linear,
    Piecewise,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOcv {
    model: OcvModel,
    b0: Option<f64>,
    b1: Option<f64>,
    #[serde(default)]
    segment: Vec<RawSegment>,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    b0: f64,
    b1: f64,
    DoD_end: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEtl {
    v_th: f64,
    #[serde(default)]
    exact_tilt: bool,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum MountKind {
    Fixed,
    Gimbal,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCamera {
    I: f64,
    gamma_deg: f64,
    rho: f64,
    T_s: f64,
    delta: f64,
    R_I_min: f64,
    L_t: Option<f64>,
    mount: MountKind,
    a_c: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum ScanKind {
    Vertical,
    Horizontal,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLidar {
    gamma_h_deg: f64,
    gamma_v_deg: f64,
    gamma_h_star_deg: f64,
    r_L: f64,
    V_res_deg: f64,
    H_res_deg: f64,
    f_L: f64,
    delta: f64,
    R_L_min: f64,
    t_R: f64,
    scan: ScanKind,
}

fn config_error(context: &str, section: &str, err: Error) -> Error {
    match err {
        Error::InvalidParameter { name, message } => Error::Config {
            context: context.to_string(),
            message: format!("[{section}] {name}: {message}"),
        },
        other => other,
    }
}

impl ModelConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            context: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// Parses and validates a config; `context` names the source in errors.
    pub fn from_toml_str(text: &str, context: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
            context: context.to_string(),
            message: e.to_string().trim_end().to_string(),
        })?;
        Self::from_raw(raw, context)
    }

    fn from_raw(raw: RawConfig, ctx: &str) -> Result<Self> {
        let v = &raw.vehicle;
        let vehicle = VehicleParams {
            mass: v.m,
            inertia: Vector3::new(v.J_xx, v.J_yy, v.J_zz),
            rotor_inertia: v.J_r,
            angular_drag: v.c_tau.vector(),
            translational_drag: v.c_F.vector(),
            k_f: v.k_F,
            k_m: v.k_M,
            rotors: v.rotor.clone(),
            gravity: v.g.unwrap_or(STANDARD_GRAVITY),
            limits: Limits {
                v_g_max: raw.limits.v_max,
                v_c_max: raw.limits.v_z_max,
                alpha_max: raw.limits.alpha_max_deg.to_radians(),
                omega_max: raw.limits.omega_max_deg_s.to_radians(),
                motor_speed_max: raw.limits.Omega_max,
            },
            euler_guard: v.euler_guard.unwrap_or(DEFAULT_EULER_GUARD),
        };
        let warnings = vehicle.validate().map_err(|e| config_error(ctx, "vehicle", e))?;

        let motor = MotorEscParams {
            r_dc: raw.motor.R_DC,
            k_v: raw.motor.K_V,
            damping: raw.motor.D_f.unwrap_or(0.0),
            k_m: v.k_M,
            eta_esc: raw.motor.eta_ESC,
            motor_count: vehicle.motor_count(),
            pwm_gain: raw.motor.pwm_gain.unwrap_or(1.0),
        };
        motor.validate().map_err(|e| config_error(ctx, "motor", e))?;

        let b = &raw.battery;
        let ocv_linear = match (b.ocv.b0, b.ocv.b1) {
            (Some(b0), Some(b1)) => Some(OcvCurve::Linear {
                b0,
                b1,
                dod_max: 1.0,
            }),
            (None, None) => None,
            _ => {
                return Err(Error::Config {
                    context: ctx.to_string(),
                    message: "[battery.ocv] b0 and b1 must be given together".to_string(),
                })
            }
        };
        let ocv_piecewise = if b.ocv.segment.is_empty() {
            None
        } else {
            let mut start = 0.0;
            let segments = b
                .ocv
                .segment
                .iter()
                .map(|s| {
                    let seg = OcvSegment {
                        b0: s.b0,
                        b1: s.b1,
                        dod_start: start,
                        dod_end: s.DoD_end,
                    };
                    start = s.DoD_end;
                    seg
                })
                .collect();
            Some(OcvCurve::Piecewise { segments })
        };
        let selected = match b.ocv.model {
            OcvModel::Linear => ocv_linear.clone(),
            OcvModel::Piecewise => ocv_piecewise.clone(),
        }
        .ok_or_else(|| Error::Config {
            context: ctx.to_string(),
            message: format!("[battery.ocv] model = {:?} but its coefficients are missing", b.ocv.model)
                .to_lowercase(),
        })?;
        let battery = BatteryParams {
            cells_series: b.N_S,
            cells_parallel: b.N_P,
            capacity: b.Q_b,
            coulombic_efficiency: b.eta_b,
            r_int: b.R_int,
            r_th: b.R_th,
            c_th: b.C_th,
            ocv: selected,
            dod_cutoff: b.DoD_cutoff,
            u_cell_min: b.u_c_min,
            u_cell_max: b.u_c_max,
            i_charge_max: b.i_charge_max,
            i_discharge_max: b.i_discharge_max,
        };
        battery.validate().map_err(|e| config_error(ctx, "battery", e))?;
        for curve in [&ocv_linear, &ocv_piecewise].into_iter().flatten() {
            curve.validate(b.DoD_cutoff).map_err(|e| config_error(ctx, "battery.ocv", e))?;
        }
        if let Some(d) = b.DoD_max {
            if !(d > 0.0 && d <= b.DoD_cutoff) {
                return Err(Error::Config {
                    context: ctx.to_string(),
                    message: "[battery] DoD_max: must lie in (0, DoD_cutoff]".to_string(),
                });
            }
        }

        let etl = EtlParams {
            v_th: raw.etl.v_th,
            c_f: vehicle.translational_drag.x,
            exact_tilt: raw.etl.exact_tilt,
        };
        etl.validate().map_err(|e| config_error(ctx, "etl", e))?;

        let camera = raw
            .camera
            .map(|c| {
                let mount = match (c.mount, c.a_c) {
                    (MountKind::Gimbal, _) => CameraMount::Gimbal,
                    (MountKind::Fixed, Some(a)) => CameraMount::Fixed { a_c: Vector3::from(a) },
                    (MountKind::Fixed, None) => {
                        return Err(Error::Config {
                            context: ctx.to_string(),
                            message: "[camera] a_c: required for a fixed mount".to_string(),
                        })
                    }
                };
                let spec = CameraSpec {
                    resolution: c.I,
                    fov: c.gamma_deg.to_radians(),
                    aspect_ratio: c.rho,
                    sampling_period: c.T_s,
                    overlap: c.delta,
                    min_resolution: c.R_I_min,
                    target_length: c.L_t,
                    mount,
                };
                spec.validate().map_err(|e| match e {
                    Error::DegenerateFov(_) => Error::Config {
                        context: ctx.to_string(),
                        message: "[camera] gamma_deg: must lie in (0, 180)".to_string(),
                    },
                    e => config_error(ctx, "camera", e),
                })?;
                Ok(spec)
            })
            .transpose()?;

        let lidar = raw
            .lidar
            .map(|l| {
                let spec = LidarSpec {
                    fov_h: l.gamma_h_deg.to_radians(),
                    fov_v: l.gamma_v_deg.to_radians(),
                    fov_h_valid: l.gamma_h_star_deg.to_radians(),
                    range: l.r_L,
                    res_v: l.V_res_deg.to_radians(),
                    res_h: l.H_res_deg.to_radians(),
                    scan_rate: l.f_L,
                    overlap: l.delta,
                    min_density: l.R_L_min,
                    reaction_time: l.t_R,
                    config: match l.scan {
                        ScanKind::Vertical => LidarConfig::VerticalScan,
                        ScanKind::Horizontal => LidarConfig::HorizontalScan,
                    },
                };
                spec.validate().map_err(|e| config_error(ctx, "lidar", e))?;
                Ok(spec)
            })
            .transpose()?;

        Ok(ModelConfig {
            name: raw.name.unwrap_or_else(|| "unnamed".to_string()),
            vehicle,
            battery,
            motor,
            etl,
            ocv_linear,
            ocv_piecewise,
            dod_max: b.DoD_max,
            camera,
            lidar,
            warnings,
        })
    }

    /// Same model with a different battery OCV curve.
    pub fn with_ocv(&self, ocv: OcvCurve) -> Self {
        Self {
            battery: self.battery.with_ocv(ocv),
            ..self.clone()
        }
    }

    pub fn spin_signs(&self) -> Vec<Spin> {
        self.vehicle.rotors.iter().map(|r| r.spin).collect()
    }
}
