//! Operational bounds for cameras and LiDARs: how far from a target the
//! vehicle may be, how well a fixed camera must point, and how fast it may
//! fly while still collecting usable data.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintCheck, ConstraintReport};
use crate::error::{Error, Result};
use crate::frames::{rotation_body_to_inertial, EulerAngles};
use crate::vehicle::{UavState, VehicleParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CameraMount {
    /// Rigidly attached; `a_c` is the boresight unit vector in the body frame.
    Fixed { a_c: Vector3<f64> },
    /// Stabilized so the camera always points at the target.
    Gimbal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    /// Pixels along the constraining image axis.
    pub resolution: f64,
    /// Field of view along the same axis, rad.
    pub fov: f64,
    pub aspect_ratio: f64,
    /// Time between images, s.
    pub sampling_period: f64,
    /// Required overlap of successive images, in [0, 1].
    pub overlap: f64,
    /// Minimum spatial resolution, px/m.
    pub min_resolution: f64,
    /// Extent of the target to keep in view, m. Defaults to the largest
    /// extent that meets the minimum resolution.
    pub target_length: Option<f64>,
    pub mount: CameraMount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LidarConfig {
    /// Scanning the ground below the vehicle.
    VerticalScan,
    /// Scanning ahead for obstacles.
    HorizontalScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarSpec {
    pub fov_h: f64,
    pub fov_v: f64,
    /// Horizontal field of view that yields valid ground returns.
    pub fov_h_valid: f64,
    /// Effective range, m.
    pub range: f64,
    /// Vertical and horizontal angular resolution, rad.
    pub res_v: f64,
    pub res_h: f64,
    /// Scan rate, Hz.
    pub scan_rate: f64,
    pub overlap: f64,
    /// Minimum point density, pts/m^2.
    pub min_density: f64,
    /// Detection and reaction time, s.
    pub reaction_time: f64,
    pub config: LidarConfig,
}

impl CameraSpec {
    pub fn validate(&self) -> Result<()> {
        check_fov(self.fov)?;
        for (name, v) in [
            ("I", self.resolution),
            ("rho", self.aspect_ratio),
            ("T_s", self.sampling_period),
            ("R_I_min", self.min_resolution),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        check_fraction("delta", self.overlap)?;
        if let Some(l) = self.target_length {
            if !(l > 0.0 && l <= self.max_target_length()) {
                return Err(Error::param(
                    "L_t",
                    format!("must lie in (0, I/R_I_min = {}], got {l}", self.max_target_length()),
                ));
            }
        }
        if let CameraMount::Fixed { a_c } = self.mount {
            if (a_c.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::param("a_c", "boresight must be a unit vector"));
            }
        }
        Ok(())
    }

    /// Largest target extent that still meets the minimum resolution, m.
    pub fn max_target_length(&self) -> f64 {
        self.resolution / self.min_resolution
    }

    pub fn target_length(&self) -> f64 {
        self.target_length.unwrap_or_else(|| self.max_target_length())
    }
}

impl LidarSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov_h > 0.0 && self.fov_h <= 2.0 * PI) {
            return Err(Error::param("gamma_h", format!("must lie in (0, 2 pi], got {}", self.fov_h)));
        }
        for (name, v) in [("gamma_v", self.fov_v), ("gamma_h_star", self.fov_h_valid)] {
            check_fov(v).map_err(|_| Error::param(name, format!("must lie in (0, pi), got {v}")))?;
        }
        if self.fov_h_valid > self.fov_h {
            return Err(Error::param("gamma_h_star", "must not exceed gamma_h"));
        }
        for (name, v) in [
            ("r_L", self.range),
            ("V_res", self.res_v),
            ("H_res", self.res_h),
            ("f_L", self.scan_rate),
            ("R_L_min", self.min_density),
            ("t_R", self.reaction_time),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        check_fraction("delta", self.overlap)
    }
}

fn check_fov(fov: f64) -> Result<()> {
    if !(fov > 0.0 && fov < PI) {
        return Err(Error::DegenerateFov(fov));
    }
    Ok(())
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::param(name, format!("overlap must lie in [0, 1], got {v}")));
    }
    Ok(())
}

/// Largest target distance at which the minimum spatial resolution holds.
pub fn camera_max_target_distance(spec: &CameraSpec) -> Result<f64> {
    check_fov(spec.fov)?;
    Ok(spec.resolution / (2.0 * spec.min_resolution * (spec.fov / 2.0).tan()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CameraAlignment {
    /// Angle between boresight and line of sight, rad.
    pub chi: f64,
    pub pass: bool,
    pub bound: f64,
}

pub fn camera_alignment(
    p: &Vector3<f64>,
    p_t: &Vector3<f64>,
    attitude: EulerAngles,
    spec: &CameraSpec,
) -> Result<CameraAlignment> {
    let los = p_t - p;
    let d_t = los.norm();
    if d_t == 0.0 {
        return Err(Error::CoincidentTarget);
    }
    match spec.mount {
        CameraMount::Gimbal => Ok(CameraAlignment {
            chi: 0.0,
            pass: p.z <= p_t.z,
            bound: spec.fov / 2.0,
        }),
        CameraMount::Fixed { a_c } => {
            let boresight = rotation_body_to_inertial(attitude) * a_c;
            let chi = (los / d_t).dot(&boresight).clamp(-1.0, 1.0).acos();
            let bound = spec.fov / 2.0 - (spec.target_length() / (2.0 * d_t)).atan();
            Ok(CameraAlignment {
                chi,
                pass: chi <= bound,
                bound,
            })
        }
    }
}

/// Ground speed that keeps the required overlap between successive images.
pub fn camera_survey_velocity_bound(z: f64, z_t: f64, spec: &CameraSpec) -> f64 {
    let overlap = spec.overlap.clamp(0.0, 1.0);
    2.0 * (z_t - z).abs() * (spec.fov / 2.0).tan() * (1.0 - overlap) / (spec.aspect_ratio * spec.sampling_period)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LidarGroundBounds {
    /// Distance at which the point density drops to the minimum, m.
    pub d_max_density: f64,
    /// Distance at which the footprint corners leave the range, m.
    pub d_max_range: f64,
    pub d_max: f64,
    pub v_g_max: f64,
    pub report: ConstraintReport,
}

/// Points per square metre on a plane at distance `d`.
///
/// The scan holds `(gamma_v / V_res)(gamma_h* / H_res)` points spread over a
/// footprint of `4 d^2 tan(gamma_v/2) tan(gamma_h*/2)`.
pub fn lidar_point_density(d: f64, spec: &LidarSpec) -> f64 {
    let points = (spec.fov_v / spec.res_v) * (spec.fov_h_valid / spec.res_h);
    points / (4.0 * d * d * (spec.fov_v / 2.0).tan() * (spec.fov_h_valid / 2.0).tan())
}

pub fn lidar_ground_constraints(z: f64, z_t: f64, spec: &LidarSpec) -> LidarGroundBounds {
    let (tv, th) = ((spec.fov_v / 2.0).tan(), (spec.fov_h_valid / 2.0).tan());
    let d_max_density =
        (spec.fov_v * spec.fov_h_valid / (4.0 * spec.min_density * spec.res_v * spec.res_h * tv * th)).sqrt();
    let d_max_range = (spec.range * (spec.fov_v / 2.0).cos()).min(spec.range * (spec.fov_h_valid / 2.0).cos());
    let d_max = d_max_density.min(d_max_range);
    let height = (z_t - z).abs();
    let v_g_max = 2.0 * height * tv * (1.0 - spec.overlap.clamp(0.0, 1.0)) * spec.scan_rate;
    let report = ConstraintReport {
        checks: vec![ConstraintCheck::upper("lidar_target_distance", height, d_max)],
    };
    LidarGroundBounds {
        d_max_density,
        d_max_range,
        d_max,
        v_g_max,
        report,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LidarObstacleBounds {
    pub v_g_max: f64,
    /// Tilt that keeps the obstacle scan horizontal, rad.
    pub alpha_max_sensor: f64,
    /// Tighter of the sensor and vehicle tilt limits, rad.
    pub alpha_max_effective: f64,
    /// Braking deceleration assumed, m/s^2.
    pub braking: f64,
}

/// Fastest ground speed from which the vehicle can still stop within the
/// LiDAR range: the positive root of `v t_R + v^2 / (2 a) = r_L`.
pub fn lidar_obstacle_constraints(vp: &VehicleParams, spec: &LidarSpec) -> LidarObstacleBounds {
    let a = vp.limits.alpha_max * vp.gravity;
    let at = a * spec.reaction_time;
    let v_g_max = 2.0 * a * spec.range / (at + (at * at + 2.0 * a * spec.range).sqrt());
    let alpha_max_sensor = spec.fov_v / 2.0;
    LidarObstacleBounds {
        v_g_max,
        alpha_max_sensor,
        alpha_max_effective: alpha_max_sensor.min(vp.limits.alpha_max),
        braking: a,
    }
}

/// All sensor bounds evaluated for one vehicle state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensorCheck {
    pub camera: Option<CameraCheck>,
    pub lidar_ground: Option<LidarGroundBounds>,
    pub lidar_obstacle: Option<LidarObstacleBounds>,
    pub report: ConstraintReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CameraCheck {
    pub d_max: f64,
    pub v_g_max: f64,
    pub alignment: Option<CameraAlignment>,
}

/// Evaluates every configured sensor against `state`. Without an explicit
/// target the camera looks at the ground point below the vehicle at `z_t`.
pub fn check_sensors(
    state: &UavState,
    z_t: f64,
    target: Option<Vector3<f64>>,
    camera: Option<&CameraSpec>,
    lidar: Option<&LidarSpec>,
    vp: &VehicleParams,
) -> Result<SensorCheck> {
    let mut report = ConstraintReport::default();
    let v_g = state.ground_speed();
    let camera = match camera {
        Some(spec) => {
            let d_max = camera_max_target_distance(spec)?;
            let v_g_max = camera_survey_velocity_bound(state.position.z, z_t, spec);
            let p_t = target.unwrap_or(Vector3::new(state.position.x, state.position.y, z_t));
            let alignment = match camera_alignment(&state.position, &p_t, state.attitude, spec) {
                Ok(a) => Some(a),
                Err(Error::CoincidentTarget) => None,
                Err(e) => return Err(e),
            };
            report.checks.push(ConstraintCheck::upper(
                "camera_target_distance",
                (p_t - state.position).norm(),
                d_max,
            ));
            report.checks.push(ConstraintCheck::upper("camera_ground_speed", v_g, v_g_max));
            if let Some(a) = alignment {
                let mut c = ConstraintCheck::upper("camera_alignment", a.chi, a.bound);
                c.pass = a.pass;
                report.checks.push(c);
            }
            Some(CameraCheck {
                d_max,
                v_g_max,
                alignment,
            })
        }
        None => None,
    };
    let (lidar_ground, lidar_obstacle) = match lidar {
        Some(spec) if spec.config == LidarConfig::VerticalScan => {
            let g = lidar_ground_constraints(state.position.z, z_t, spec);
            report.extend(g.report.clone());
            report.checks.push(ConstraintCheck::upper("lidar_ground_speed", v_g, g.v_g_max));
            (Some(g), None)
        }
        Some(spec) => {
            let o = lidar_obstacle_constraints(vp, spec);
            report.checks.push(ConstraintCheck::upper("lidar_ground_speed", v_g, o.v_g_max));
            report.checks.push(ConstraintCheck::upper("lidar_tilt", state.tilt(), o.alpha_max_effective));
            (None, Some(o))
        }
        None => (None, None),
    };
    Ok(SensorCheck {
        camera,
        lidar_ground,
        lidar_obstacle,
        report,
    })
}
