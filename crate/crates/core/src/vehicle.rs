//! Generalized multicopter model: rotor mixing, 12-state rigid-body dynamics
//! and the vehicle capability constraints.

use nalgebra::{DMatrix, DVector, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintCheck, ConstraintReport};
use crate::error::{Error, Result};
use crate::frames::{self, EulerAngles};

/// Standard gravity, m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Stacked state `(x, y, z, vx, vy, vz, phi, theta, psi, wx, wy, wz)`.
pub type UavStateVector = SVector<f64, 12>;

/// Rotor spin direction. Clockwise is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Spin {
    Clockwise,
    CounterClockwise,
}

impl Spin {
    pub fn sign(self) -> f64 {
        match self {
            Spin::Clockwise => 1.0,
            Spin::CounterClockwise => -1.0,
        }
    }
}

impl TryFrom<i8> for Spin {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Spin::Clockwise),
            -1 => Ok(Spin::CounterClockwise),
            other => Err(format!("spin must be +1 or -1, got {other}")),
        }
    }
}

impl From<Spin> for i8 {
    fn from(s: Spin) -> i8 {
        match s {
            Spin::Clockwise => 1,
            Spin::CounterClockwise => -1,
        }
    }
}

/// Rotor hub position in the body frame (m) and its spin direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotor {
    pub l_x: f64,
    pub l_y: f64,
    pub spin: Spin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    /// Horizontal ground speed, m/s.
    pub v_g_max: f64,
    /// Climb/descent speed, m/s.
    pub v_c_max: f64,
    /// Tilt angle, rad.
    pub alpha_max: f64,
    /// Body angular rate (infinity norm), rad/s.
    pub omega_max: f64,
    /// Motor speed cap, rad/s.
    pub motor_speed_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    pub mass: f64,
    /// Diagonal inertia (Jxx, Jyy, Jzz), kg m^2.
    pub inertia: Vector3<f64>,
    pub rotor_inertia: f64,
    /// Angular drag coefficients, N m s/rad.
    pub angular_drag: Vector3<f64>,
    /// Translational drag coefficients, N s/m.
    pub translational_drag: Vector3<f64>,
    pub k_f: f64,
    pub k_m: f64,
    pub rotors: Vec<Rotor>,
    pub gravity: f64,
    pub limits: Limits,
    /// Roll/pitch distance kept from gimbal lock, rad.
    pub euler_guard: f64,
}

impl VehicleParams {
    pub fn motor_count(&self) -> usize {
        self.rotors.len()
    }

    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    /// Checks the hard invariants and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        positive("m", self.mass)?;
        for (name, v) in ["J_xx", "J_yy", "J_zz"].iter().zip(self.inertia.iter()) {
            positive(name, *v)?;
        }
        for (name, v) in ["c_tau_x", "c_tau_y", "c_tau_z"].iter().zip(self.angular_drag.iter()) {
            positive(name, *v)?;
        }
        for (name, v) in ["c_Fx", "c_Fy", "c_Fz"].iter().zip(self.translational_drag.iter()) {
            positive(name, *v)?;
        }
        positive("J_r", self.rotor_inertia)?;
        positive("k_F", self.k_f)?;
        positive("k_M", self.k_m)?;
        positive("g", self.gravity)?;
        positive("v_g_max", self.limits.v_g_max)?;
        positive("v_c_max", self.limits.v_c_max)?;
        positive("alpha_max", self.limits.alpha_max)?;
        positive("omega_max", self.limits.omega_max)?;
        positive("Omega_max", self.limits.motor_speed_max)?;
        if self.limits.alpha_max >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::param("alpha_max", "must be below pi/2"));
        }
        if self.rotors.len() < 3 {
            return Err(Error::param(
                "rotors",
                format!("at least 3 rotors required, got {}", self.rotors.len()),
            ));
        }
        let mut warnings = Vec::new();
        let cw = self.rotors.iter().filter(|r| r.spin == Spin::Clockwise).count();
        if cw == 0 || cw == self.rotors.len() {
            warnings.push("all rotors spin the same way; yaw is not controllable".to_string());
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UavState {
    /// Inertial NED position, m.
    pub position: Vector3<f64>,
    /// Inertial velocity, m/s.
    pub velocity: Vector3<f64>,
    pub attitude: EulerAngles,
    /// Body angular rates, rad/s.
    pub rates: Vector3<f64>,
}

impl UavState {
    pub fn to_vector(&self) -> UavStateVector {
        let mut v = UavStateVector::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.position);
        v.fixed_rows_mut::<3>(3).copy_from(&self.velocity);
        v.fixed_rows_mut::<3>(6).copy_from(&self.attitude.as_vector());
        v.fixed_rows_mut::<3>(9).copy_from(&self.rates);
        v
    }

    pub fn from_vector(v: &UavStateVector) -> Self {
        Self {
            position: v.fixed_rows::<3>(0).into(),
            velocity: v.fixed_rows::<3>(3).into(),
            attitude: EulerAngles::from_vector(&v.fixed_rows::<3>(6).into()),
            rates: v.fixed_rows::<3>(9).into(),
        }
    }

    pub fn ground_speed(&self) -> f64 {
        self.velocity.x.hypot(self.velocity.y)
    }

    pub fn tilt(&self) -> f64 {
        frames::tilt_angle(self.attitude.phi, self.attitude.theta)
    }
}

/// Total thrust, body torques and net rotor-speed difference.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UavInput {
    pub thrust: f64,
    pub torque: Vector3<f64>,
    pub rotor_speed_diff: f64,
}

impl UavInput {
    pub fn hover(params: &VehicleParams) -> Self {
        Self {
            thrust: params.weight(),
            ..Default::default()
        }
    }
}

/// Inertial wind velocity, m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WindDisturbance {
    pub velocity: Vector3<f64>,
}

impl WindDisturbance {
    pub fn new(vx: f64, vy: f64, vz: f64) -> Self {
        Self {
            velocity: Vector3::new(vx, vy, vz),
        }
    }
}

fn check_speeds(omegas: &[f64], params: &VehicleParams) -> Result<()> {
    if omegas.len() != params.motor_count() {
        return Err(Error::DimensionMismatch {
            expected: params.motor_count(),
            got: omegas.len(),
        });
    }
    if let Some((index, &value)) = omegas.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
        return Err(Error::NegativeSpeed { index, value });
    }
    Ok(())
}

/// Maps motor speed magnitudes (rad/s) to thrust, torques and rotor-speed
/// difference using the configured rotor layout.
pub fn mix_motor_speeds(omegas: &[f64], params: &VehicleParams) -> Result<UavInput> {
    check_speeds(omegas, params)?;
    let mut input = UavInput::default();
    for (rotor, &w) in params.rotors.iter().zip(omegas) {
        let force = params.k_f * w * w;
        let drag_torque = params.k_m * w * w;
        input.thrust += force;
        input.torque.x -= rotor.l_y * force;
        input.torque.y += rotor.l_x * force;
        input.torque.z -= rotor.spin.sign() * drag_torque;
        input.rotor_speed_diff += rotor.spin.sign() * w;
    }
    Ok(input)
}

/// Linear map from squared motor speeds to `(T, tau_x, tau_y, tau_z)`.
pub fn mixing_matrix(params: &VehicleParams) -> DMatrix<f64> {
    let n = params.motor_count();
    DMatrix::from_fn(4, n, |row, i| {
        let r = &params.rotors[i];
        match row {
            0 => params.k_f,
            1 => -r.l_y * params.k_f,
            2 => r.l_x * params.k_f,
            _ => -r.spin.sign() * params.k_m,
        }
    })
}

/// Inverse mixing: the minimum-norm squared-speed vector producing the
/// requested thrust and torques. Squared speeds that come out negative are
/// saturated at zero, so the result is exact only inside the feasible set.
pub fn allocate_motor_speeds(thrust: f64, torque: &Vector3<f64>, params: &VehicleParams) -> Result<Vec<f64>> {
    let m = mixing_matrix(params);
    let pinv = m
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::param("rotors", e.to_string()))?;
    let wrench = DVector::from_vec(vec![thrust, torque.x, torque.y, torque.z]);
    let squared = pinv * wrench;
    Ok(squared.iter().map(|s| s.max(0.0).sqrt()).collect())
}

/// Continuous-time rigid-body dynamics, returning the 12-dim state derivative.
pub fn dynamics(
    x: &UavState,
    u: &UavInput,
    d: &WindDisturbance,
    params: &VehicleParams,
) -> Result<UavStateVector> {
    let euler_rates = frames::euler_rate_matrix_guarded(x.attitude, params.euler_guard)?;
    let rotation = frames::rotation_body_to_inertial(x.attitude);
    let m = params.mass;

    let gravity = Vector3::new(0.0, 0.0, m * params.gravity);
    let thrust = rotation * Vector3::new(0.0, 0.0, -u.thrust);
    let drag = params.translational_drag.component_mul(&(x.velocity - d.velocity));
    let accel = (gravity + thrust - drag) / m;

    let w = x.rates;
    let j = params.inertia;
    let gyro = w.cross(&Vector3::new(0.0, 0.0, params.rotor_inertia * u.rotor_speed_diff));
    let rot_drag = params.angular_drag.component_mul(&w);
    let ang_accel = (u.torque - w.cross(&j.component_mul(&w)) - gyro - rot_drag).component_div(&j);

    let mut dx = UavStateVector::zeros();
    dx.fixed_rows_mut::<3>(0).copy_from(&x.velocity);
    dx.fixed_rows_mut::<3>(3).copy_from(&accel);
    dx.fixed_rows_mut::<3>(6).copy_from(&(euler_rates * w));
    dx.fixed_rows_mut::<3>(9).copy_from(&ang_accel);
    Ok(dx)
}

/// Dynamics plus a caller-supplied additive uncertainty term.
pub fn dynamics_with_uncertainty(
    x: &UavState,
    u: &UavInput,
    d: &WindDisturbance,
    params: &VehicleParams,
    uncertainty: &UavStateVector,
) -> Result<UavStateVector> {
    Ok(dynamics(x, u, d, params)? + uncertainty)
}

/// Evaluates every vehicle capability limit. The tilt check decides on the
/// exact `acos(cos(phi) cos(theta))` form; the small-angle value is reported
/// alongside it.
pub fn check_vehicle_constraints(x: &UavState, omegas: &[f64], params: &VehicleParams) -> ConstraintReport {
    let lim = &params.limits;
    let mut checks = vec![
        ConstraintCheck::upper("ground_speed", x.ground_speed(), lim.v_g_max),
        ConstraintCheck::upper("climb_speed", x.velocity.z.abs(), lim.v_c_max),
        ConstraintCheck::upper("tilt", x.tilt(), lim.alpha_max),
        ConstraintCheck::new(
            "tilt_small_angle",
            x.attitude.phi.hypot(x.attitude.theta),
            None,
            None,
        ),
        ConstraintCheck::upper("body_rate", x.rates.amax(), lim.omega_max),
    ];
    checks.extend(
        omegas
            .iter()
            .enumerate()
            .map(|(i, &w)| ConstraintCheck::between(format!("motor_speed_{}", i + 1), w, 0.0, lim.motor_speed_max)),
    );
    ConstraintReport { checks }
}
