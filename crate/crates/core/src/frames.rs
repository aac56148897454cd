//! Transforms between the inertial north-east-down frame and the body-fixed
//! forward-right-down frame.
//!
//! Attitude is a Z-Y-X Euler sequence (yaw, pitch, roll). The Euler-rate
//! matrix is singular at |theta| = pi/2, so it is only built inside a guard
//! band around that boundary.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<f64>;

/// Default distance (rad) kept from +-pi/2 on roll and pitch.
pub const DEFAULT_EULER_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }

    /// Same attitude with yaw wrapped into (-pi, pi].
    pub fn normalized(self) -> Self {
        Self {
            psi: wrap_angle(self.psi),
            ..self
        }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.phi, self.theta, self.psi)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Rotation matrix taking body-frame vectors into the inertial frame.
pub fn rotation_body_to_inertial(angles: EulerAngles) -> Mat3 {
    let (sphi, cphi) = angles.phi.sin_cos();
    let (sth, cth) = angles.theta.sin_cos();
    let (spsi, cpsi) = angles.psi.sin_cos();
    Matrix3::new(
        cpsi * cth,
        cpsi * sth * sphi - spsi * cphi,
        cpsi * sth * cphi + spsi * sphi,
        spsi * cth,
        spsi * sth * sphi + cpsi * cphi,
        spsi * sth * cphi - cpsi * sphi,
        -sth,
        cth * sphi,
        cth * cphi,
    )
}

/// Matrix mapping body angular velocity to Euler-angle rates, using the
/// default guard.
pub fn euler_rate_matrix(angles: EulerAngles) -> Result<Mat3> {
    euler_rate_matrix_guarded(angles, DEFAULT_EULER_GUARD)
}

/// Euler-rate matrix with an explicit guard: roll and pitch must satisfy
/// `|angle| < pi/2 - guard`.
pub fn euler_rate_matrix_guarded(angles: EulerAngles, guard: f64) -> Result<Mat3> {
    check_orientation(angles, guard)?;
    let (sphi, cphi) = angles.phi.sin_cos();
    let (sth, cth) = angles.theta.sin_cos();
    let tth = sth / cth;
    Ok(Matrix3::new(
        1.0,
        sphi * tth,
        cphi * tth,
        0.0,
        cphi,
        -sphi,
        0.0,
        sphi / cth,
        cphi / cth,
    ))
}

pub fn check_orientation(angles: EulerAngles, guard: f64) -> Result<()> {
    let limit = PI / 2.0 - guard;
    if !(angles.phi.abs() < limit && angles.theta.abs() < limit) {
        return Err(Error::SingularOrientation {
            phi: angles.phi,
            theta: angles.theta,
            guard,
        });
    }
    Ok(())
}

/// Angle between the body z-axis and the inertial z-axis.
pub fn tilt_angle(phi: f64, theta: f64) -> f64 {
    (phi.cos() * theta.cos()).clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn inf_norm(m: &Mat3) -> f64 {
        m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    #[test]
    fn zero_rotation_is_identity() {
        assert_eq!(rotation_body_to_inertial(EulerAngles::default()), Mat3::identity());
    }

    #[test]
    fn pure_yaw_maps_body_x_to_inertial_y() {
        let r = rotation_body_to_inertial(EulerAngles::new(0.0, 0.0, PI / 2.0));
        let col = r.column(0);
        assert_abs_diff_eq!(col[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(col[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(col[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn thrust_axis_matches_entrywise_formula() {
        let (phi, theta, psi) = (0.1_f64, -0.2_f64, 0.3_f64);
        let r = rotation_body_to_inertial(EulerAngles::new(phi, theta, psi));
        let down = r * Vector3::new(0.0, 0.0, -1.0);
        // third column of the Z-Y-X matrix, written out independently
        let expected = Vector3::new(
            -(psi.cos() * theta.sin() * phi.cos() + psi.sin() * phi.sin()),
            -(psi.sin() * theta.sin() * phi.cos() - psi.cos() * phi.sin()),
            -(theta.cos() * phi.cos()),
        );
        assert_abs_diff_eq!(down, expected, epsilon = 1e-15);
        assert!(inf_norm(&(r.transpose() * r - Mat3::identity())) <= 1e-12);
    }

    #[test]
    fn euler_rate_identity_when_level() {
        for psi in [-3.0, 0.0, 1.2, PI] {
            let m = euler_rate_matrix(EulerAngles::new(0.0, 0.0, psi)).unwrap();
            assert_eq!(m, Mat3::identity());
        }
    }

    #[test]
    fn euler_rate_guard_rejects_near_gimbal_lock() {
        let err = euler_rate_matrix(EulerAngles::new(0.0, PI / 2.0 - 1e-4, 0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularOrientation { .. }));
        assert!(euler_rate_matrix(EulerAngles::new(-1.6, 0.0, 0.0)).is_err());
        assert!(euler_rate_matrix(EulerAngles::new(f64::NAN, 0.0, 0.0)).is_err());
    }

    #[test]
    fn euler_rate_entry_matches_direct_evaluation() {
        let m = euler_rate_matrix(EulerAngles::new(0.3, 0.4, 0.0)).unwrap();
        assert_abs_diff_eq!(m[(0, 1)], 0.3_f64.sin() * 0.4_f64.tan(), epsilon = 1e-15);
        assert_abs_diff_eq!(m[(2, 2)], 0.3_f64.cos() / 0.4_f64.cos(), epsilon = 1e-15);
    }

    #[test]
    fn wrap_angle_range() {
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(0.5), 0.5);
        assert_abs_diff_eq!(wrap_angle(-0.5 - 2.0 * PI), -0.5, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn rotation_is_orthonormal(phi in -PI..PI, theta in -PI..PI, psi in -PI..PI) {
            let r = rotation_body_to_inertial(EulerAngles::new(phi, theta, psi));
            prop_assert!(inf_norm(&(r.transpose() * r - Mat3::identity())) <= 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn rotation_round_trip(phi in -PI..PI, theta in -PI..PI, psi in -PI..PI,
                               vx in -100.0..100.0, vy in -100.0..100.0, vz in -100.0..100.0) {
            let r = rotation_body_to_inertial(EulerAngles::new(phi, theta, psi));
            let v = Vector3::new(vx, vy, vz);
            let back = r * (r.transpose() * v);
            prop_assert!((back - v).amax() <= 1e-12 * v.amax().max(1.0));
        }

        #[test]
        fn tilt_matches_rotated_thrust_axis(phi in -1.5..1.5, theta in -1.5..1.5) {
            let r = rotation_body_to_inertial(EulerAngles::new(phi, theta, 0.0));
            let down = r * Vector3::new(0.0, 0.0, -1.0);
            // angle between rotated thrust axis and inertial up
            let cos_alpha = -down.z;
            prop_assert!((cos_alpha - phi.cos() * theta.cos()).abs() <= 1e-14);
            prop_assert!((tilt_angle(phi, theta).cos() - cos_alpha).abs() <= 1e-12);
        }
    }
}
