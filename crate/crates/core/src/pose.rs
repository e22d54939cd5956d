//! Rigid transforms in SE(3).

use nalgebra::{Matrix3, Point3, Vector3};

/// A rigid transform: `x_world = rotation * x_local + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(Matrix3::identity(), translation)
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Self {
        Self::new(rotation, Vector3::zeros())
    }

    /// `self * other`: apply `other` in the local frame of `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose::new(rt, -(rt * self.translation))
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// Maximum elementwise deviation of `RᵀR` from identity and of `det R` from one.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.rotation.transpose() * self.rotation - Matrix3::identity();
        let e = gram.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        e.max((self.rotation.determinant() - 1.0).abs())
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.orthonormality_error() <= tol && self.translation.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn elementary_rotations_turn_axes() {
        let x = Vector3::x();
        assert_relative_eq!(rot_z(FRAC_PI_2) * x, Vector3::y(), epsilon = 1e-15);
        assert_relative_eq!(rot_y(FRAC_PI_2) * Vector3::z(), x, epsilon = 1e-15);
        assert_relative_eq!(
            rot_x(FRAC_PI_2) * Vector3::y(),
            Vector3::z(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let p = Pose::new(rot_x(0.3) * rot_z(-1.2), Vector3::new(0.1, -0.4, 2.0));
        let e = p * p.inverse();
        assert_relative_eq!(e.rotation, Matrix3::identity(), epsilon = 1e-14);
        assert_relative_eq!(e.translation, Vector3::zeros(), epsilon = 1e-14);
        assert!(p.is_valid(1e-12));
    }
}
