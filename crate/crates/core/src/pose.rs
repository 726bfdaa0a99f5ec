//! Planar rigid-body poses and the SE(2) group operation.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Counter-clockwise rotation matrix of `angle` radians.
pub fn rotation(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// A planar pose `(p, θ)`. The angle is always kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub position: Vector2<f64>,
    angle: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, angle: f64) -> Self {
        Self::from_parts(Vector2::new(x, y), angle)
    }

    pub fn from_parts(position: Vector2<f64>, angle: f64) -> Self {
        Self {
            position,
            angle: wrap_angle(angle),
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn x(&self) -> f64 {
        self.position.x
    }

    pub fn y(&self) -> f64 {
        self.position.y
    }

    /// `[cos θ, sin θ]`, the unit-norm rotation parametrization.
    pub fn rotation_vector(&self) -> Vector2<f64> {
        let (s, c) = self.angle.sin_cos();
        Vector2::new(c, s)
    }

    pub fn rotation_matrix(&self) -> Matrix2<f64> {
        rotation(self.angle)
    }

    /// `self · other = (p_a + R_a p_b, θ_a + θ_b)`.
    pub fn compose(&self, other: &Pose2D) -> Pose2D {
        Pose2D::from_parts(
            self.position + self.rotation_matrix() * other.position,
            self.angle + other.angle,
        )
    }

    pub fn inverse(&self) -> Pose2D {
        Pose2D::from_parts(
            -(self.rotation_matrix().transpose() * self.position),
            -self.angle,
        )
    }

    /// `max(‖p‖, |θ|)`, the distance of this pose from the identity used by
    /// the balance test.
    pub fn deviation_from_identity(&self) -> f64 {
        self.position.norm().max(self.angle.abs())
    }
}

impl Default for Pose2D {
    fn default() -> Self {
        Self::identity()
    }
}
