//! SE(3) poses as position plus unit quaternion.
//!
//! Composition follows the Hamilton convention with active rotations:
//! `a ⊕ b` places frame `b` (expressed in `a`) into the parent frame of `a`.
//! All operations are generic over [`Scalar`] so that the same code serves
//! numeric evaluation and gradient computation.

use std::f64::consts::PI;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion<S> {
    pub w: S,
    pub x: S,
    pub y: S,
    pub z: S,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<S> {
    pub position: [S; 3],
    pub orientation: Quaternion<S>,
}

/// Planar pose: position in meters and heading in radians in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Se2Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

impl<S: Scalar> Quaternion<S> {
    pub fn new(w: S, x: S, y: S, z: S) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_array(a: [S; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [S; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Hamilton product `self · rhs`.
    pub fn mul(self, rhs: Self) -> Self {
        let (a, b) = (self, rhs);
        Self {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        }
    }

    pub fn conjugate(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn dot(self, rhs: Self) -> S {
        self.w * rhs.w + self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn norm(self) -> S {
        self.dot(self).sqrt()
    }

    pub fn normalize(self) -> Self {
        self.scale_inv(self.norm())
    }

    /// Normalization with the norm floored at `eps`, for raw network outputs
    /// that may be arbitrarily close to zero.
    pub fn normalize_guarded(self, eps: f64) -> Self {
        self.scale_inv(self.norm().max_const(eps))
    }

    fn scale_inv(self, n: S) -> Self {
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    /// Active rotation of `v` by this (unit) quaternion.
    pub fn rotate(self, v: [S; 3]) -> [S; 3] {
        let u = [self.x, self.y, self.z];
        // t = 2 u × v ; v' = v + w t + u × t
        let t = cross(u, v);
        let t = [t[0] * 2.0, t[1] * 2.0, t[2] * 2.0];
        let ut = cross(u, t);
        [
            v[0] + self.w * t[0] + ut[0],
            v[1] + self.w * t[1] + ut[1],
            v[2] + self.w * t[2] + ut[2],
        ]
    }

    /// Heading about the vertical axis, in radians.
    pub fn yaw(self) -> f64 {
        let (w, x, y, z) = (self.w.value(), self.x.value(), self.y.value(), self.z.value());
        (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z))
    }
}

impl Quaternion<f64> {
    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new(c, s * axis[0] / n, s * axis[1] / n, s * axis[2] / n)
    }

    pub fn from_yaw(yaw: f64) -> Self {
        let (s, c) = (0.5 * yaw).sin_cos();
        Self::new(c, 0.0, 0.0, s)
    }

    /// Same rotation with `w ≥ 0`.
    pub fn canonical(self) -> Self {
        if self.w < 0.0 || (self.w == 0.0 && (self.x, self.y, self.z) < (0.0, 0.0, 0.0)) {
            Self::new(-self.w, -self.x, -self.y, -self.z)
        } else {
            self
        }
    }

    pub fn lift<S: Scalar>(self, like: S) -> Quaternion<S> {
        Quaternion::new(like.lift(self.w), like.lift(self.x), like.lift(self.y), like.lift(self.z))
    }

    pub fn is_unit(self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }
}

/// Quaternionic distance `2·acos(|⟨a, b⟩|)` in radians, in `[0, π]`.
///
/// Invariant to the sign of either operand.
pub fn quat_dist<S: Scalar>(a: Quaternion<S>, b: Quaternion<S>) -> S {
    a.dot(b).abs().acos_unit() * 2.0
}

/// Weighted SE(3) distance: `λ_o‖o_a − o_b‖ + quat_dist(q_a, q_b)/π`.
///
/// The rotational term lies in `[0, 1]`. With `lambda_o == 0` the positional
/// term is omitted.
pub fn se_dist<S: Scalar>(a: &Pose<S>, b: &Pose<S>, lambda_o: f64) -> S {
    let rot = quat_dist(a.orientation, b.orientation) * (1.0 / PI);
    if lambda_o == 0.0 {
        return rot;
    }
    let d = [
        a.position[0] - b.position[0],
        a.position[1] - b.position[1],
        a.position[2] - b.position[2],
    ];
    let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    dist * lambda_o + rot
}

fn cross<S: Scalar>(a: [S; 3], b: [S; 3]) -> [S; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl<S: Scalar> Pose<S> {
    pub fn new(position: [S; 3], orientation: Quaternion<S>) -> Self {
        Self { position, orientation }
    }

    /// `self ⊕ rhs`. The resulting orientation is renormalized.
    pub fn compose(&self, rhs: &Pose<S>) -> Pose<S> {
        let r = self.orientation.rotate(rhs.position);
        Pose {
            position: [
                self.position[0] + r[0],
                self.position[1] + r[1],
                self.position[2] + r[2],
            ],
            orientation: self.orientation.mul(rhs.orientation).normalize(),
        }
    }

    /// `⊖self`.
    pub fn invert(&self) -> Pose<S> {
        let qi = self.orientation.conjugate();
        let r = qi.rotate(self.position);
        Pose { position: [-r[0], -r[1], -r[2]], orientation: qi }
    }

    /// `⊖self ⊕ other`: pose of `other` expressed in the frame of `self`.
    pub fn relative(&self, other: &Pose<S>) -> Pose<S> {
        self.invert().compose(other)
    }

    /// Builds a pose from a 7-vector `[x, y, z, qw, qx, qy, qz]`, normalizing
    /// the quaternion part with its norm floored at `eps`.
    pub fn from_output(out: &[S], eps: f64) -> Pose<S> {
        assert!(out.len() >= 7, "pose output needs 7 values, got {}", out.len());
        Pose {
            position: [out[0], out[1], out[2]],
            orientation: Quaternion::new(out[3], out[4], out[5], out[6]).normalize_guarded(eps),
        }
    }

    pub fn value(&self) -> Pose<f64> {
        Pose {
            position: self.position.map(|c| c.value()),
            orientation: Quaternion::new(
                self.orientation.w.value(),
                self.orientation.x.value(),
                self.orientation.y.value(),
                self.orientation.z.value(),
            ),
        }
    }
}

impl Pose<f64> {
    pub fn identity() -> Self {
        Self::new([0.0; 3], Quaternion::identity())
    }

    pub fn from_translation(p: [f64; 3]) -> Self {
        Self::new(p, Quaternion::identity())
    }

    pub fn lift<S: Scalar>(&self, like: S) -> Pose<S> {
        Pose {
            position: self.position.map(|c| like.lift(c)),
            orientation: self.orientation.lift(like),
        }
    }

    /// `[x, y, z, qw, qx, qy, qz]`.
    pub fn to_array(&self) -> [f64; 7] {
        let q = self.orientation;
        [self.position[0], self.position[1], self.position[2], q.w, q.x, q.y, q.z]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self::new([a[0], a[1], a[2]], Quaternion::new(a[3], a[4], a[5], a[6]))
    }

    pub fn position_distance(&self, other: &Pose<f64>) -> f64 {
        let d = [0, 1, 2].map(|i| self.position[i] - other.position[i]);
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    /// Planar projection (x, y, yaw).
    pub fn to_se2(&self) -> Se2Pose {
        Se2Pose::new(self.position[0], self.position[1], self.orientation.yaw())
    }

    /// Component-wise closeness, treating `q` and `-q` as equal.
    pub fn approx_eq(&self, other: &Pose<f64>, tol: f64) -> bool {
        let pos_ok = (0..3).all(|i| (self.position[i] - other.position[i]).abs() <= tol);
        let a = self.orientation.canonical().to_array();
        let b = other.orientation.canonical().to_array();
        pos_ok && a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }
}

impl Se2Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: wrap_angle(theta) }
    }

    pub fn identity() -> Self {
        Self { x: 0.0, y: 0.0, theta: 0.0 }
    }

    /// Embeds into SE(3): zero height, rotation about the vertical axis.
    pub fn lift(&self) -> Pose<f64> {
        Pose::new([self.x, self.y, 0.0], Quaternion::from_yaw(self.theta))
    }

    pub fn compose(&self, rhs: &Se2Pose) -> Se2Pose {
        let (s, c) = self.theta.sin_cos();
        Se2Pose::new(
            self.x + c * rhs.x - s * rhs.y,
            self.y + s * rhs.x + c * rhs.y,
            self.theta + rhs.theta,
        )
    }

    pub fn invert(&self) -> Se2Pose {
        let (s, c) = self.theta.sin_cos();
        Se2Pose::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)
    }

    pub fn relative(&self, other: &Se2Pose) -> Se2Pose {
        self.invert().compose(other)
    }

    /// Motion obtained by holding the body-frame twist `(dx, dy, dtheta)`
    /// constant over one unit of time.
    pub fn exp(dx: f64, dy: f64, dtheta: f64) -> Se2Pose {
        let (a, b) = se2_v_coeffs(dtheta);
        // V = [[a, -b], [b, a]]
        Se2Pose::new(a * dx - b * dy, b * dx + a * dy, dtheta)
    }

    /// Inverse of [`Se2Pose::exp`] for `|theta| < π`.
    pub fn log(&self) -> (f64, f64, f64) {
        let (a, b) = se2_v_coeffs(self.theta);
        let det = a * a + b * b;
        let dx = (a * self.x + b * self.y) / det;
        let dy = (-b * self.x + a * self.y) / det;
        (dx, dy, self.theta)
    }
}

/// `a = sin θ / θ`, `b = (1 − cos θ) / θ` with series expansions near zero.
fn se2_v_coeffs(theta: f64) -> (f64, f64) {
    if theta.abs() < 1e-6 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, theta / 2.0 - theta * t2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta)
    }
}
