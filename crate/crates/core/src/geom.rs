//! Camera models, rigid transforms, and projection primitives.
//!
//! Conventions used across the crate:
//!
//! - Poses are world-to-camera: `x_cam = R * x_world + t`.
//! - The camera frame is x-right, y-down, z-forward; depth is the
//!   camera-frame z coordinate, not the ray length.
//! - Pixels are continuous coordinates with pixel centers at integer
//!   positions; `(u, v)` maps to column `u`, row `v`.
//! - Rotations are stored as matrices; quaternions are accepted only at the
//!   parsing boundary and converted immediately.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("depth must be positive and finite, got {0}")]
    InvalidDepth(f64),
}

/// Pinhole camera intrinsics, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, GeomError> {
        if !(fx > 0.0 && fx.is_finite() && fy > 0.0 && fy.is_finite()) {
            return Err(GeomError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(GeomError::InvalidIntrinsics(format!(
                "image size must be nonzero, got {width}x{height}"
            )));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(GeomError::InvalidIntrinsics(format!(
                "principal point ({cx}, {cy}) outside {width}x{height} image"
            )));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }
}

/// 3D point in meters; world or camera frame by context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

// Small fixed-size vector helpers; enough linear algebra for this crate
// without pulling in a matrix library.

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    scale(a, 1.0 / n)
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn mul_vec(&self, v: [f64; 3]) -> [f64; 3] {
        [
            dot(self.0[0], v),
            dot(self.0[1], v),
            dot(self.0[2], v),
        ]
    }

    pub fn mul_mat(&self, other: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        Mat3(out)
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn row(&self, i: usize) -> [f64; 3] {
        self.0[i]
    }

    /// Rodrigues rotation about a unit axis.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Mat3 {
        let [ux, uy, uz] = normalize(axis);
        let (s, c) = angle.sin_cos();
        let ic = 1.0 - c;
        Mat3([
            [c + ux * ux * ic, ux * uy * ic - uz * s, ux * uz * ic + uy * s],
            [uy * ux * ic + uz * s, c + uy * uy * ic, uy * uz * ic - ux * s],
            [uz * ux * ic - uy * s, uz * uy * ic + ux * s, c + uz * uz * ic],
        ])
    }
}

const ORTHONORMALITY_TOL: f64 = 1e-9;

/// SE(3) world-to-camera transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Mat3,
    translation: [f64; 3],
}

impl Pose {
    pub fn identity() -> Self {
        Self { rotation: Mat3::IDENTITY, translation: [0.0; 3] }
    }

    /// Validates orthonormality and det(R) = 1 within 1e-9 per entry.
    pub fn from_rotation_translation(
        rotation: Mat3,
        translation: [f64; 3],
    ) -> Result<Self, GeomError> {
        let rtr = rotation.transpose().mul_mat(&rotation);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (rtr.0[i][j] - expected).abs() > ORTHONORMALITY_TOL {
                    return Err(GeomError::InvalidRotation(format!(
                        "R^T R deviates from identity at ({i},{j}) by {:e}",
                        (rtr.0[i][j] - expected).abs()
                    )));
                }
            }
        }
        if (rotation.det() - 1.0).abs() > ORTHONORMALITY_TOL {
            return Err(GeomError::InvalidRotation(format!(
                "det(R) = {} is not 1",
                rotation.det()
            )));
        }
        if translation.iter().any(|t| !t.is_finite()) {
            return Err(GeomError::InvalidRotation("translation not finite".into()));
        }
        Ok(Self { rotation, translation })
    }

    /// Exact-by-construction rotation; skips the orthonormality check.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64, translation: [f64; 3]) -> Self {
        Self { rotation: Mat3::from_axis_angle(axis, angle), translation }
    }

    /// Builds a pose from a `(w, x, y, z)` quaternion, renormalizing it.
    /// Fails only when the quaternion norm is too small to normalize;
    /// format-level tolerance bands are enforced by the caller.
    pub fn from_quaternion(q: [f64; 4], translation: [f64; 3]) -> Result<Self, GeomError> {
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        if !(n.is_finite() && n > 1e-6) {
            return Err(GeomError::InvalidRotation(format!(
                "quaternion norm {n} cannot be normalized"
            )));
        }
        let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
        let rotation = Mat3([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]);
        Ok(Self { rotation, translation })
    }

    /// `(w, x, y, z)` quaternion for this rotation, w >= 0.
    pub fn to_quaternion(&self) -> [f64; 4] {
        let m = &self.rotation.0;
        let trace = m[0][0] + m[1][1] + m[2][2];
        let q = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            [
                0.25 * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            ]
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            [
                (m[2][1] - m[1][2]) / s,
                0.25 * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            ]
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            [
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                0.25 * s,
                (m[1][2] + m[2][1]) / s,
            ]
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            [
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                0.25 * s,
            ]
        };
        if q[0] < 0.0 {
            [-q[0], -q[1], -q[2], -q[3]]
        } else {
            q
        }
    }

    /// Camera aimed from `center` at `target`, with `down_hint` giving the
    /// approximate world direction that should point down in the image.
    pub fn look_at(center: [f64; 3], target: [f64; 3], down_hint: [f64; 3]) -> Self {
        let z = normalize(sub(target, center));
        let x = normalize(cross(down_hint, z));
        let y = cross(z, x);
        let rotation = Mat3([x, y, z]);
        let translation = scale(rotation.mul_vec(center), -1.0);
        Self { rotation, translation }
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> [f64; 3] {
        self.translation
    }

    /// Camera center in world coordinates, C = -R^T t.
    pub fn center(&self) -> [f64; 3] {
        scale(self.rotation.transpose().mul_vec(self.translation), -1.0)
    }

    /// Camera z axis (viewing direction) in world coordinates.
    pub fn optical_axis(&self) -> [f64; 3] {
        self.rotation.row(2)
    }

    /// Camera y axis in world coordinates; points down in the image.
    pub fn screen_down(&self) -> [f64; 3] {
        self.rotation.row(1)
    }

    /// World to camera.
    pub fn transform(&self, p: Point3) -> Point3 {
        let v = add(self.rotation.mul_vec(p.to_array()), self.translation);
        Point3::from_array(v)
    }

    /// Camera to world.
    pub fn inverse_transform(&self, p: Point3) -> Point3 {
        let v = self
            .rotation
            .transpose()
            .mul_vec(sub(p.to_array(), self.translation));
        Point3::from_array(v)
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        let translation = scale(rt.mul_vec(self.translation), -1.0);
        Pose { rotation: rt, translation }
    }

    /// `self` applied after `other`: x -> self(other(x)).
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation.mul_mat(&other.rotation),
            translation: add(
                self.rotation.mul_vec(other.translation),
                self.translation,
            ),
        }
    }
}

/// Geodesic angle of the relative rotation between two poses, in radians.
pub fn rotation_angle(a: &Pose, b: &Pose) -> f64 {
    // acos near 1 is ill-conditioned; identical rotations must give 0.
    if a.rotation() == b.rotation() {
        return 0.0;
    }
    let rel = a.rotation().mul_mat(&b.rotation().transpose());
    let c = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos()
}

/// Minimum depth for a projection to count as in front of the camera.
pub const MIN_PROJECT_DEPTH: f64 = 1e-9;

/// Projects a world point through a pose and pinhole intrinsics.
///
/// Returns the continuous pixel and the camera-frame depth, or `None` when
/// the point is behind the camera (depth <= 1e-9).
pub fn project(point: Point3, pose: &Pose, k: &Intrinsics) -> Option<(Pixel, f64)> {
    let cam = pose.transform(point);
    if cam.z <= MIN_PROJECT_DEPTH {
        return None;
    }
    let u = k.fx * cam.x / cam.z + k.cx;
    let v = k.fy * cam.y / cam.z + k.cy;
    Some((Pixel::new(u, v), cam.z))
}

/// Lifts a pixel with known camera-frame depth back to a world point.
pub fn backproject(
    pixel: Pixel,
    depth: f64,
    pose: &Pose,
    k: &Intrinsics,
) -> Result<Point3, GeomError> {
    if !(depth.is_finite() && depth > 0.0) {
        return Err(GeomError::InvalidDepth(depth));
    }
    let cam = Point3::new(
        (pixel.u - k.cx) / k.fx * depth,
        (pixel.v - k.cy) / k.fy * depth,
        depth,
    );
    Ok(pose.inverse_transform(cam))
}

/// Pose distance: geodesic rotation angle plus camera-center distance
/// normalized by the scene scale.
///
/// d(a, b) = angle(R_a R_b^T) + |C_a - C_b| / scene_scale
pub fn pose_distance(a: &Pose, b: &Pose, scene_scale: f64) -> f64 {
    assert!(scene_scale > 0.0, "scene_scale must be positive");
    rotation_angle(a, b) + norm(sub(a.center(), b.center())) / scene_scale
}

/// Target poses on a horizontal arc about the look-at point.
///
/// The look-at point sits `center_depth` along the base optical axis. Poses
/// are placed at azimuth offsets around the vertical axis through that point
/// and re-aimed at it. Offsets are evenly spaced in
/// [-max_angle, +max_angle], excluding zero: even counts span both endpoints
/// (linspace over `count` points), odd counts use the spacing
/// 2*max_angle/count starting at -max_angle, which skips zero at the cost of
/// a half-step asymmetry.
pub fn orbit_targets(
    base: &Pose,
    _k: &Intrinsics,
    center_depth: f64,
    count: usize,
    max_angle: f64,
) -> Vec<Pose> {
    assert!(count >= 1, "orbit_targets needs count >= 1");
    assert!(center_depth > 0.0, "center_depth must be positive");
    assert!(
        max_angle > 0.0 && max_angle < std::f64::consts::PI,
        "max_angle must be in (0, pi)"
    );
    let center = base.center();
    let look_at = add(center, scale(base.optical_axis(), center_depth));
    let up = scale(base.screen_down(), -1.0);
    let arm = sub(center, look_at);

    let offsets: Vec<f64> = if count % 2 == 0 {
        (0..count)
            .map(|i| -max_angle + 2.0 * max_angle * i as f64 / (count - 1) as f64)
            .collect()
    } else {
        (0..count)
            .map(|i| -max_angle + 2.0 * max_angle * i as f64 / count as f64)
            .collect()
    };

    offsets
        .into_iter()
        .map(|phi| {
            let rotated = Mat3::from_axis_angle(up, phi).mul_vec(arm);
            let eye = add(look_at, rotated);
            Pose::look_at(eye, look_at, base.screen_down())
        })
        .collect()
}
