//! SE(3) pose algebra, the pinhole camera model, subdivision timing, and
//! object ROI placement.
//!
//! Rotations are stored as matrices; quaternions appear only inside
//! interpolation. Timestamps stay in integer microseconds so long sequences
//! cannot drift.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `R^T R = I` and `det R = 1` for a valid rotation.
pub const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("rotation is not orthonormal (max |R^T R - I| = {0:.3e})")]
    NotOrthonormal(f64),
    #[error("rotation determinant {0:.6} is not +1")]
    ImproperRotation(f64),
    #[error("point behind the camera (z = {0:.6})")]
    BehindCamera(f64),
    #[error("depth {0} must be positive")]
    InvalidDepth(f64),
    #[error("focal lengths must be positive (fx = {0}, fy = {1})")]
    BadFocal(f64, f64),
    #[error("principal point ({0:.1}, {1:.1}) outside {2}x{3} image")]
    BadPrincipalPoint(f64, f64, u32, u32),
    #[error("subdivision index {k} out of range, expected k < {n}")]
    SubdivisionOutOfRange { k: u32, n: u32 },
    #[error("timing model needs a positive period and at least one subdivision")]
    BadTiming,
    #[error("interpolation fraction {0} outside [0, 1]")]
    BadFraction(f64),
}

/// Rigid transform `[R | t]`: rotation matrix plus translation in meters.
///
/// Also used for incremental deltas between timestamps. On disk a pose is
/// always the 12 fields of [`Pose::to_fields`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    r: Mat3,
    t: Vec3,
}

fn orthonormality_residual(r: &Mat3) -> f64 {
    let e = r.transpose() * r - Mat3::identity();
    e.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            r: Mat3::identity(),
            t: Vec3::zeros(),
        }
    }

    /// Validates the rotation invariants before accepting the parts.
    pub fn new(r: Mat3, t: Vec3) -> Result<Self, GeometryError> {
        let residual = orthonormality_residual(&r);
        if residual > ROTATION_TOL {
            return Err(GeometryError::NotOrthonormal(residual));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(GeometryError::ImproperRotation(det));
        }
        Ok(Self { r, t })
    }

    /// Projects an approximate rotation onto SO(3) via SVD; reflections are
    /// rejected rather than repaired.
    pub fn orthonormalize(r: Mat3, t: Vec3) -> Result<Self, GeometryError> {
        if r.determinant() < 0.0 {
            return Err(GeometryError::ImproperRotation(r.determinant()));
        }
        let svd = r.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r_proj = u * v_t;
        if r_proj.determinant() < 0.0 {
            let mut u_fix = u;
            u_fix.column_mut(2).neg_mut();
            r_proj = u_fix * v_t;
        }
        Pose::new(r_proj, t)
    }

    /// Rotation about `axis` by `angle` radians plus translation.
    pub fn from_axis_angle(axis: &Vec3, angle: f64, t: Vec3) -> Self {
        let r = UnitQuaternion::from_scaled_axis(axis.normalize() * angle)
            .to_rotation_matrix()
            .into_inner();
        Self { r, t }
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.r
    }

    pub fn translation(&self) -> &Vec3 {
        &self.t
    }

    /// Group composition `self . other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            r: self.r * other.r,
            t: self.r * other.t + self.t,
        }
    }

    pub fn inverse(&self) -> Pose {
        let r_inv = self.r.transpose();
        Pose {
            r: r_inv,
            t: -(r_inv * self.t),
        }
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.r * p + self.t
    }

    /// Decoupled update: `R+ = dR R`, `t+ = t + dt`. The translation delta is
    /// added directly, not rotated.
    pub fn update_decoupled(&self, delta: &Pose) -> Pose {
        Pose {
            r: delta.r * self.r,
            t: self.t + delta.t,
        }
    }

    /// Screw interpolation: slerp on the relative rotation, lerp on the
    /// translation. `s = 0` gives `self`, `s = 1` gives `other`.
    pub fn interpolate(&self, other: &Pose, s: f64) -> Result<Pose, GeometryError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(GeometryError::BadFraction(s));
        }
        if s == 0.0 {
            return Ok(*self);
        }
        if s == 1.0 {
            return Ok(*other);
        }
        let q_a = UnitQuaternion::from_matrix(&self.r);
        let q_b = UnitQuaternion::from_matrix(&other.r);
        let q_rel = q_b * q_a.inverse();
        let q_s = UnitQuaternion::identity()
            .try_slerp(&q_rel, s, 1e-12)
            .unwrap_or(q_rel);
        let r = q_s.to_rotation_matrix().into_inner() * self.r;
        let t = self.t.lerp(&other.t, s);
        Pose::orthonormalize(r, t)
    }

    /// Geodesic rotation distance in radians.
    pub fn rotation_angle_to(&self, other: &Pose) -> f64 {
        let r_rel = self.r.transpose() * other.r;
        let c = ((r_rel.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        c.acos()
    }

    pub fn translation_distance_to(&self, other: &Pose) -> f64 {
        (self.t - other.t).norm()
    }

    /// Re-projects the rotation onto SO(3); call after long update chains.
    pub fn renormalized(&self) -> Pose {
        Pose::orthonormalize(self.r, self.t).expect("rotation drifted past a reflection")
    }

    /// Row-major 3x3 rotation followed by translation, 12 fields.
    pub fn to_fields(&self) -> [f64; 12] {
        let r = &self.r;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            self.t.x,
            self.t.y,
            self.t.z,
        ]
    }

    /// Inverse of [`Pose::to_fields`]. Rotations already within tolerance
    /// pass through bit-exactly; drifted ones are re-orthonormalized and
    /// reflections rejected.
    pub fn from_fields(f: &[f64; 12]) -> Result<Pose, GeometryError> {
        let r = Mat3::new(f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8]);
        let t = Vec3::new(f[9], f[10], f[11]);
        Pose::new(r, t).or_else(|_| Pose::orthonormalize(r, t))
    }
}

/// Pinhole camera model in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        if fx <= 0.0 || fy <= 0.0 {
            return Err(GeometryError::BadFocal(fx, fy));
        }
        if cx < 0.0 || cx >= width as f64 || cy < 0.0 || cy >= height as f64 {
            return Err(GeometryError::BadPrincipalPoint(cx, cy, width, height));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// Perspective projection of a camera-frame point to pixels.
    #[inline]
    pub fn project(&self, p: &Vec3) -> Result<(f64, f64), GeometryError> {
        if p.z <= 0.0 {
            return Err(GeometryError::BehindCamera(p.z));
        }
        Ok((
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    /// `d * K^-1 * (u, v, 1)^T` for depth `d` in meters.
    #[inline]
    pub fn backproject(&self, u: f64, v: f64, d: f64) -> Result<Vec3, GeometryError> {
        if d <= 0.0 {
            return Err(GeometryError::InvalidDepth(d));
        }
        Ok(Vec3::new(
            d * (u - self.cx) / self.fx,
            d * (v - self.cy) / self.fy,
            d,
        ))
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }
}

/// Shared clock tying depth frames to the higher-rate pose updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingModel {
    /// Depth frame interval in microseconds.
    pub depth_period_us: i64,
    /// Pose updates per depth interval.
    pub subdivisions: u32,
    /// Timestamp of normalized time zero.
    pub epoch_us: i64,
}

impl TimingModel {
    pub fn new(depth_period_us: i64, subdivisions: u32, epoch_us: i64) -> Result<Self, GeometryError> {
        if depth_period_us <= 0 || subdivisions == 0 {
            return Err(GeometryError::BadTiming);
        }
        Ok(Self {
            depth_period_us,
            subdivisions,
            epoch_us,
        })
    }

    /// Timestamp of subdivision `k` inside depth interval `frame_index`,
    /// with integer flooring: `epoch + frame * period + k * period / N`.
    pub fn timestamp(&self, frame_index: i64, k: u32) -> Result<i64, GeometryError> {
        if k >= self.subdivisions {
            return Err(GeometryError::SubdivisionOutOfRange {
                k,
                n: self.subdivisions,
            });
        }
        Ok(self.epoch_us
            + frame_index * self.depth_period_us
            + (k as i64 * self.depth_period_us) / self.subdivisions as i64)
    }

    pub fn depth_timestamp(&self, frame_index: i64) -> i64 {
        self.epoch_us + frame_index * self.depth_period_us
    }
}

/// Square, axis-aligned region of interest around the projected object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roi {
    /// Projection of the object origin, in pixels.
    pub center: (f64, f64),
    /// Side length in pixels.
    pub size: f64,
}

impl Roi {
    /// Integer crop rectangle `(x0, y0, w, h)` clamped to the image,
    /// rounding the fractional center to the nearest pixel.
    pub fn rect(&self, width: u32, height: u32) -> (usize, usize, usize, usize) {
        let size = self.size.round().max(1.0) as i64;
        let size = size.min(width as i64).min(height as i64);
        let cx = self.center.0.round() as i64;
        let cy = self.center.1.round() as i64;
        let x0 = (cx - size / 2).clamp(0, width as i64 - size);
        let y0 = (cy - size / 2).clamp(0, height as i64 - size);
        (x0 as usize, y0 as usize, size as usize, size as usize)
    }
}

/// Default padding factor applied to the projected object diameter.
pub const DEFAULT_ROI_PADDING: f64 = 1.5;

/// Centers a square ROI at the projected object origin; the side length is
/// `padding * fx * diameter / z`, clamped to the image bounds.
pub fn compute_roi(
    k: &Intrinsics,
    pose: &Pose,
    diameter: f64,
    padding: f64,
) -> Result<Roi, GeometryError> {
    let center = k.project(pose.translation())?;
    let z = pose.translation().z;
    let size = (padding * k.fx * diameter / z)
        .min(k.width as f64)
        .min(k.height as f64)
        .max(1.0);
    Ok(Roi { center, size })
}
