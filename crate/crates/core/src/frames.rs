//! Small vector/quaternion algebra and the simulation ↔ render frame mapping.
//!
//! All physics runs in [`FrameConvention::Sim`]: right-handed, Z-up,
//! X-forward. Poses only leave that frame through [`express`], which is the
//! single place the render-frame conversion is applied.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::FrameError;

/// 3-vector. Serialized as a `[x, y, z]` array in scene and metrics files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Vec3 { x: v, y: v, z: v }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` for (near-)zero input.
    pub fn try_normalize(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 1e-15 && n.is_finite()).then(|| self / n)
    }

    pub fn normalize(self) -> Vec3 {
        self.try_normalize().unwrap_or(Vec3::ZERO)
    }

    /// Componentwise product.
    pub fn hadamard(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Vec3 {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Vec3, t: f64) -> Vec3 {
        self + (o - self) * t
    }

    /// Any unit vector orthogonal to `self` (which must be non-zero).
    pub fn any_orthonormal(self) -> Vec3 {
        let helper = if self.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
        self.cross(helper).normalize()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Row-major 3×3 matrix, used for rotation matrices and world-frame
/// inverse mass / inertia tensors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub rows: [Vec3; 3],
}

impl Mat3 {
    pub const ZERO: Mat3 = Mat3 { rows: [Vec3::ZERO; 3] };
    pub const IDENTITY: Mat3 = Mat3 { rows: [Vec3::X, Vec3::Y, Vec3::Z] };

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Self {
        Mat3 { rows: [r0, r1, r2] }
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Mat3::from_rows(c0, c1, c2).transpose()
    }

    pub fn diagonal(d: Vec3) -> Self {
        Mat3::from_rows(
            Vec3::new(d.x, 0.0, 0.0),
            Vec3::new(0.0, d.y, 0.0),
            Vec3::new(0.0, 0.0, d.z),
        )
    }

    pub fn transpose(&self) -> Mat3 {
        let r = &self.rows;
        Mat3::from_rows(
            Vec3::new(r[0].x, r[1].x, r[2].x),
            Vec3::new(r[0].y, r[1].y, r[2].y),
            Vec3::new(r[0].z, r[1].z, r[2].z),
        )
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.rows[0].dot(v), self.rows[1].dot(v), self.rows[2].dot(v))
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let t = o.transpose();
        Mat3::from_rows(
            Vec3::new(self.rows[0].dot(t.rows[0]), self.rows[0].dot(t.rows[1]), self.rows[0].dot(t.rows[2])),
            Vec3::new(self.rows[1].dot(t.rows[0]), self.rows[1].dot(t.rows[1]), self.rows[1].dot(t.rows[2])),
            Vec3::new(self.rows[2].dot(t.rows[0]), self.rows[2].dot(t.rows[1]), self.rows[2].dot(t.rows[2])),
        )
    }

    pub fn add(&self, o: &Mat3) -> Mat3 {
        Mat3::from_rows(self.rows[0] + o.rows[0], self.rows[1] + o.rows[1], self.rows[2] + o.rows[2])
    }

    pub fn determinant(&self) -> f64 {
        self.rows[0].dot(self.rows[1].cross(self.rows[2]))
    }

    /// `R · diag(d) · Rᵀ`, the world-frame form of a body-frame diagonal tensor.
    pub fn rotated_diagonal(rot: &Mat3, d: Vec3) -> Mat3 {
        rot.mul_mat(&Mat3::diagonal(d)).mul_mat(&rot.transpose())
    }

    /// `[a]ₓ`, the cross-product matrix of `a`.
    pub fn skew(a: Vec3) -> Mat3 {
        Mat3::from_rows(
            Vec3::new(0.0, -a.z, a.y),
            Vec3::new(a.z, 0.0, -a.x),
            Vec3::new(-a.y, a.x, 0.0),
        )
    }
}

/// Unit quaternion, stored `(w, x, y, z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitQuat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for UnitQuat {
    fn default() -> Self {
        UnitQuat::IDENTITY
    }
}

pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

impl UnitQuat {
    pub const IDENTITY: UnitQuat = UnitQuat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Normalizes arbitrary components. Fails on zero or non-finite input.
    pub fn new_normalize(w: f64, x: f64, y: f64, z: f64) -> Result<Self, FrameError> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-15 {
            return Err(FrameError::NonFinite("quaternion"));
        }
        Ok(UnitQuat { w: w / n, x: x / n, y: y / n, z: z / n })
    }

    /// Accepts components that are already unit-norm within tolerance.
    pub fn from_unit(w: f64, x: f64, y: f64, z: f64) -> Result<Self, FrameError> {
        let q = UnitQuat { w, x, y, z };
        q.validate()?;
        Ok(q)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        let n = self.norm();
        if !n.is_finite() {
            return Err(FrameError::NonFinite("quaternion"));
        }
        if (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(FrameError::NotUnit(n));
        }
        Ok(())
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let Some(a) = axis.try_normalize() else {
            return UnitQuat::IDENTITY;
        };
        let (s, c) = (angle * 0.5).sin_cos();
        UnitQuat { w: c, x: a.x * s, y: a.y * s, z: a.z * s }
    }

    /// Exponential map of a rotation vector (axis × angle).
    pub fn from_rotation_vector(v: Vec3) -> Self {
        let angle = v.norm();
        if angle < 1e-12 {
            // first-order; keeps tiny rotations well-conditioned
            return UnitQuat { w: 1.0, x: v.x * 0.5, y: v.y * 0.5, z: v.z * 0.5 }.renormalized();
        }
        UnitQuat::from_axis_angle(v / angle, angle)
    }

    /// Rotation vector (axis × angle) with angle in `[0, π]`.
    pub fn to_rotation_vector(&self) -> Vec3 {
        let q = if self.w < 0.0 { -*self } else { *self };
        let v = Vec3::new(q.x, q.y, q.z);
        let s = v.norm();
        if s < 1e-12 {
            return v * 2.0;
        }
        let angle = 2.0 * s.atan2(q.w);
        v * (angle / s)
    }

    pub fn renormalized(self) -> Self {
        let n = self.norm();
        UnitQuat { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn conjugate(&self) -> Self {
        UnitQuat { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    pub fn to_matrix(&self) -> Mat3 {
        let UnitQuat { w, x, y, z } = *self;
        Mat3::from_rows(
            Vec3::new(1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)),
            Vec3::new(2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)),
            Vec3::new(2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)),
        )
    }

    /// `self ∘ o`: apply `o` first, then `self`.
    pub fn mul_quat(&self, o: &UnitQuat) -> UnitQuat {
        UnitQuat {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn dot(&self, o: &UnitQuat) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Rotation angle between two orientations, in `[0, π]`.
    pub fn angle_to(&self, o: &UnitQuat) -> f64 {
        2.0 * self.dot(o).abs().min(1.0).acos()
    }

    pub fn slerp(&self, o: &UnitQuat, t: f64) -> UnitQuat {
        let mut other = *o;
        let mut d = self.dot(o);
        if d < 0.0 {
            other = -other;
            d = -d;
        }
        if d > 1.0 - 1e-12 {
            return UnitQuat {
                w: self.w + (other.w - self.w) * t,
                x: self.x + (other.x - self.x) * t,
                y: self.y + (other.y - self.y) * t,
                z: self.z + (other.z - self.z) * t,
            }
            .renormalized();
        }
        let theta = d.acos();
        let s = theta.sin();
        let a = ((1.0 - t) * theta).sin() / s;
        let b = (t * theta).sin() / s;
        UnitQuat {
            w: a * self.w + b * other.w,
            x: a * self.x + b * other.x,
            y: a * self.y + b * other.y,
            z: a * self.z + b * other.z,
        }
        .renormalized()
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Neg for UnitQuat {
    type Output = UnitQuat;
    fn neg(self) -> UnitQuat {
        UnitQuat { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
    }
}

impl Mul for UnitQuat {
    type Output = UnitQuat;
    fn mul(self, o: UnitQuat) -> UnitQuat {
        self.mul_quat(&o)
    }
}

/// Rigid transform. Maps body-frame points into the parent frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    #[serde(default)]
    pub orientation: UnitQuat,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { position: Vec3::ZERO, orientation: UnitQuat::IDENTITY };

    pub fn new(position: Vec3, orientation: UnitQuat) -> Self {
        Pose { position, orientation }
    }

    pub fn from_position(position: Vec3) -> Self {
        Pose { position, orientation: UnitQuat::IDENTITY }
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.position + self.orientation.rotate(p)
    }

    pub fn transform_vector(&self, v: Vec3) -> Vec3 {
        self.orientation.rotate(v)
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.conjugate();
        Pose { position: -inv.rotate(self.position), orientation: inv }
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if !self.position.is_finite() {
            return Err(FrameError::NonFinite("position"));
        }
        self.orientation.validate()
    }
}

/// `a ∘ b`: the pose `b` expressed in `a`'s parent frame.
pub fn pose_compose(a: &Pose, b: &Pose) -> Result<Pose, FrameError> {
    a.orientation.validate()?;
    b.orientation.validate()?;
    Ok(compose_unchecked(a, b))
}

pub(crate) fn compose_unchecked(a: &Pose, b: &Pose) -> Pose {
    Pose {
        position: a.transform_point(b.position),
        orientation: a.orientation.mul_quat(&b.orientation).renormalized(),
    }
}

/// The two coordinate conventions that exist in the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameConvention {
    /// Right-handed, Z-up, X-forward. Internal physics frame.
    Sim,
    /// Left-handed, Y-up, Z-forward. Renderer-style frame used on the wire.
    Render,
}

impl FrameConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameConvention::Sim => "sim",
            FrameConvention::Render => "render",
        }
    }
}

/// A pose together with the frame it is expressed in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaggedPose {
    pub frame: FrameConvention,
    pub pose: Pose,
}

// (x, y, z)_sim -> (-y, z, x)_render. det = -1 (handedness flip).
fn map_axes(p: Vec3) -> Vec3 {
    Vec3::new(-p.y, p.z, p.x)
}

fn unmap_axes(p: Vec3) -> Vec3 {
    Vec3::new(p.z, -p.x, p.y)
}

fn check_finite(v: Vec3) -> Result<(), FrameError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(FrameError::NonFinite("vector"))
    }
}

pub fn sim_to_render_position(p: Vec3) -> Result<Vec3, FrameError> {
    check_finite(p)?;
    Ok(map_axes(p))
}

pub fn render_to_sim_position(p: Vec3) -> Result<Vec3, FrameError> {
    check_finite(p)?;
    Ok(unmap_axes(p))
}

/// Axial vectors (angular velocity, torque) pick up the determinant sign of
/// the axis map.
pub fn sim_to_render_axial(w: Vec3) -> Result<Vec3, FrameError> {
    check_finite(w)?;
    Ok(-map_axes(w))
}

pub fn render_to_sim_axial(w: Vec3) -> Result<Vec3, FrameError> {
    check_finite(w)?;
    Ok(unmap_axes(-w))
}

/// Conjugates the rotation by the axis map: `R' = M R Mᵀ`.
pub fn sim_to_render_orientation(q: UnitQuat) -> Result<UnitQuat, FrameError> {
    q.validate()?;
    let v = -map_axes(Vec3::new(q.x, q.y, q.z));
    Ok(UnitQuat { w: q.w, x: v.x, y: v.y, z: v.z })
}

pub fn render_to_sim_orientation(q: UnitQuat) -> Result<UnitQuat, FrameError> {
    q.validate()?;
    let v = unmap_axes(-Vec3::new(q.x, q.y, q.z));
    Ok(UnitQuat { w: q.w, x: v.x, y: v.y, z: v.z })
}

/// Expresses a simulation-frame pose in the requested convention. This is
/// the only conversion path used for anything that leaves the process.
pub fn express(pose: &Pose, frame: FrameConvention) -> Result<TaggedPose, FrameError> {
    let pose = match frame {
        FrameConvention::Sim => {
            pose.validate()?;
            *pose
        }
        FrameConvention::Render => Pose {
            position: sim_to_render_position(pose.position)?,
            orientation: sim_to_render_orientation(pose.orientation)?,
        },
    };
    Ok(TaggedPose { frame, pose })
}

/// Expresses a simulation-frame direction or position in the requested
/// convention.
pub fn express_vector(v: Vec3, frame: FrameConvention) -> Result<Vec3, FrameError> {
    match frame {
        FrameConvention::Sim => {
            check_finite(v)?;
            Ok(v)
        }
        FrameConvention::Render => sim_to_render_position(v),
    }
}

pub fn express_axial(v: Vec3, frame: FrameConvention) -> Result<Vec3, FrameError> {
    match frame {
        FrameConvention::Sim => {
            check_finite(v)?;
            Ok(v)
        }
        FrameConvention::Render => sim_to_render_axial(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn approx_vec(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn arb_vec() -> impl Strategy<Value = Vec3> {
        (-100.0..100.0f64, -100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn arb_quat() -> impl Strategy<Value = UnitQuat> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("non-degenerate", |(w, x, y, z)| w * w + x * x + y * y + z * z > 1e-3)
            .prop_map(|(w, x, y, z)| UnitQuat::new_normalize(w, x, y, z).unwrap())
    }

    #[test]
    fn origin_is_fixed() {
        assert_eq!(sim_to_render_position(Vec3::ZERO).unwrap(), Vec3::ZERO);
    }

    #[test]
    fn sim_forward_maps_to_render_forward() {
        assert_eq!(sim_to_render_position(Vec3::X).unwrap(), Vec3::Z);
    }

    #[test]
    fn axis_map_flips_handedness() {
        // Images of the sim basis form a left-handed triple.
        let ex = sim_to_render_position(Vec3::X).unwrap();
        let ey = sim_to_render_position(Vec3::Y).unwrap();
        let ez = sim_to_render_position(Vec3::Z).unwrap();
        assert_eq!(ex.cross(ey), -ez);
        let m = Mat3::from_cols(ex, ey, ez);
        assert_eq!(m.determinant(), -1.0);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(sim_to_render_position(Vec3::new(f64::NAN, 0.0, 0.0)).is_err());
        assert!(sim_to_render_position(Vec3::new(0.0, f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn non_unit_quat_rejected() {
        let q = UnitQuat { w: 2.0, x: 0.0, y: 0.0, z: 0.0 };
        assert!(matches!(sim_to_render_orientation(q), Err(FrameError::NotUnit(_))));
    }

    #[test]
    fn identity_orientation_maps_to_identity() {
        assert_eq!(sim_to_render_orientation(UnitQuat::IDENTITY).unwrap(), UnitQuat::IDENTITY);
    }

    #[test]
    fn yaw_quarter_turn_maps_by_commuting_square() {
        let q = UnitQuat::from_axis_angle(Vec3::Z, FRAC_PI_2);
        let r = sim_to_render_orientation(q).unwrap();
        // Oracle: where the converted rotation must send each render basis vector.
        for e in [Vec3::X, Vec3::Y, Vec3::Z] {
            let expected = sim_to_render_position(q.rotate(e)).unwrap();
            let got = r.rotate(sim_to_render_position(e).unwrap());
            assert!(approx_vec(expected, got, 1e-12), "{e}: {expected} vs {got}");
        }
        // The result is a quarter turn about the render vertical axis.
        let rv = r.to_rotation_vector();
        assert!((rv.norm() - FRAC_PI_2).abs() < 1e-12);
        assert!(rv.x.abs() < 1e-12 && rv.z.abs() < 1e-12);
        assert!(approx_vec(sim_to_render_position(Vec3::X).unwrap(), Vec3::Z, 0.0));
        // Sim forward (render +Z) turns to sim left (render -X).
        assert!(approx_vec(r.rotate(Vec3::Z), -Vec3::X, 1e-12));
    }

    #[test]
    fn compose_identity_and_inverse() {
        let p = Pose::new(Vec3::new(1.0, -2.0, 0.5), UnitQuat::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 0.7));
        let a = pose_compose(&Pose::IDENTITY, &p).unwrap();
        assert!(approx_vec(a.position, p.position, 1e-15));
        assert!(a.orientation.angle_to(&p.orientation) < 1e-9);
        let id = pose_compose(&p, &p.inverse()).unwrap();
        assert!(id.position.norm() < 1e-9);
        assert!(id.orientation.angle_to(&UnitQuat::IDENTITY) < 1e-9);
    }

    #[test]
    fn compose_translations_add() {
        let a = Pose::from_position(Vec3::new(1.0, 2.0, 3.0));
        let b = Pose::from_position(Vec3::new(-0.5, 0.25, 4.0));
        let c = pose_compose(&a, &b).unwrap();
        assert_eq!(c.position, Vec3::new(0.5, 2.25, 7.0));
    }

    #[test]
    fn render_roundtrip_hundred_vectors() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = Vec3::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
            let back = render_to_sim_position(sim_to_render_position(p).unwrap()).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn commuting_square_hundred_quats() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let q = UnitQuat::new_normalize(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .unwrap();
            let r = sim_to_render_orientation(q).unwrap();
            for e in [Vec3::X, Vec3::Y, Vec3::Z] {
                let lhs = sim_to_render_position(q.rotate(e)).unwrap();
                let rhs = r.rotate(sim_to_render_position(e).unwrap());
                assert!(approx_vec(lhs, rhs, 1e-9));
            }
            let back = render_to_sim_orientation(r).unwrap();
            assert!((back.w - q.w).abs() < 1e-9 && (back.x - q.x).abs() < 1e-9);
            assert!((back.y - q.y).abs() < 1e-9 && (back.z - q.z).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn conversion_is_isometry(a in arb_vec(), b in arb_vec()) {
            let ra = sim_to_render_position(a).unwrap();
            let rb = sim_to_render_position(b).unwrap();
            prop_assert!((ra.norm() - a.norm()).abs() <= 1e-12 * (1.0 + a.norm()));
            prop_assert!((ra.dot(rb) - a.dot(b)).abs() <= 1e-9 * (1.0 + a.norm() * b.norm()));
        }

        #[test]
        fn axial_vectors_follow_rotations(q in arb_quat(), w in arb_vec()) {
            // Rotating an angular velocity then converting equals converting both.
            let lhs = sim_to_render_axial(q.rotate(w)).unwrap();
            let rhs = sim_to_render_orientation(q).unwrap().rotate(sim_to_render_axial(w).unwrap());
            prop_assert!(approx_vec(lhs, rhs, 1e-9 * (1.0 + w.norm())));
        }

        #[test]
        fn compose_is_associative(qa in arb_quat(), qb in arb_quat(), qc in arb_quat(),
                                  pa in arb_vec(), pb in arb_vec(), pc in arb_vec()) {
            let (a, b, c) = (Pose::new(pa, qa), Pose::new(pb, qb), Pose::new(pc, qc));
            let l = pose_compose(&pose_compose(&a, &b).unwrap(), &c).unwrap();
            let r = pose_compose(&a, &pose_compose(&b, &c).unwrap()).unwrap();
            prop_assert!(approx_vec(l.position, r.position, 1e-9));
            prop_assert!(l.orientation.angle_to(&r.orientation) < 1e-7);
        }
    }
}
