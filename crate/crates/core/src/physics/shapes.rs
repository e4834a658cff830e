//! Analytic collider primitives and their narrow-phase tests.
//!
//! Every test returns a single deepest-point contact with the normal pointing
//! from the first shape to the second. The reported point is the midpoint of
//! the two surface witness points.

use serde::{Deserialize, Serialize};

use crate::error::PhysicsError;
use crate::frames::{Pose, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ColliderShape {
    Sphere { radius: f64 },
    /// Segment of length `2 * half_length` along the local Z axis, swept by `radius`.
    Capsule { half_length: f64, radius: f64 },
    Box { half_extents: Vec3 },
    /// Solid region `normal · x <= offset` (local frame).
    HalfSpace { normal: Vec3, offset: f64 },
}

impl ColliderShape {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ColliderShape::Sphere { .. } => "sphere",
            ColliderShape::Capsule { .. } => "capsule",
            ColliderShape::Box { .. } => "box",
            ColliderShape::HalfSpace { .. } => "half_space",
        }
    }

    fn rank(&self) -> u8 {
        match self {
            ColliderShape::Sphere { .. } => 0,
            ColliderShape::Capsule { .. } => 1,
            ColliderShape::Box { .. } => 2,
            ColliderShape::HalfSpace { .. } => 3,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        match self {
            ColliderShape::Sphere { radius } if !pos(*radius) => Err(format!("sphere radius must be > 0, got {radius}")),
            ColliderShape::Capsule { half_length, radius } if !(pos(*radius) && *half_length >= 0.0 && half_length.is_finite()) => {
                Err(format!("capsule needs radius > 0 and half_length >= 0, got {radius}, {half_length}"))
            }
            ColliderShape::Box { half_extents: h } if !(pos(h.x) && pos(h.y) && pos(h.z)) => {
                Err(format!("box half_extents must be > 0, got {h}"))
            }
            ColliderShape::HalfSpace { normal, offset } => {
                if !offset.is_finite() || normal.try_normalize().is_none() {
                    return Err("half_space needs a non-zero normal and finite offset".into());
                }
                if (normal.norm() - 1.0).abs() > 1e-9 {
                    return Err(format!("half_space normal must be unit length, got |n| = {}", normal.norm()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Radius of a sphere about the body origin enclosing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            ColliderShape::Sphere { radius } => *radius,
            ColliderShape::Capsule { half_length, radius } => half_length + radius,
            ColliderShape::Box { half_extents } => half_extents.norm(),
            ColliderShape::HalfSpace { .. } => f64::INFINITY,
        }
    }

    /// Signed distance from `point` to the shape surface (negative inside).
    pub fn signed_distance(&self, pose: &Pose, point: Vec3) -> f64 {
        match self {
            ColliderShape::Sphere { radius } => point.distance(pose.position) - radius,
            ColliderShape::Capsule { half_length, radius } => {
                let (a, b) = capsule_segment(pose, *half_length);
                point.distance(closest_on_segment(point, a, b)) - radius
            }
            ColliderShape::Box { half_extents } => {
                let local = pose.orientation.conjugate().rotate(point - pose.position);
                box_sdf_local(local, *half_extents)
            }
            ColliderShape::HalfSpace { normal, offset } => {
                let (n, off) = world_plane(pose, *normal, *offset);
                n.dot(point) - off
            }
        }
    }

    /// Volume of the shape (infinite for a half-space).
    pub fn volume(&self) -> f64 {
        use std::f64::consts::PI;
        match self {
            ColliderShape::Sphere { radius } => 4.0 / 3.0 * PI * radius.powi(3),
            ColliderShape::Capsule { half_length, radius } => {
                PI * radius * radius * (2.0 * half_length) + 4.0 / 3.0 * PI * radius.powi(3)
            }
            ColliderShape::Box { half_extents: h } => 8.0 * h.x * h.y * h.z,
            ColliderShape::HalfSpace { .. } => f64::INFINITY,
        }
    }

    /// Principal moments of inertia for a solid of uniform density.
    pub fn solid_inertia(&self, mass: f64) -> Vec3 {
        match self {
            ColliderShape::Sphere { radius } => Vec3::splat(0.4 * mass * radius * radius),
            ColliderShape::Capsule { half_length, radius } => {
                // cylinder approximation over the full length
                let len = 2.0 * (half_length + radius);
                let axial = 0.5 * mass * radius * radius;
                let transverse = mass * (3.0 * radius * radius + len * len) / 12.0;
                Vec3::new(transverse, transverse, axial)
            }
            ColliderShape::Box { half_extents: h } => {
                let (x2, y2, z2) = (4.0 * h.x * h.x, 4.0 * h.y * h.y, 4.0 * h.z * h.z);
                Vec3::new(mass * (y2 + z2) / 12.0, mass * (x2 + z2) / 12.0, mass * (x2 + y2) / 12.0)
            }
            ColliderShape::HalfSpace { .. } => Vec3::ZERO,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactGeometry {
    pub point: Vec3,
    /// Unit normal from the first shape toward the second.
    pub normal: Vec3,
    pub penetration: f64,
}

impl ContactGeometry {
    fn flipped(self) -> Self {
        ContactGeometry { normal: -self.normal, ..self }
    }
}

/// Narrow-phase test between two posed shapes.
pub fn collide(
    a: &ColliderShape,
    pose_a: &Pose,
    b: &ColliderShape,
    pose_b: &Pose,
) -> Result<Option<ContactGeometry>, PhysicsError> {
    if a.rank() > b.rank() {
        return Ok(collide(b, pose_b, a, pose_a)?.map(ContactGeometry::flipped));
    }
    use ColliderShape as S;
    let hit = match (a, b) {
        (S::Sphere { radius: ra }, S::Sphere { radius: rb }) => sphere_sphere(pose_a.position, *ra, pose_b.position, *rb),
        (S::Sphere { radius }, S::Capsule { half_length, radius: rc }) => {
            let (p, q) = capsule_segment(pose_b, *half_length);
            let c = closest_on_segment(pose_a.position, p, q);
            sphere_sphere(pose_a.position, *radius, c, *rc)
        }
        (S::Sphere { radius }, S::Box { half_extents }) => sphere_box(pose_a.position, *radius, pose_b, *half_extents),
        (S::Sphere { radius }, S::HalfSpace { normal, offset }) => {
            let (n, off) = world_plane(pose_b, *normal, *offset);
            sphere_plane(pose_a.position, *radius, n, off)
        }
        (S::Capsule { half_length: ha, radius: ra }, S::Capsule { half_length: hb, radius: rb }) => {
            let (p1, q1) = capsule_segment(pose_a, *ha);
            let (p2, q2) = capsule_segment(pose_b, *hb);
            let (c1, c2) = closest_between_segments(p1, q1, p2, q2);
            sphere_sphere(c1, *ra, c2, *rb)
        }
        (S::Capsule { half_length, radius }, S::Box { half_extents }) => {
            let (p, q) = capsule_segment(pose_a, *half_length);
            let inv = pose_b.orientation.conjugate();
            let to_local = |x: Vec3| inv.rotate(x - pose_b.position);
            let (pl, ql) = (to_local(p), to_local(q));
            let t = golden_section_min(|t| box_sdf_local(pl.lerp(ql, t), *half_extents));
            sphere_box(p.lerp(q, t), *radius, pose_b, *half_extents)
        }
        (S::Capsule { half_length, radius }, S::HalfSpace { normal, offset }) => {
            let (p, q) = capsule_segment(pose_a, *half_length);
            let (n, off) = world_plane(pose_b, *normal, *offset);
            deepest_points_plane(&[p, q], *radius, n, off)
        }
        (S::Box { half_extents: ha }, S::Box { half_extents: hb }) => box_box(pose_a, *ha, pose_b, *hb),
        (S::Box { half_extents }, S::HalfSpace { normal, offset }) => {
            let (n, off) = world_plane(pose_b, *normal, *offset);
            deepest_points_plane(&box_vertices(pose_a, *half_extents), 0.0, n, off)
        }
        (S::HalfSpace { .. }, S::HalfSpace { .. }) => {
            return Err(PhysicsError::UnsupportedPair(a.kind_name(), b.kind_name()));
        }
        _ => unreachable!("pair ordered by rank"),
    };
    Ok(hit)
}

fn world_plane(pose: &Pose, normal: Vec3, offset: f64) -> (Vec3, f64) {
    let n = pose.orientation.rotate(normal);
    (n, offset + n.dot(pose.position))
}

fn capsule_segment(pose: &Pose, half_length: f64) -> (Vec3, Vec3) {
    let axis = pose.orientation.rotate(Vec3::Z) * half_length;
    (pose.position - axis, pose.position + axis)
}

pub(crate) fn closest_on_segment(p: Vec3, a: Vec3, b: Vec3) -> Vec3 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 < 1e-30 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Closest points between segments `p1q1` and `p2q2`.
pub(crate) fn closest_between_segments(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> (Vec3, Vec3) {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(r);
    const EPS: f64 = 1e-30;
    let (s, t);
    if a <= EPS && e <= EPS {
        return (p1, p2);
    }
    if a <= EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if e <= EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > EPS { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    (p1 + d1 * s, p2 + d2 * t)
}

fn sphere_sphere(ca: Vec3, ra: f64, cb: Vec3, rb: f64) -> Option<ContactGeometry> {
    let d = cb - ca;
    let dist = d.norm();
    if dist > ra + rb {
        return None;
    }
    let n = d.try_normalize().unwrap_or(Vec3::Z);
    let wa = ca + n * ra;
    let wb = cb - n * rb;
    Some(ContactGeometry { point: (wa + wb) * 0.5, normal: n, penetration: ra + rb - dist })
}

fn sphere_plane(c: Vec3, r: f64, n: Vec3, off: f64) -> Option<ContactGeometry> {
    deepest_points_plane(&[c], r, n, off)
}

/// Deepest of a set of (rounded) points against a plane. Points tied for
/// deepest are averaged so flat-resting shapes report a centered contact.
fn deepest_points_plane(points: &[Vec3], radius: f64, n: Vec3, off: f64) -> Option<ContactGeometry> {
    const TIE: f64 = 1e-7;
    let depth = |p: &Vec3| radius - (n.dot(*p) - off);
    let max = points.iter().map(depth).fold(f64::NEG_INFINITY, f64::max);
    if max < 0.0 {
        return None;
    }
    let (sum, count) = points
        .iter()
        .filter(|p| depth(p) >= max - TIE)
        .fold((Vec3::ZERO, 0.0), |(s, c), p| (s + *p, c + 1.0));
    let center = sum / count;
    let surface = center - n * radius;
    Some(ContactGeometry { point: surface + n * (max * 0.5), normal: -n, penetration: max })
}

fn box_sdf_local(p: Vec3, h: Vec3) -> f64 {
    let q = Vec3::new(p.x.abs() - h.x, p.y.abs() - h.y, p.z.abs() - h.z);
    let outside = Vec3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0)).norm();
    let inside = q.x.max(q.y).max(q.z).min(0.0);
    outside + inside
}

fn golden_section_min(f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    // endpoints can win when the minimum sits on the boundary
    let mid = 0.5 * (lo + hi);
    [0.0, mid, 1.0].into_iter().fold((mid, f(mid)), |best, t| {
        let v = f(t);
        if v < best.1 {
            (t, v)
        } else {
            best
        }
    })
    .0
}

/// Sphere (first) against an oriented box (second).
fn sphere_box(c: Vec3, r: f64, pose: &Pose, h: Vec3) -> Option<ContactGeometry> {
    let rot = pose.orientation;
    let cl = rot.conjugate().rotate(c - pose.position);
    let q = Vec3::new(cl.x.clamp(-h.x, h.x), cl.y.clamp(-h.y, h.y), cl.z.clamp(-h.z, h.z));
    let (n_local, pen, box_witness) = if q != cl {
        let d = cl - q;
        let dist = d.norm();
        if dist > r {
            return None;
        }
        (d / dist, r - dist, q)
    } else {
        let gaps = [h.x - cl.x.abs(), h.y - cl.y.abs(), h.z - cl.z.abs()];
        let axis = (0..3).min_by(|&i, &j| gaps[i].total_cmp(&gaps[j])).unwrap_or(0);
        let coord = [cl.x, cl.y, cl.z][axis];
        let s = if coord >= 0.0 { 1.0 } else { -1.0 };
        let mut e = [0.0; 3];
        e[axis] = s;
        let mut w = [cl.x, cl.y, cl.z];
        w[axis] = s * [h.x, h.y, h.z][axis];
        (Vec3::from(e), r + gaps[axis], Vec3::from(w))
    };
    let sphere_witness = cl - n_local * r;
    let point_local = (box_witness + sphere_witness) * 0.5;
    Some(ContactGeometry {
        point: pose.transform_point(point_local),
        normal: -rot.rotate(n_local),
        penetration: pen,
    })
}

fn box_axes(pose: &Pose) -> [Vec3; 3] {
    let q = pose.orientation;
    [q.rotate(Vec3::X), q.rotate(Vec3::Y), q.rotate(Vec3::Z)]
}

fn box_vertices(pose: &Pose, h: Vec3) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(8);
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                out.push(pose.transform_point(Vec3::new(sx * h.x, sy * h.y, sz * h.z)));
            }
        }
    }
    out
}

/// Average of the vertices extremal along `dir`.
fn support_centroid(vertices: &[Vec3], dir: Vec3) -> Vec3 {
    const TIE: f64 = 1e-7;
    let max = vertices.iter().map(|v| v.dot(dir)).fold(f64::NEG_INFINITY, f64::max);
    let (sum, count) = vertices
        .iter()
        .filter(|v| v.dot(dir) >= max - TIE)
        .fold((Vec3::ZERO, 0.0), |(s, c), v| (s + *v, c + 1.0));
    sum / count
}

/// Separating-axis test over the 15 candidate axes of two boxes.
fn box_box(pa: &Pose, ha: Vec3, pb: &Pose, hb: Vec3) -> Option<ContactGeometry> {
    let axes_a = box_axes(pa);
    let axes_b = box_axes(pb);
    let ext_a = [ha.x, ha.y, ha.z];
    let ext_b = [hb.x, hb.y, hb.z];
    let d = pb.position - pa.position;

    #[derive(Clone, Copy)]
    enum Axis {
        FaceA,
        FaceB,
        Edge(usize, usize),
    }

    let project = |axis: Vec3| -> (f64, f64) {
        let ra: f64 = (0..3).map(|i| ext_a[i] * axes_a[i].dot(axis).abs()).sum();
        let rb: f64 = (0..3).map(|i| ext_b[i] * axes_b[i].dot(axis).abs()).sum();
        let dist = axis.dot(d);
        (ra + rb - dist.abs(), dist)
    };

    let mut best: Option<(f64, Vec3, Axis)> = None;
    let mut consider = |axis: Vec3, kind: Axis, bias: f64| -> bool {
        let (overlap, dist) = project(axis);
        if overlap < 0.0 {
            return false;
        }
        let n = if dist < 0.0 { -axis } else { axis };
        if best.is_none_or(|(o, _, _)| overlap + bias < o) {
            best = Some((overlap, n, kind));
        }
        true
    };
    for axis in axes_a {
        if !consider(axis, Axis::FaceA, 0.0) {
            return None;
        }
    }
    for axis in axes_b {
        if !consider(axis, Axis::FaceB, 0.0) {
            return None;
        }
    }
    for (i, a) in axes_a.iter().enumerate() {
        for (j, b) in axes_b.iter().enumerate() {
            let Some(axis) = a.cross(*b).try_normalize() else { continue };
            if a.cross(*b).norm() < 1e-9 {
                continue;
            }
            // edge axes must beat face axes by a margin to be chosen
            if !consider(axis, Axis::Edge(i, j), 1e-6) {
                return None;
            }
        }
    }
    let (pen, n, kind) = best?;
    let point = match kind {
        Axis::FaceA => support_centroid(&box_vertices(pb, hb), -n) + n * (pen * 0.5),
        Axis::FaceB => support_centroid(&box_vertices(pa, ha), n) - n * (pen * 0.5),
        Axis::Edge(i, j) => {
            let edge = |pose: &Pose, axes: &[Vec3; 3], ext: &[f64; 3], k: usize, dir: Vec3| {
                let mut center = pose.position;
                for m in 0..3 {
                    if m != k {
                        let s = if axes[m].dot(dir) >= 0.0 { 1.0 } else { -1.0 };
                        center += axes[m] * (s * ext[m]);
                    }
                }
                (center - axes[k] * ext[k], center + axes[k] * ext[k])
            };
            let (a0, a1) = edge(pa, &axes_a, &ext_a, i, n);
            let (b0, b1) = edge(pb, &axes_b, &ext_b, j, -n);
            let (ca, cb) = closest_between_segments(a0, a1, b0, b1);
            (ca + cb) * 0.5
        }
    };
    Some(ContactGeometry { point, normal: n, penetration: pen })
}
