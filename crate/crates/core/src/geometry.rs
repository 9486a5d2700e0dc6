//! Planar geometry: points, poses, arc-length parameterized polylines,
//! frame transforms and footprint overlap tests.
//!
//! Conventions used throughout the crate: yaw is counter-clockwise from +x,
//! normalized to (-π, π]; lateral offsets are positive to the left of the
//! local tangent.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A point or displacement in meters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product; positive when `o` is to the left.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Rotated by +90°.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (-π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = num_traits::Euclid::rem_euclid(&theta, &(2.0 * PI));
    if a > PI {
        a -= 2.0 * PI;
    }
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Planar pose. For the ego vehicle the reference point is the rear axle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2D {
    pub const IDENTITY: Pose2D = Pose2D { x: 0.0, y: 0.0, yaw: 0.0 };

    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw: normalize_angle(yaw) }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.yaw)
    }

    /// Local (frame) coordinates to world coordinates.
    pub fn transform_point(&self, local: Vec2) -> Vec2 {
        self.position() + local.rotate(self.yaw)
    }

    /// World coordinates to local (frame) coordinates.
    pub fn inverse_transform_point(&self, world: Vec2) -> Vec2 {
        (world - self.position()).rotate(-self.yaw)
    }

    /// `self ∘ rel`: the pose `rel`, given in this pose's frame, expressed in the world.
    pub fn compose(&self, rel: &Pose2D) -> Pose2D {
        let p = self.transform_point(rel.position());
        Pose2D::new(p.x, p.y, self.yaw + rel.yaw)
    }

    pub fn inverse(&self) -> Pose2D {
        let p = (-self.position()).rotate(-self.yaw);
        Pose2D::new(p.x, p.y, -self.yaw)
    }

    /// Pose `other` expressed in this pose's frame.
    pub fn relative(&self, other: &Pose2D) -> Pose2D {
        let p = self.inverse_transform_point(other.position());
        Pose2D::new(p.x, p.y, other.yaw - self.yaw)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.yaw.is_finite()
    }
}

/// Points expressed in a local frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramedPoints {
    pub frame: Pose2D,
    pub points: Vec<Vec2>,
}

impl FramedPoints {
    pub fn to_world(&self) -> Vec<Vec2> {
        to_world(&self.points, &self.frame)
    }
}

pub fn to_frame(points: &[Vec2], frame: Pose2D) -> FramedPoints {
    FramedPoints {
        frame,
        points: points.iter().map(|p| frame.inverse_transform_point(*p)).collect(),
    }
}

pub fn to_world(local: &[Vec2], frame: &Pose2D) -> Vec<Vec2> {
    local.iter().map(|p| frame.transform_point(*p)).collect()
}

/// Result of projecting a point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the closest point.
    pub s: f64,
    /// Signed offset along the local left normal (perpendicular component only,
    /// so a point past either end projects with the along-track part dropped).
    pub d: f64,
    pub point: Vec2,
    pub distance: f64,
    pub segment: usize,
}

/// How to resample a polyline along its arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resample {
    /// Fixed spacing from the start; the final gap may be shorter.
    Spacing(f64),
    /// Exactly this many points including both ends.
    Count(usize),
}

/// An immutable polyline with a cached cumulative arc length per vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec2>", into = "Vec<Vec2>")]
pub struct Polyline {
    points: Vec<Vec2>,
    cumulative: Vec<f64>,
}

impl TryFrom<Vec<Vec2>> for Polyline {
    type Error = Error;
    fn try_from(points: Vec<Vec2>) -> Result<Self> {
        Polyline::new(points)
    }
}

impl From<Polyline> for Vec<Vec2> {
    fn from(p: Polyline) -> Self {
        p.points
    }
}

impl Polyline {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGeometry("polyline needs at least two points"));
        }
        if !points.iter().all(|p| p.is_finite()) {
            return Err(Error::InvalidGeometry("polyline has non-finite coordinates"));
        }
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in points.windows(2) {
            acc += w[0].distance(w[1]);
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::InvalidGeometry("polyline has zero length"));
        }
        Ok(Self { points, cumulative })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn cumulative_arclength(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn length(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    pub fn end(&self) -> Vec2 {
        self.points[self.points.len() - 1]
    }

    /// Index of the segment containing arc length `s` (clamped).
    fn segment_at(&self, s: f64) -> usize {
        let n = self.points.len();
        let i = self.cumulative.partition_point(|&c| c <= s);
        i.saturating_sub(1).min(n - 2)
    }

    /// Point at arc length `s`, clamped to the polyline.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_at(s);
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        if seg <= 0.0 {
            return self.points[i];
        }
        let t = ((s - self.cumulative[i]) / seg).clamp(0.0, 1.0);
        self.points[i].lerp(self.points[i + 1], t)
    }

    /// Heading of the segment containing `s`. Zero-length segments borrow the
    /// heading of the nearest non-degenerate neighbour.
    pub fn heading_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_at(s);
        self.segment_heading(i)
    }

    fn segment_heading(&self, i: usize) -> f64 {
        let n = self.points.len() - 1;
        for k in (i..n).chain((0..i).rev()) {
            let d = self.points[k + 1] - self.points[k];
            if d.norm_sq() > 0.0 {
                return d.angle();
            }
        }
        0.0
    }

    /// Pose at arc length `s` with the local tangent as yaw.
    pub fn pose_at(&self, s: f64) -> Pose2D {
        let p = self.point_at(s);
        Pose2D::new(p.x, p.y, self.heading_at(s))
    }

    /// Point at arc length `s` shifted by `d` along the left normal.
    pub fn offset_point(&self, s: f64, d: f64) -> Vec2 {
        self.point_at(s) + Vec2::from_angle(self.heading_at(s)).perp() * d
    }

    pub fn resample(&self, mode: Resample) -> Result<Vec<Vec2>> {
        let len = self.length();
        match mode {
            Resample::Spacing(spacing) => {
                if !(spacing > 0.0) || !spacing.is_finite() {
                    return Err(Error::InvalidInput("resample spacing must be positive".into()));
                }
                let n = (len / spacing + 1e-9).floor() as usize;
                let mut out: Vec<Vec2> =
                    (0..=n).map(|k| self.point_at((k as f64 * spacing).min(len))).collect();
                if len - n as f64 * spacing > 1e-9 * len.max(1.0) {
                    out.push(self.end());
                }
                Ok(out)
            }
            Resample::Count(count) => {
                if count < 2 {
                    return Err(Error::InvalidInput("resample count must be at least 2".into()));
                }
                let step = len / (count - 1) as f64;
                Ok((0..count)
                    .map(|k| if k + 1 == count { self.end() } else { self.point_at(k as f64 * step) })
                    .collect())
            }
        }
    }

    /// Closest point on the polyline. Ties go to the smaller arc length.
    pub fn project(&self, p: Vec2) -> Projection {
        let mut best = Projection { s: 0.0, d: 0.0, point: self.points[0], distance: f64::INFINITY, segment: 0 };
        let mut best_sq = f64::INFINITY;
        for i in 0..self.points.len() - 1 {
            let a = self.points[i];
            let ab = self.points[i + 1] - a;
            let seg_sq = ab.norm_sq();
            let (t, q) = if seg_sq > 0.0 {
                let t = ((p - a).dot(ab) / seg_sq).clamp(0.0, 1.0);
                (t, a + ab * t)
            } else {
                (0.0, a)
            };
            let dist_sq = (p - q).norm_sq();
            if dist_sq < best_sq {
                best_sq = dist_sq;
                let seg_len = self.cumulative[i + 1] - self.cumulative[i];
                let tangent = if seg_sq > 0.0 { ab * (1.0 / seg_sq.sqrt()) } else { Vec2::from_angle(self.segment_heading(i)) };
                best = Projection {
                    s: self.cumulative[i] + t * seg_len,
                    d: tangent.cross(p - q),
                    point: q,
                    distance: dist_sq.sqrt(),
                    segment: i,
                };
            }
        }
        best
    }

    /// Sub-polyline between arc lengths `s0 < s1` (clamped).
    pub fn slice(&self, s0: f64, s1: f64) -> Result<Polyline> {
        let len = self.length();
        let s0 = s0.clamp(0.0, len);
        let s1 = s1.clamp(0.0, len);
        if s1 <= s0 {
            return Err(Error::InvalidGeometry("empty polyline slice"));
        }
        let mut pts = Vec::new();
        pts.push(self.point_at(s0));
        for (p, &c) in self.points.iter().zip(&self.cumulative) {
            if c > s0 && c < s1 {
                pts.push(*p);
            }
        }
        pts.push(self.point_at(s1));
        Polyline::new(pts)
    }

    /// The polyline continued straight past its end by `extra` meters.
    pub fn extended(&self, extra: f64) -> Polyline {
        if extra <= 0.0 {
            return self.clone();
        }
        let dir = Vec2::from_angle(self.heading_at(self.length()));
        let mut pts = self.points.clone();
        pts.push(self.end() + dir * extra);
        Polyline::new(pts).expect("extending a valid polyline keeps it valid")
    }

    /// Unsigned curvature at each vertex from the circle through it and its
    /// neighbours; zero at the end vertices.
    pub fn vertex_curvature(&self) -> Vec<f64> {
        let n = self.points.len();
        let mut k = alloc::vec![0.0; n];
        for i in 1..n.saturating_sub(1) {
            let (a, b, c) = (self.points[i - 1], self.points[i], self.points[i + 1]);
            let denom = a.distance(b) * b.distance(c) * a.distance(c);
            if denom > 1e-12 {
                k[i] = 2.0 * (b - a).cross(c - a).abs() / denom;
            }
        }
        k
    }
}

/// Rectangle footprint with a heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec2,
    pub yaw: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedBox {
    pub fn corners(&self) -> [Vec2; 4] {
        let f = Vec2::from_angle(self.yaw);
        let l = f.perp();
        let (hl, hw) = (self.half_length, self.half_width);
        [
            self.center + f * hl + l * hw,
            self.center + f * hl - l * hw,
            self.center - f * hl - l * hw,
            self.center - f * hl + l * hw,
        ]
    }

    fn radius_along(&self, axis: Vec2) -> f64 {
        let f = Vec2::from_angle(self.yaw);
        self.half_length * f.dot(axis).abs() + self.half_width * f.perp().dot(axis).abs()
    }

    /// Strict separating-axis overlap test; touching boxes do not overlap.
    pub fn overlaps(&self, other: &OrientedBox) -> bool {
        let delta = other.center - self.center;
        let fa = Vec2::from_angle(self.yaw);
        let fb = Vec2::from_angle(other.yaw);
        let (ra, rb) = if self.yaw <= other.yaw { (fa, fb) } else { (fb, fa) };
        for axis in [ra, ra.perp(), rb, rb.perp()] {
            let gap = delta.dot(axis).abs();
            if gap >= self.radius_along(axis) + other.radius_along(axis) {
                return false;
            }
        }
        true
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let local = (p - self.center).rotate(-self.yaw);
        local.x.abs() <= self.half_length && local.y.abs() <= self.half_width
    }
}

/// Simple polygon (no holes), vertices in either winding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Vec2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Vec2>) -> Self {
        Self { vertices }
    }

    /// Even-odd ray casting.
    pub fn contains(&self, p: Vec2) -> bool {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return false;
        }
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (v[i], v[j]);
            if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    /// Band of half-width `half_width` around `line` between arc lengths `s0` and `s1`.
    pub fn corridor(line: &Polyline, s0: f64, s1: f64, half_width: f64) -> Polygon {
        let steps = (((s1 - s0) / 1.0).ceil() as usize).max(1);
        let ss: Vec<f64> = (0..=steps).map(|k| s0 + (s1 - s0) * k as f64 / steps as f64).collect();
        let mut vertices: Vec<Vec2> = ss.iter().map(|&s| line.offset_point(s, half_width)).collect();
        vertices.extend(ss.iter().rev().map(|&s| line.offset_point(s, -half_width)));
        Polygon { vertices }
    }
}
