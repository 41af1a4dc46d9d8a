//! Planar primitives: points, oriented inducers, polylines, similarity
//! transforms, arc-length resampling and the discrete Fréchet distance.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    /// Builds a point, rejecting NaN and infinite components.
    pub fn checked(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Point2 { x, y })
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point2 { x: c, y: s }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Direction angle of the vector in (-π, π].
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotate(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point2 {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    pub fn lerp(self, o: Point2, t: f64) -> Self {
        Point2 {
            x: self.x + (o.x - self.x) * t,
            y: self.y + (o.y - self.y) * t,
        }
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into [0, 2π).
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Wraps an angle into (-π, π].
pub fn signed_angle(theta: f64) -> f64 {
    let t = normalize_angle(theta);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

/// Distance between two directed angles, valued in [0, π].
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TAU);
    d.min(TAU - d)
}

/// An oriented curve endpoint. `theta` is the directed tangent pointing from
/// the endpoint into the gap (or into the fragment it bounds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inducer {
    pub position: Point2,
    pub theta: f64,
}

impl Inducer {
    pub fn new(position: Point2, theta: f64) -> Self {
        Inducer {
            position,
            theta: normalize_angle(theta),
        }
    }

    pub fn checked(position: Point2, theta: f64) -> Result<Self> {
        if position.is_finite() && theta.is_finite() {
            Ok(Inducer::new(position, theta))
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn direction(&self) -> Point2 {
        Point2::from_angle(self.theta)
    }

    /// Same position, tangent reversed.
    pub fn flipped(&self) -> Self {
        Inducer::new(self.position, self.theta + PI)
    }
}

/// An ordered point sequence with cached cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point2>,
    cumulative: Vec<f64>,
}

impl Polyline {
    /// Consecutive duplicate points are dropped; at least two distinct points
    /// must remain.
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut pts: Vec<Point2> = Vec::with_capacity(points.len());
        for p in points {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        if pts.len() < 2 {
            return Err(Error::TooFewPoints(pts.len()));
        }
        let mut cumulative = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in pts.windows(2) {
            acc += w[0].distance(w[1]);
            cumulative.push(acc);
        }
        Ok(Polyline {
            points: pts,
            cumulative,
        })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point2> {
        self.points
    }

    pub fn cumulative_arclength(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    pub fn first(&self) -> Point2 {
        self.points[0]
    }

    pub fn last(&self) -> Point2 {
        self.points[self.points.len() - 1]
    }

    pub fn reversed(&self) -> Polyline {
        let mut pts = self.points.clone();
        pts.reverse();
        Polyline::new(pts).expect("reversal preserves validity")
    }

    /// Point at arc length `s` (clamped to the curve), by linear interpolation.
    pub fn point_at(&self, s: f64) -> Point2 {
        let total = self.length();
        if s <= 0.0 {
            return self.first();
        }
        if s >= total {
            return self.last();
        }
        // first index whose cumulative length is >= s
        let k = self.cumulative.partition_point(|&c| c < s);
        let (a, b) = (k - 1, k);
        let seg = self.cumulative[b] - self.cumulative[a];
        let t = if seg > 0.0 {
            (s - self.cumulative[a]) / seg
        } else {
            0.0
        };
        self.points[a].lerp(self.points[b], t)
    }

    pub fn midpoint(&self) -> Point2 {
        self.point_at(self.length() / 2.0)
    }
}

/// Resamples a polyline to `n` points spaced uniformly in arc length.
pub fn resample_arclength(poly: &Polyline, n: usize) -> Result<Vec<Point2>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("resample count {n} < 2")));
    }
    let total = poly.length();
    if total <= 0.0 {
        return Err(Error::ZeroLength);
    }
    let cum = poly.cumulative_arclength();
    let pts = poly.points();
    let mut out = Vec::with_capacity(n);
    out.push(pts[0]);
    let mut seg = 0;
    for k in 1..n - 1 {
        let s = total * k as f64 / (n - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = ((s - cum[seg]) / len).clamp(0.0, 1.0);
        out.push(pts[seg].lerp(pts[seg + 1], t));
    }
    out.push(pts[pts.len() - 1]);
    Ok(out)
}

/// Convenience wrapper: builds the polyline (dropping duplicates) then resamples.
pub fn resample_points(points: &[Point2], n: usize) -> Result<Vec<Point2>> {
    resample_arclength(&Polyline::new(points.to_vec())?, n)
}

/// Discrete Fréchet distance (Eiter & Mannila coupling recurrence), using two
/// rolling rows over the shorter sequence.
pub fn discrete_frechet(a: &[Point2], b: &[Point2]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (outer, inner) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let m = inner.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for (i, &p) in outer.iter().enumerate() {
        for (j, &q) in inner.iter().enumerate() {
            let d = p.distance(q);
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => d.max(cur[j - 1]),
                (_, 0) => d.max(prev[0]),
                _ => d.max(prev[j].min(prev[j - 1]).min(cur[j - 1])),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// Similarity transform of the plane: optional reflection across the X axis,
/// then rotation, then uniform scaling, then translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity2 {
    pub rotation: f64,
    pub scale: f64,
    pub translation: Point2,
    pub reflect: bool,
}

impl Default for Similarity2 {
    fn default() -> Self {
        Similarity2::IDENTITY
    }
}

impl Similarity2 {
    pub const IDENTITY: Similarity2 = Similarity2 {
        rotation: 0.0,
        scale: 1.0,
        translation: Point2::ORIGIN,
        reflect: false,
    };

    pub fn new(rotation: f64, scale: f64, translation: Point2, reflect: bool) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && rotation.is_finite() && translation.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "similarity needs finite parameters and positive scale, got scale {scale}"
            )));
        }
        Ok(Similarity2 {
            rotation,
            scale,
            translation,
            reflect,
        })
    }

    pub fn rotation(theta: f64) -> Self {
        Similarity2 {
            rotation: theta,
            ..Self::IDENTITY
        }
    }

    pub fn translation(t: Point2) -> Self {
        Similarity2 {
            translation: t,
            ..Self::IDENTITY
        }
    }

    pub fn reflection() -> Self {
        Similarity2 {
            reflect: true,
            ..Self::IDENTITY
        }
    }

    /// Rotation and scaling about the origin.
    pub fn rotation_scale(theta: f64, scale: f64) -> Self {
        Similarity2 {
            rotation: theta,
            scale,
            ..Self::IDENTITY
        }
    }

    fn linear(&self, v: Point2) -> Point2 {
        let v = if self.reflect { Point2::new(v.x, -v.y) } else { v };
        v.rotate(self.rotation) * self.scale
    }

    pub fn apply_point(&self, p: Point2) -> Point2 {
        self.linear(p) + self.translation
    }

    pub fn apply_angle(&self, theta: f64) -> f64 {
        let t = if self.reflect { -theta } else { theta };
        normalize_angle(t + self.rotation)
    }

    pub fn apply_inducer(&self, i: &Inducer) -> Inducer {
        Inducer {
            position: self.apply_point(i.position),
            theta: self.apply_angle(i.theta),
        }
    }

    pub fn apply_points(&self, pts: &[Point2]) -> Vec<Point2> {
        pts.iter().map(|&p| self.apply_point(p)).collect()
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Similarity2) -> Similarity2 {
        let inner_rot = if self.reflect {
            -other.rotation
        } else {
            other.rotation
        };
        Similarity2 {
            rotation: self.rotation + inner_rot,
            scale: self.scale * other.scale,
            translation: self.apply_point(other.translation),
            reflect: self.reflect ^ other.reflect,
        }
    }

    pub fn inverse(&self) -> Similarity2 {
        let rotation = if self.reflect {
            self.rotation
        } else {
            -self.rotation
        };
        let mut inv = Similarity2 {
            rotation,
            scale: 1.0 / self.scale,
            translation: Point2::ORIGIN,
            reflect: self.reflect,
        };
        inv.translation = -inv.linear(self.translation);
        inv
    }
}

/// Anything a [`Similarity2`] can act on.
pub trait Transform: Sized {
    fn transformed(&self, t: &Similarity2) -> Self;
}

impl Transform for Point2 {
    fn transformed(&self, t: &Similarity2) -> Self {
        t.apply_point(*self)
    }
}

impl Transform for Inducer {
    fn transformed(&self, t: &Similarity2) -> Self {
        t.apply_inducer(self)
    }
}

impl Transform for Polyline {
    fn transformed(&self, t: &Similarity2) -> Self {
        Polyline::new(t.apply_points(&self.points))
            .expect("similarity maps distinct points to distinct points")
    }
}

pub fn apply_similarity<T: Transform>(t: &Similarity2, x: &T) -> T {
    x.transformed(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Point2, b: Point2, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn angular_distance_examples() {
        assert_eq!(angular_distance(0.0, 0.0), 0.0);
        assert!((angular_distance(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((angular_distance(PI / 2.0, 3.0 * PI / 2.0) - PI).abs() < 1e-12);
        assert!((angular_distance(-0.1, 0.1) - 0.2).abs() < 1e-12);
        assert!((angular_distance(7.0 * TAU + 0.3, 0.2) - 0.1).abs() < 1e-9);
    }

    #[test]
    fn normalize_angle_range() {
        for t in [-1e-20, -TAU, TAU, 3.0 * TAU + 0.5, -0.5] {
            let n = normalize_angle(t);
            assert!((0.0..TAU).contains(&n), "{t} -> {n}");
        }
        assert_eq!(signed_angle(PI), PI);
        assert!((signed_angle(1.5 * PI) + 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn polyline_drops_duplicates() {
        let p = Polyline::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 4.0),
            Point2::new(3.0, 4.0),
        ])
        .unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.length(), 5.0);
        assert!(matches!(
            Polyline::new(vec![Point2::new(1.0, 1.0); 3]),
            Err(Error::TooFewPoints(1))
        ));
        assert!(matches!(
            Polyline::new(vec![Point2::new(f64::NAN, 1.0), Point2::new(0.0, 0.0)]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn resample_straight_segment() {
        let p = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)]).unwrap();
        let r = resample_arclength(&p, 5).unwrap();
        let xs: Vec<f64> = r.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
    }

    #[test]
    fn resample_two_points_gives_endpoints() {
        let p = Polyline::new(vec![
            Point2::new(1.0, 2.0),
            Point2::new(4.0, -1.0),
            Point2::new(5.0, 7.0),
        ])
        .unwrap();
        assert_eq!(resample_arclength(&p, 2).unwrap(), vec![p.first(), p.last()]);
    }

    #[test]
    fn resample_l_shape_midpoint_is_corner() {
        let p = Polyline::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
        ])
        .unwrap();
        let r = resample_arclength(&p, 3).unwrap();
        assert!(close(r[1], Point2::new(1.0, 0.0), 1e-12));
    }

    #[test]
    fn resample_rejects_bad_count() {
        let p = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)]).unwrap();
        assert!(resample_arclength(&p, 1).is_err());
    }

    #[test]
    fn frechet_simple_cases() {
        let a: Vec<Point2> = (0..6).map(|i| Point2::new(i as f64, 0.0)).collect();
        assert_eq!(discrete_frechet(&a, &a).unwrap(), 0.0);
        let b: Vec<Point2> = a.iter().map(|p| Point2::new(p.x, 3.0)).collect();
        assert!((discrete_frechet(&a, &b).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(discrete_frechet(&[], &a), Err(Error::EmptyInput)));
    }

    #[test]
    fn similarity_examples() {
        let p = Point2::new(1.0, 2.0);
        assert_eq!(apply_similarity(&Similarity2::IDENTITY, &p), p);
        assert_eq!(Similarity2::reflection().apply_point(p), Point2::new(1.0, -2.0));
        let i = Inducer::new(p, 0.3);
        let r = Similarity2::reflection().apply_inducer(&i);
        assert!((r.theta - (TAU - 0.3)).abs() < 1e-12);
    }

    #[test]
    fn similarity_compose_matches_sequential_application() {
        let a = Similarity2::new(0.7, 2.5, Point2::new(3.0, -1.0), true).unwrap();
        let b = Similarity2::new(-1.9, 0.3, Point2::new(-4.0, 8.0), true).unwrap();
        let c = Similarity2::new(2.2, 1.7, Point2::new(0.5, 0.5), false).unwrap();
        for t in [a, b, c] {
            for u in [a, b, c] {
                let p = Point2::new(1.3, -2.7);
                assert!(close(t.compose(&u).apply_point(p), t.apply_point(u.apply_point(p)), 1e-12));
                let th = 0.9;
                assert!(angular_distance(t.compose(&u).apply_angle(th), t.apply_angle(u.apply_angle(th))) < 1e-12);
            }
        }
    }

    #[test]
    fn similarity_rejects_nonpositive_scale() {
        assert!(Similarity2::new(0.0, 0.0, Point2::ORIGIN, false).is_err());
        assert!(Similarity2::new(0.0, -1.0, Point2::ORIGIN, false).is_err());
    }
}
