//! Euler-spiral (clothoid) completion between two inducers, with a biarc
//! fallback.
//!
//! The G1 Hermite problem is reduced to one unknown. With the chord
//! normalized to unit length along +X, let `φ0` be the start heading and `φ1`
//! the end heading relative to the chord, and `δ = φ1 - φ0 + 2πk` the total
//! turning for winding `k`. The heading along the normalized parameter
//! `t ∈ [0, 1]` is `θ(t) = φ0 + (δ - A)t + A t²`; the endpoint lands on the
//! chord iff `∫ sin θ(t) dt = 0`, which is solved for `A` by damped Newton.
//! The length then follows from `L = 1 / ∫ cos θ(t) dt`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{signed_angle, Inducer, Point2, Polyline};

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<const N: usize>(f: &impl Fn(f64) -> [f64; N], a: f64, b: f64) -> ([f64; N], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    let fc = f(c);
    for i in 0..N {
        kron[i] = WGK[7] * fc[i];
        gauss[i] = WG[3] * fc[i];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        for i in 0..N {
            let s = f1[i] + f2[i];
            kron[i] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * s;
            }
        }
    }
    let mut err: f64 = 0.0;
    for i in 0..N {
        kron[i] *= h;
        gauss[i] *= h;
        err = err.max((kron[i] - gauss[i]).abs());
    }
    (kron, err)
}

/// Adaptive Gauss-Kronrod quadrature of a vector-valued integrand.
pub fn integrate<const N: usize>(f: impl Fn(f64) -> [f64; N], a: f64, b: f64, tol: f64) -> [f64; N] {
    fn rec<const N: usize>(f: &impl Fn(f64) -> [f64; N], a: f64, b: f64, tol: f64, depth: u32) -> [f64; N] {
        let (v, err) = gk15(f, a, b);
        let mag = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if err <= tol.max(16.0 * f64::EPSILON * mag) || depth >= 14 {
            return v;
        }
        let m = 0.5 * (a + b);
        let l = rec(f, a, m, tol * 0.5, depth + 1);
        let r = rec(f, m, b, tol * 0.5, depth + 1);
        std::array::from_fn(|i| l[i] + r[i])
    }
    if a == b {
        return [0.0; N];
    }
    rec(&f, a, b, tol, 0)
}

/// Curve with curvature affine in arc length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClothoidSegment {
    /// Start position and heading.
    pub start: Inducer,
    pub length: f64,
    pub kappa0: f64,
    pub kappa_rate: f64,
}

impl ClothoidSegment {
    pub fn theta_at(&self, s: f64) -> f64 {
        self.start.theta + self.kappa0 * s + 0.5 * self.kappa_rate * s * s
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        self.kappa0 + self.kappa_rate * s
    }

    fn displacement(&self, s0: f64, s1: f64) -> Point2 {
        let tol = 1e-13 * self.length.max(f64::MIN_POSITIVE);
        let [x, y] = integrate(
            |s| {
                let (sn, cs) = self.theta_at(s).sin_cos();
                [cs, sn]
            },
            s0,
            s1,
            tol,
        );
        Point2::new(x, y)
    }

    /// `n` points at equal arc-length spacing, first and last included.
    pub fn sample(&self, n: usize) -> Vec<Point2> {
        let n = n.max(2);
        let mut out = Vec::with_capacity(n);
        let mut p = self.start.position;
        out.push(p);
        let mut prev = 0.0;
        for k in 1..n {
            let s = self.length * k as f64 / (n - 1) as f64;
            p = p + self.displacement(prev, s);
            out.push(p);
            prev = s;
        }
        out
    }

    /// ∫|κ(s)| ds over the segment.
    pub fn total_turning(&self) -> f64 {
        abs_linear_integral(self.kappa0, self.curvature_at(self.length)) * self.length
    }
}

/// Position, heading and curvature at arc length `s`.
pub fn eval_clothoid(seg: &ClothoidSegment, s: f64) -> Result<(Point2, f64, f64)> {
    if !(0.0..=seg.length).contains(&s) {
        return Err(Error::OutOfRange { s, length: seg.length });
    }
    let p = seg.start.position + seg.displacement(0.0, s);
    Ok((p, seg.theta_at(s), seg.curvature_at(s)))
}

/// ∫₀¹ |f0 + (f1 - f0) t| dt.
fn abs_linear_integral(f0: f64, f1: f64) -> f64 {
    if f0 * f1 >= 0.0 {
        0.5 * (f0.abs() + f1.abs())
    } else {
        let t = f0.abs() / (f0.abs() + f1.abs());
        0.5 * (f0.abs() * t + f1.abs() * (1.0 - t))
    }
}

/// (∫cos θ, ∫sin θ, ∂/∂A ∫sin θ) over t in [0, 1].
fn moments(phi0: f64, delta: f64, a: f64) -> [f64; 3] {
    integrate(
        |t| {
            let (s, c) = (phi0 + (delta - a) * t + a * t * t).sin_cos();
            [c, s, (t * t - t) * c]
        },
        0.0,
        1.0,
        1e-14,
    )
}

const MAX_ITER: usize = 64;
const G_TOL: f64 = 1e-13;
/// Bound on the curvature-rate parameter; beyond it the spiral winds dozens
/// of times and no minimal-turning solution lives there.
const A_MAX: f64 = 400.0;

fn newton(phi0: f64, delta: f64, guess: f64) -> Option<f64> {
    let mut a = guess;
    let [_, mut g, mut dg] = moments(phi0, delta, a);
    for _ in 0..MAX_ITER {
        if g.abs() <= G_TOL {
            return Some(a);
        }
        if dg == 0.0 || !dg.is_finite() {
            break;
        }
        let step = g / dg;
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda >= 1.0 / 1024.0 {
            let trial = a - lambda * step;
            if trial.abs() <= A_MAX {
                let [_, gt, dgt] = moments(phi0, delta, trial);
                if gt.abs() < g.abs() {
                    a = trial;
                    g = gt;
                    dg = dgt;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (g.abs() <= 1e-10).then_some(a)
}

/// Solves the G1 clothoid from `i1` (heading into the gap) to `i2` (whose
/// tangent points back into the gap). Among winding variants the solution
/// with least total absolute turning is returned.
pub fn fit_clothoid(i1: &Inducer, i2: &Inducer) -> Result<ClothoidSegment> {
    let chord = i2.position - i1.position;
    let gap = chord.norm();
    if gap == 0.0 {
        return Err(Error::CoincidentInducers);
    }
    let chord_angle = chord.angle();
    let phi0 = signed_angle(i1.theta - chord_angle);
    let phi1 = signed_angle(i2.theta + PI - chord_angle);

    let mut best: Option<(f64, f64, f64)> = None; // (turning, delta, A)
    for k in [0.0, -1.0, 1.0] {
        let delta = phi1 - phi0 + TAU * k;
        let a0 = 6.0 * phi0 + 3.0 * delta;
        let mut found: Vec<f64> = Vec::new();
        for off in [0.0, -PI, PI, -TAU, TAU] {
            let Some(a) = newton(phi0, delta, a0 + off) else {
                continue;
            };
            if found.iter().any(|&f| (f - a).abs() < 1e-8) {
                continue;
            }
            found.push(a);
            let [h, ..] = moments(phi0, delta, a);
            if h <= 1e-9 {
                continue;
            }
            let turning = abs_linear_integral(delta - a, delta + a);
            if best.is_none_or(|(t, ..)| turning < t - 1e-12) {
                best = Some((turning, delta, a));
            }
        }
    }
    let (_, delta, a) = best.ok_or(Error::NoConvergence)?;
    let [h, ..] = moments(phi0, delta, a);
    let length = gap / h;
    Ok(ClothoidSegment {
        start: Inducer::new(i1.position, i1.theta),
        length,
        kappa0: (delta - a) / length,
        kappa_rate: 2.0 * a / (length * length),
    })
}

/// Euler-spiral completion sampled at `n` equally spaced arc-length points.
pub fn euler_spiral_complete(i1: &Inducer, i2: &Inducer, n: usize) -> Result<Polyline> {
    let seg = fit_clothoid(i1, i2)?;
    Polyline::new(seg.sample(n))
}

/// Equal-tangent-length biarc from `i1` to `i2`, resampled to `n` points.
pub fn biarc_complete(i1: &Inducer, i2: &Inducer, n: usize) -> Result<Polyline> {
    let p0 = i1.position;
    let p1 = i2.position;
    if p0 == p1 {
        return Err(Error::CoincidentInducers);
    }
    let t0 = i1.direction();
    let t1 = -i2.direction();
    let v = p1 - p0;
    let t = t0 + t1;
    let denom = 2.0 * (1.0 - t0.dot(t1));
    let vt = v.dot(t);
    let d = if denom.abs() < 1e-12 {
        let vt1 = v.dot(t1);
        if vt1.abs() < 1e-12 {
            v.norm() / 2.0
        } else {
            v.norm_sq() / (4.0 * vt1)
        }
    } else {
        (-vt + (vt * vt + denom * v.norm_sq()).sqrt()) / denom
    };
    let joint = ((p0 + t0 * d) + (p1 - t1 * d)) * 0.5;
    let mut pts = arc_points(p0, t0, joint, 64);
    let mut second = arc_points(p1, -t1, joint, 64);
    second.reverse();
    pts.extend(second.into_iter().skip(1));
    crate::geometry::resample_points(&pts, n).and_then(Polyline::new)
}

/// Points along the circular arc leaving `p` with unit tangent `tan` and
/// passing through `q`.
fn arc_points(p: Point2, tan: Point2, q: Point2, k: usize) -> Vec<Point2> {
    let chord = q - p;
    let normal = Point2::new(-tan.y, tan.x);
    let lateral = chord.dot(normal);
    if lateral.abs() <= 1e-12 * chord.norm() || chord.norm() == 0.0 {
        return (0..=k).map(|i| p.lerp(q, i as f64 / k as f64)).collect();
    }
    let radius = chord.norm_sq() / (2.0 * lateral);
    let center = p + normal * radius;
    let sweep = 2.0 * tan.cross(chord).atan2(tan.dot(chord));
    (0..=k)
        .map(|i| center + (p - center).rotate(sweep * i as f64 / k as f64))
        .collect()
}

/// Euler spiral, or the biarc when the clothoid solver fails. The flag is
/// true when the biarc was used.
pub fn complete_with_fallback(i1: &Inducer, i2: &Inducer, n: usize) -> Result<(Polyline, bool)> {
    match euler_spiral_complete(i1, i2, n) {
        Ok(p) => Ok((p, false)),
        Err(Error::NoConvergence) => Ok((biarc_complete(i1, i2, n)?, true)),
        Err(e) => Err(e),
    }
}
