//! Mean-curve reconstruction between two inducers.
//!
//! Matched fragments are brought into the query's canonical frame, resampled
//! to `n` equal arc-length points and averaged. Sparse configurations are
//! boosted by splitting the gap at the provisional mean curve's midpoint and
//! reconstructing both halves.

use serde::{Deserialize, Serialize};

use crate::baseline::complete_with_fallback;
use crate::error::{Error, Result};
use crate::geometry::{resample_arclength, resample_points, Inducer, Point2, Polyline, Similarity2};
use crate::index::{canonicalize, Match, Prior, QueryTolerances, RelativeConfiguration};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveFlags {
    pub scale_invariant_used: bool,
    pub midway_extended: bool,
    /// Some gap (or sub-gap) had no matches and was filled by the Euler spiral.
    pub fallback_used: bool,
}

impl CurveFlags {
    fn merge(&mut self, o: CurveFlags) {
        self.scale_invariant_used |= o.scale_invariant_used;
        self.midway_extended |= o.midway_extended;
        self.fallback_used |= o.fallback_used;
    }
}

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
pub type Cov2 = [[f64; 2]; 2];

/// Pointwise mean of matched fragments in the canonical frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCurve {
    pub points: Vec<Point2>,
    pub covariance: Vec<Cov2>,
    pub m: usize,
    pub flags: CurveFlags,
}

impl MeanCurve {
    pub fn n(&self) -> usize {
        self.points.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    pub n: usize,
    pub tolerances: QueryTolerances,
    pub scale_invariant: bool,
    pub midway: bool,
    /// Midway extension is attempted when fewer matches than this are found.
    pub midway_threshold: usize,
    pub max_depth: usize,
    /// Fill match-less gaps with the Euler spiral instead of failing.
    pub fallback: bool,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            n: 16,
            tolerances: QueryTolerances::default(),
            scale_invariant: true,
            midway: true,
            midway_threshold: 400,
            max_depth: 3,
            fallback: true,
        }
    }
}

impl ReconstructOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("n = {} < 2", self.n)));
        }
        self.tolerances.validate()
    }
}

/// Result of a reconstruction in the image frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub i1: Inducer,
    pub i2: Inducer,
    pub points: Vec<Point2>,
    /// Direct mean curve of the top-level gap, canonical frame. `None` when
    /// nothing matched.
    pub mean: Option<MeanCurve>,
    /// Matches for the top-level gap.
    pub m: usize,
    pub flags: CurveFlags,
}

impl Reconstruction {
    pub fn polyline(&self) -> Result<Polyline> {
        Polyline::new(self.points.clone())
    }
}

/// Averages curves after resampling each to `n` points. Covariance uses the
/// population (1/m) normalization.
pub fn mean_of_curves<'a, I>(curves: I, n: usize) -> Result<MeanCurve>
where
    I: IntoIterator<Item = &'a [Point2]>,
{
    let mut sum = vec![Point2::ORIGIN; n];
    let mut sq = vec![[0.0f64; 3]; n];
    let mut m = 0usize;
    for c in curves {
        let r = resample_points(c, n)?;
        for (k, p) in r.into_iter().enumerate() {
            sum[k] = sum[k] + p;
            sq[k][0] += p.x * p.x;
            sq[k][1] += p.x * p.y;
            sq[k][2] += p.y * p.y;
        }
        m += 1;
    }
    if m == 0 {
        return Err(Error::NoSamples);
    }
    let inv = 1.0 / m as f64;
    let points: Vec<Point2> = sum.iter().map(|&s| s * inv).collect();
    let covariance = points
        .iter()
        .zip(&sq)
        .map(|(mu, s)| {
            let xx = (s[0] * inv - mu.x * mu.x).max(0.0);
            let yy = (s[2] * inv - mu.y * mu.y).max(0.0);
            let xy = s[1] * inv - mu.x * mu.y;
            // clamp rounding so the matrix stays positive semidefinite
            let lim = (xx * yy).sqrt();
            let xy = xy.clamp(-lim, lim);
            [[xx, xy], [xy, yy]]
        })
        .collect();
    Ok(MeanCurve {
        points,
        covariance,
        m,
        flags: CurveFlags::default(),
    })
}

/// Points of a matched fragment mapped into the query's canonical frame.
pub fn aligned_fragment(prior: &Prior, mt: &Match) -> Vec<Point2> {
    let t = mt.align.compose(&prior.index.fragment(mt.id).to_canonical);
    t.apply_points(prior.fragment_points(mt.id))
}

/// Mean curve of the given matches, canonical frame.
pub fn mean_curve(prior: &Prior, matches: &[Match], n: usize) -> Result<MeanCurve> {
    let aligned: Vec<Vec<Point2>> = matches.iter().map(|mt| aligned_fragment(prior, mt)).collect();
    mean_of_curves(aligned.iter().map(Vec::as_slice), n)
}

fn query(prior: &Prior, config: &RelativeConfiguration, opts: &ReconstructOptions) -> Vec<Match> {
    if opts.scale_invariant {
        prior.index.query_scale_invariant(config, &opts.tolerances)
    } else {
        prior.index.query_same_scale(config, &opts.tolerances)
    }
}

/// Reconstructs the curve from `i1` to `i2`. Both tangents point into the gap.
pub fn reconstruct(prior: &Prior, i1: &Inducer, i2: &Inducer, opts: &ReconstructOptions) -> Result<Reconstruction> {
    opts.validate()?;
    let node = solve(prior, i1, i2, opts, 0)?;
    Ok(Reconstruction {
        i1: *i1,
        i2: *i2,
        points: node.points,
        mean: node.mean,
        m: node.m,
        flags: node.flags,
    })
}

struct Node {
    points: Vec<Point2>,
    mean: Option<MeanCurve>,
    m: usize,
    flags: CurveFlags,
}

fn solve(prior: &Prior, i1: &Inducer, i2: &Inducer, opts: &ReconstructOptions, depth: usize) -> Result<Node> {
    let frame = canonicalize(i1, i2)?;
    let matches = query(prior, &frame.config, opts);
    if matches.is_empty() {
        if !opts.fallback {
            return Err(Error::NoPrior);
        }
        let (poly, _) = complete_with_fallback(i1, i2, opts.n)?;
        let mut points = poly.into_points();
        snap(&mut points, i1, i2);
        return Ok(Node {
            points,
            mean: None,
            m: 0,
            flags: CurveFlags {
                fallback_used: true,
                ..CurveFlags::default()
            },
        });
    }
    let mut mean = mean_curve(prior, &matches, opts.n)?;
    mean.flags.scale_invariant_used = opts.scale_invariant;
    let mut points = frame.to_canonical.inverse().apply_points(&mean.points);
    snap(&mut points, i1, i2);
    let mut flags = mean.flags;

    if opts.midway && mean.m < opts.midway_threshold && depth < opts.max_depth {
        if let Ok((ext, sub)) = midway_extend(prior, i1, i2, &points, depth, opts) {
            points = ext;
            flags.merge(sub);
            flags.midway_extended = true;
        }
    }
    Ok(Node {
        points,
        m: mean.m,
        mean: Some(mean),
        flags,
    })
}

fn snap(points: &mut [Point2], i1: &Inducer, i2: &Inducer) {
    if let Some(p) = points.first_mut() {
        *p = i1.position;
    }
    if let Some(p) = points.last_mut() {
        *p = i2.position;
    }
}

/// Inducer at the arc-length midpoint of `provisional`, heading toward its
/// end. The tangent is the central difference of the resampled neighbors of
/// the middle sample.
pub fn midway_inducer(provisional: &[Point2], n: usize) -> Result<Inducer> {
    let poly = Polyline::new(provisional.to_vec())?;
    let pts = resample_arclength(&poly, n.max(3))?;
    let n = pts.len();
    let (lo, hi) = if (n - 1) % 2 == 0 {
        let c = (n - 1) / 2;
        (c - 1, c + 1)
    } else {
        (n / 2 - 1, n / 2)
    };
    let d = pts[hi] - pts[lo];
    if d.norm() == 0.0 {
        return Err(Error::DegenerateTangent);
    }
    Ok(Inducer::new(poly.midpoint(), d.angle()))
}

/// Splits the gap at the provisional curve's midpoint, reconstructs both
/// halves (each may split again until `max_depth`) and joins them into `n`
/// points. `provisional` is in the image frame.
pub fn midway_extend(
    prior: &Prior,
    i1: &Inducer,
    i2: &Inducer,
    provisional: &[Point2],
    depth: usize,
    opts: &ReconstructOptions,
) -> Result<(Vec<Point2>, CurveFlags)> {
    if depth >= opts.max_depth {
        return Err(Error::RecursionExhausted(depth));
    }
    let mid = midway_inducer(provisional, opts.n)?;
    if mid.position == i1.position || mid.position == i2.position {
        return Err(Error::CoincidentInducers);
    }
    let first = solve(prior, i1, &mid.flipped(), opts, depth + 1)?;
    let second = solve(prior, &mid, i2, opts, depth + 1)?;
    let mut joined = first.points;
    joined.extend_from_slice(&second.points[1..]);
    let mut out = resample_points(&joined, opts.n)?;
    snap(&mut out, i1, i2);
    let mut flags = first.flags;
    flags.merge(second.flags);
    Ok((out, flags))
}

/// Spread of unit-normalized curve centers across inducer distances for one
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleInvarianceReport {
    pub config: RelativeConfiguration,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    pub mu_s: Vec<Point2>,
    pub sigma_s: Vec<f64>,
    pub std_of_mu: f64,
    pub mean_of_sigma: f64,
}

/// For each scale `s` with at least `min_samples` same-scale matches at
/// `s · p_unit`, maps the matches to unit inducer distance and records the
/// mean `μ_s` and RMS radius `σ_s` of their arc-length midpoints.
///
/// `std_of_mu = sqrt(mean_s |μ_s - μ̄|²)` and `mean_of_sigma = mean_s σ_s`.
pub fn scale_invariance_analysis(
    prior: &Prior,
    p_unit: &RelativeConfiguration,
    scales: &[f64],
    tol: &QueryTolerances,
    min_samples: usize,
) -> Result<ScaleInvarianceReport> {
    let norm = p_unit.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidArgument("configuration at zero distance".into()));
    }
    let unit = p_unit.scaled(1.0 / norm);
    let mut report = ScaleInvarianceReport {
        config: unit,
        scales: Vec::new(),
        counts: Vec::new(),
        mu_s: Vec::new(),
        sigma_s: Vec::new(),
        std_of_mu: 0.0,
        mean_of_sigma: 0.0,
    };
    for &s in scales {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale {s}")));
        }
        let matches = prior.index.query_same_scale(&unit.scaled(s), tol);
        if matches.len() < min_samples.max(1) {
            continue;
        }
        let shrink = Similarity2::rotation_scale(0.0, 1.0 / s);
        let centers: Vec<Point2> = matches
            .iter()
            .filter_map(|mt| {
                let pts = shrink.apply_points(&aligned_fragment(prior, mt));
                Polyline::new(pts).ok().map(|p| p.midpoint())
            })
            .collect();
        if centers.is_empty() {
            continue;
        }
        let k = centers.len() as f64;
        let mu = centers.iter().fold(Point2::ORIGIN, |a, &c| a + c) * (1.0 / k);
        let sigma = (centers.iter().map(|c| (*c - mu).norm_sq()).sum::<f64>() / k).sqrt();
        report.scales.push(s);
        report.counts.push(centers.len());
        report.mu_s.push(mu);
        report.sigma_s.push(sigma);
    }
    let found = report.scales.len();
    if found < 2 {
        return Err(Error::InsufficientScales { found });
    }
    let k = found as f64;
    let bar = report.mu_s.iter().fold(Point2::ORIGIN, |a, &m| a + m) * (1.0 / k);
    report.std_of_mu = (report.mu_s.iter().map(|m| (*m - bar).norm_sq()).sum::<f64>() / k).sqrt();
    report.mean_of_sigma = report.sigma_s.iter().sum::<f64>() / k;
    Ok(report)
}
