//! Curve datasets: loading and writing, fragment enumeration, endpoint
//! tangent estimation and synthetic corpora.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Inducer, Point2, Polyline};

/// Fewest distinct points a curve needs for tangents at both ends.
pub const MIN_CURVE_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRecord {
    pub curve_id: u64,
    pub image_id: String,
    pub poly: Polyline,
}

impl CurveRecord {
    pub fn points(&self) -> &[Point2] {
        self.poly.points()
    }
}

/// Result of loading a corpus file.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub curves: Vec<CurveRecord>,
    /// Curves dropped for having fewer than [`MIN_CURVE_POINTS`] distinct points.
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveFormat {
    /// `CURVES v1` text format.
    Canonical,
    /// Contour blocks of `.cem` curve-fragment annotation files; a directory
    /// path loads every `.cem` file in it, one image per file.
    Cem,
}

impl FromStr for CurveFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" | "curves" => Ok(CurveFormat::Canonical),
            "cem" | "cfgd" => Ok(CurveFormat::Cem),
            other => Err(Error::InvalidArgument(format!("unknown curve format {other:?}"))),
        }
    }
}

pub fn load_curves(path: &Path, format: CurveFormat) -> Result<LoadedCorpus> {
    let loaded = match format {
        CurveFormat::Canonical => read_canonical(BufReader::new(fs::File::open(path)?))?,
        CurveFormat::Cem => load_cem(path)?,
    };
    if loaded.curves.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(loaded)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses the canonical text format. Blank lines are ignored.
pub fn read_canonical<R: BufRead>(reader: R) -> Result<LoadedCorpus> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));

    match lines.next() {
        Some((_, Ok(h))) if h.trim() == "CURVES v1" => {}
        Some((n, Ok(h))) => return Err(parse_err(n, format!("bad header {h:?}"))),
        Some((_, Err(e))) => return Err(e.into()),
        None => return Err(Error::EmptyCorpus),
    }

    let mut curves = Vec::new();
    let mut skipped = 0;
    while let Some((lineno, line)) = lines.next() {
        let line = line?;
        let mut fields = line.split_whitespace();
        if fields.next() != Some("curve") {
            return Err(parse_err(lineno, format!("expected curve header, got {line:?}")));
        }
        let (Some(id), Some(image), Some(count), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(parse_err(lineno, "curve header needs <id> <image_id> <n_points>"));
        };
        let curve_id: u64 = id
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad curve id {id:?}")))?;
        let count: usize = count
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad point count {count:?}")))?;

        let mut pts = Vec::with_capacity(count);
        for _ in 0..count {
            let Some((pl, pline)) = lines.next() else {
                return Err(parse_err(lineno, format!("curve {curve_id} truncated")));
            };
            let pline = pline?;
            let mut xy = pline.split_whitespace().map(f64::from_str);
            match (xy.next(), xy.next(), xy.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => {
                    pts.push(Point2::checked(x, y).map_err(|_| parse_err(pl, "non-finite coordinate"))?)
                }
                _ => return Err(parse_err(pl, format!("expected \"<x> <y>\", got {pline:?}"))),
            }
        }
        match make_record(curve_id, image.to_string(), pts) {
            Some(rec) => curves.push(rec),
            None => skipped += 1,
        }
    }
    Ok(LoadedCorpus { curves, skipped })
}

fn make_record(curve_id: u64, image_id: String, pts: Vec<Point2>) -> Option<CurveRecord> {
    let poly = Polyline::new(pts).ok()?;
    (poly.len() >= MIN_CURVE_POINTS).then_some(CurveRecord {
        curve_id,
        image_id,
        poly,
    })
}

pub fn write_canonical<W: Write>(mut w: W, curves: &[CurveRecord]) -> Result<()> {
    writeln!(w, "CURVES v1")?;
    for c in curves {
        writeln!(w, "curve {} {} {}", c.curve_id, c.image_id, c.poly.len())?;
        for p in c.points() {
            writeln!(w, "{} {}", p.x, p.y)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_curves(path: &Path, curves: &[CurveRecord]) -> Result<()> {
    write_canonical(std::io::BufWriter::new(fs::File::create(path)?), curves)
}

fn load_cem(path: &Path) -> Result<LoadedCorpus> {
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in fs::read_dir(path)? {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("cem")) {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    let mut out = LoadedCorpus {
        curves: Vec::new(),
        skipped: 0,
    };
    for f in files {
        let image_id = f
            .file_stem()
            .map(|s| s.to_string_lossy().replace(char::is_whitespace, "_"))
            .unwrap_or_else(|| "image".to_string());
        let mut text = String::new();
        fs::File::open(&f)?.read_to_string(&mut text)?;
        let first_id = out.curves.len() as u64 + out.skipped as u64;
        let contours = parse_cem_contours(&text)?;
        for (k, pts) in contours.into_iter().enumerate() {
            match make_record(first_id + k as u64, image_id.clone(), pts) {
                Some(rec) => out.curves.push(rec),
                None => out.skipped += 1,
            }
        }
    }
    Ok(out)
}

/// Extracts contour point lists from `.cem` text. Each edge line inside a
/// `[BEGIN CONTOUR]` block carries bracketed coordinate pairs; the sub-pixel
/// position (second pair) is used when present, else the first pair.
pub fn parse_cem_contours(text: &str) -> Result<Vec<Vec<Point2>>> {
    let mut contours = Vec::new();
    let mut current: Option<Vec<Point2>> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        if upper.starts_with("[BEGIN CONTOUR]") {
            current = Some(Vec::new());
            continue;
        }
        if upper.starts_with("[END CONTOUR]") {
            if let Some(c) = current.take() {
                contours.push(c);
            }
            continue;
        }
        let Some(cur) = current.as_mut() else {
            continue;
        };
        if !line.starts_with('[') || upper.starts_with("EDGE_COUNT") {
            continue;
        }
        let pairs: Vec<Point2> = bracket_groups(line)
            .filter_map(|g| {
                let nums: Vec<f64> = g
                    .split([',', ' '])
                    .filter(|s| !s.is_empty())
                    .map(f64::from_str)
                    .collect::<std::result::Result<_, _>>()
                    .ok()?;
                (nums.len() == 2).then(|| Point2::new(nums[0], nums[1]))
            })
            .collect();
        match pairs.as_slice() {
            [] => {}
            [p] => cur.push(*p),
            [_, sub, ..] => cur.push(*sub),
        }
        if cur.last().is_some_and(|p| !p.is_finite()) {
            return Err(parse_err(i + 1, "non-finite coordinate"));
        }
    }
    Ok(contours)
}

fn bracket_groups(line: &str) -> impl Iterator<Item = &str> {
    line.split('[').skip(1).filter_map(|s| s.split_once(']').map(|(g, _)| g.trim()))
}

/// Controls fragment enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub min_fragment_points: usize,
    pub fragment_stride: usize,
    pub tangent_window: usize,
    /// Optional cap; fragments beyond it are reservoir-sampled with `seed`.
    pub max_fragments: Option<usize>,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            min_fragment_points: 4,
            fragment_stride: 1,
            tangent_window: 3,
            max_fragments: None,
            seed: 0,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_fragment_points < 2 || self.fragment_stride == 0 || self.tangent_window < 2 {
            return Err(Error::InvalidArgument(format!(
                "corpus config needs min_fragment_points >= 2, stride >= 1, tangent_window >= 2: {self:?}"
            )));
        }
        if self.max_fragments == Some(0) {
            return Err(Error::InvalidArgument("max_fragments must be positive".into()));
        }
        Ok(())
    }
}

/// A sub-curve `points[start..=end]` of curve number `curve` (its position in
/// the curve list, not its `curve_id`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FragmentRef {
    pub curve: u32,
    pub start: u32,
    pub end: u32,
}

impl FragmentRef {
    pub fn points<'a>(&self, curves: &'a [CurveRecord]) -> &'a [Point2] {
        &curves[self.curve as usize].points()[self.start as usize..=self.end as usize]
    }
}

/// Number of fragments a curve of `n_points` yields under `cfg` (cap ignored).
pub fn fragment_count(n_points: usize, cfg: &CorpusConfig) -> usize {
    let span = cfg.min_fragment_points.saturating_sub(1);
    (0..n_points)
        .step_by(cfg.fragment_stride)
        .map(|i| {
            let first = i + span;
            if first >= n_points {
                0
            } else {
                (n_points - 1 - first) / cfg.fragment_stride + 1
            }
        })
        .sum()
}

/// Lazily enumerates every fragment `(i, j)` with `j - i >= min_fragment_points - 1`.
pub fn enumerate_fragments<'a>(
    curves: &'a [CurveRecord],
    cfg: &CorpusConfig,
) -> impl Iterator<Item = FragmentRef> + 'a {
    let span = cfg.min_fragment_points.saturating_sub(1).max(1);
    let stride = cfg.fragment_stride.max(1);
    curves.iter().enumerate().flat_map(move |(c, rec)| {
        let n = rec.poly.len();
        (0..n).step_by(stride).flat_map(move |i| {
            (i + span..n).step_by(stride).map(move |j| FragmentRef {
                curve: c as u32,
                start: i as u32,
                end: j as u32,
            })
        })
    })
}

/// All fragments, or a seeded uniform sample of `max_fragments` of them
/// (returned in enumeration order).
pub fn collect_fragments(curves: &[CurveRecord], cfg: &CorpusConfig) -> Vec<FragmentRef> {
    let all = enumerate_fragments(curves, cfg);
    match cfg.max_fragments {
        None => all.collect(),
        Some(cap) => {
            let total: usize = curves.iter().map(|c| fragment_count(c.poly.len(), cfg)).sum();
            if total <= cap {
                return all.collect();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut keep = sample_indices(&mut rng, total, cap).into_vec();
            keep.sort_unstable();
            let mut it = keep.into_iter().peekable();
            all.enumerate()
                .filter(|(k, _)| it.next_if_eq(k).is_some())
                .map(|(_, f)| f)
                .collect()
        }
    }
}

/// Direction of the total-least-squares line through `pts`, oriented along
/// the traversal order. `None` when all points coincide.
pub fn fit_direction(pts: &[Point2]) -> Option<Point2> {
    let n = pts.len() as f64;
    let c = pts.iter().fold(Point2::ORIGIN, |a, &p| a + p) * (1.0 / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &p in pts {
        let d = p - c;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    if sxx + syy <= 0.0 {
        return None;
    }
    let dir = Point2::from_angle(0.5 * (2.0 * sxy).atan2(sxx - syy));
    let mut along = pts[pts.len() - 1] - pts[0];
    if along.dot(dir) == 0.0 {
        along = pts
            .windows(2)
            .map(|w| w[1] - w[0])
            .find(|d| d.dot(dir) != 0.0)
            .unwrap_or(dir);
    }
    Some(if along.dot(dir) < 0.0 { -dir } else { dir })
}

/// Oriented endpoints of a fragment, tangents pointing into the fragment.
pub fn endpoint_inducers(
    curve: &CurveRecord,
    f: FragmentRef,
    tangent_window: usize,
) -> Result<(Inducer, Inducer)> {
    let pts = &curve.points()[f.start as usize..=f.end as usize];
    inducers_of(pts, tangent_window)
}

/// Same as [`endpoint_inducers`] on a bare point slice.
pub fn inducers_of(pts: &[Point2], tangent_window: usize) -> Result<(Inducer, Inducer)> {
    if pts.len() < 2 {
        return Err(Error::DegenerateTangent);
    }
    let k = tangent_window.clamp(2, pts.len());
    let head = fit_direction(&pts[..k]).ok_or(Error::DegenerateTangent)?;
    let tail: Vec<Point2> = pts[pts.len() - k..].iter().rev().copied().collect();
    let back = fit_direction(&tail).ok_or(Error::DegenerateTangent)?;
    Ok((
        Inducer::new(pts[0], head.angle()),
        Inducer::new(pts[pts.len() - 1], back.angle()),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthFamily {
    CircularArcs,
    Lines,
    SmoothedRandomWalks,
}

impl FromStr for SynthFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "circular_arcs" | "arcs" => Ok(SynthFamily::CircularArcs),
            "lines" => Ok(SynthFamily::Lines),
            "smoothed_random_walks" | "walks" => Ok(SynthFamily::SmoothedRandomWalks),
            _ => Err(Error::InvalidArgument(format!("unknown synthetic family {s:?}"))),
        }
    }
}

impl std::fmt::Display for SynthFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SynthFamily::CircularArcs => "circular_arcs",
            SynthFamily::Lines => "lines",
            SynthFamily::SmoothedRandomWalks => "smoothed_random_walks",
        })
    }
}

/// Curves per synthetic image.
pub const SYNTH_CURVES_PER_IMAGE: usize = 8;
const CANVAS: f64 = 512.0;

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Deterministic synthetic corpus.
///
/// * `CircularArcs`: log-uniform radius in [4, 1000] px, subtended angle
///   uniform in [π/6, 3π/2], 10..=24 points equally spaced in angle. Shape
///   statistics are the same at every scale away from the radius limits.
/// * `Lines`: straight runs of 8..=24 equally spaced points, length
///   log-uniform in [10, 400] px.
/// * `SmoothedRandomWalks`: heading driven by an AR(1) turning-rate process,
///   16..=40 points, step log-uniform in [1.5, 12] px.
pub fn synth_corpus(seed: u64, n_curves: usize, family: SynthFamily) -> Vec<CurveRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..n_curves)
        .map(|k| {
            let pts = match family {
                SynthFamily::CircularArcs => synth_arc(&mut rng),
                SynthFamily::Lines => synth_line(&mut rng),
                SynthFamily::SmoothedRandomWalks => synth_walk(&mut rng),
            };
            CurveRecord {
                curve_id: k as u64,
                image_id: format!("synth-{:05}", k / SYNTH_CURVES_PER_IMAGE),
                poly: Polyline::new(pts).expect("synthetic curves have distinct points"),
            }
        })
        .collect()
}

fn synth_arc<R: Rng>(rng: &mut R) -> Vec<Point2> {
    use std::f64::consts::PI;
    let radius = log_uniform(rng, 4.0, 1000.0);
    let sweep = rng.random_range(PI / 6.0..1.5 * PI);
    let n = rng.random_range(10..=24usize);
    let start = rng.random_range(0.0..2.0 * PI);
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let center = Point2::new(rng.random_range(0.0..CANVAS), rng.random_range(0.0..CANVAS));
    (0..n)
        .map(|i| {
            let a = start + sign * sweep * i as f64 / (n - 1) as f64;
            center + Point2::from_angle(a) * radius
        })
        .collect()
}

fn synth_line<R: Rng>(rng: &mut R) -> Vec<Point2> {
    use std::f64::consts::PI;
    let len = log_uniform(rng, 10.0, 400.0);
    let n = rng.random_range(8..=24usize);
    let dir = Point2::from_angle(rng.random_range(0.0..2.0 * PI));
    let origin = Point2::new(rng.random_range(0.0..CANVAS), rng.random_range(0.0..CANVAS));
    (0..n)
        .map(|i| origin + dir * (len * i as f64 / (n - 1) as f64))
        .collect()
}

fn synth_walk<R: Rng>(rng: &mut R) -> Vec<Point2> {
    use std::f64::consts::PI;
    let n = rng.random_range(16..=40usize);
    let step = log_uniform(rng, 1.5, 12.0);
    let mut heading = rng.random_range(0.0..2.0 * PI);
    let mut turn = 0.0f64;
    let mut p = Point2::new(rng.random_range(0.0..CANVAS), rng.random_range(0.0..CANVAS));
    let mut raw = Vec::with_capacity(n + 2);
    raw.push(p);
    for _ in 0..n + 1 {
        let eps: f64 = rng.sample(StandardNormal);
        turn = 0.85 * turn + 0.09 * eps;
        heading += turn;
        p = p + Point2::from_angle(heading) * step;
        raw.push(p);
    }
    // light 3-tap smoothing of the positions; drops the two ends
    raw.windows(3)
        .map(|w| (w[0] + w[1] * 2.0 + w[2]) * 0.25)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn record(pts: Vec<Point2>) -> CurveRecord {
        CurveRecord {
            curve_id: 0,
            image_id: "img".into(),
            poly: Polyline::new(pts).unwrap(),
        }
    }

    fn straight(n: usize) -> CurveRecord {
        record((0..n).map(|i| Point2::new(i as f64, 0.0)).collect())
    }

    #[test]
    fn enumerate_five_points() {
        let curves = vec![straight(5)];
        let frags: Vec<(u32, u32)> = enumerate_fragments(&curves, &CorpusConfig::default())
            .map(|f| (f.start, f.end))
            .collect();
        assert_eq!(frags, vec![(0, 3), (0, 4), (1, 4)]);
    }

    #[test]
    fn enumerate_four_points() {
        let curves = vec![straight(4)];
        let frags: Vec<FragmentRef> =
            enumerate_fragments(&curves, &CorpusConfig::default()).collect();
        assert_eq!(frags.len(), 1);
        assert_eq!((frags[0].start, frags[0].end), (0, 3));
    }

    #[test]
    fn fragment_count_formula() {
        let cfg = CorpusConfig::default();
        for p in 4..40 {
            assert_eq!(fragment_count(p, &cfg), (p - 3) * (p - 2) / 2);
            let curves = vec![straight(p)];
            assert_eq!(enumerate_fragments(&curves, &cfg).count(), fragment_count(p, &cfg));
        }
        let strided = CorpusConfig {
            fragment_stride: 3,
            ..cfg
        };
        for p in 4..30 {
            let curves = vec![straight(p)];
            assert_eq!(
                enumerate_fragments(&curves, &strided).count(),
                fragment_count(p, &strided)
            );
        }
    }

    #[test]
    fn capped_collection_is_seeded_subset() {
        let curves = synth_corpus(3, 20, SynthFamily::Lines);
        let cfg = CorpusConfig {
            max_fragments: Some(100),
            seed: 11,
            ..Default::default()
        };
        let a = collect_fragments(&curves, &cfg);
        let b = collect_fragments(&curves, &cfg);
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        let all: Vec<FragmentRef> = enumerate_fragments(&curves, &cfg).collect();
        assert!(a.iter().all(|f| all.contains(f)));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn straight_fragment_inducers_face_each_other() {
        let c = straight(6);
        let f = FragmentRef { curve: 0, start: 0, end: 5 };
        let (a, b) = endpoint_inducers(&c, f, 3).unwrap();
        assert!(a.theta.abs() < 1e-12);
        assert!((b.theta - PI).abs() < 1e-12);

        let rev = record(c.points().iter().rev().copied().collect());
        let (a, b) = endpoint_inducers(&rev, f, 3).unwrap();
        assert!((a.theta - PI).abs() < 1e-12);
        assert!(b.theta.abs() < 1e-12 || (b.theta - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn quarter_circle_tangents() {
        let n = 31;
        let step = (PI / 2.0) / (n - 1) as f64;
        let c = record((0..n).map(|i| Point2::from_angle(i as f64 * step)).collect());
        let k = 3;
        let f = FragmentRef { curve: 0, start: 0, end: (n - 1) as u32 };
        let (a, b) = endpoint_inducers(&c, f, k).unwrap();
        // a centred least-squares line over k samples is tilted by (k-1)/2 steps
        let tol = (k - 1) as f64 / 2.0 * step * 1.01;
        assert!(crate::geometry::angular_distance(a.theta, PI / 2.0) <= tol);
        assert!(crate::geometry::angular_distance(b.theta, 0.0) <= tol);
        assert!(a.position.distance(Point2::new(1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn reversed_fragment_gives_same_inducer_pair() {
        let curves = synth_corpus(5, 10, SynthFamily::SmoothedRandomWalks);
        for c in &curves {
            let n = c.poly.len();
            let pts = c.points();
            let (a, b) = inducers_of(pts, 3).unwrap();
            let rev: Vec<Point2> = pts.iter().rev().copied().collect();
            let (ra, rb) = inducers_of(&rev, 3).unwrap();
            assert_eq!(a.position, rb.position);
            assert_eq!(b.position, ra.position);
            assert!(crate::geometry::angular_distance(a.theta, rb.theta) < 1e-9);
            assert!(crate::geometry::angular_distance(b.theta, ra.theta) < 1e-9);
            assert!(n >= MIN_CURVE_POINTS);
        }
    }

    #[test]
    fn degenerate_tangent_window() {
        assert!(fit_direction(&[Point2::new(1.0, 1.0); 3]).is_none());
    }

    #[test]
    fn canonical_round_trip_and_skips() {
        let curves = synth_corpus(1, 5, SynthFamily::SmoothedRandomWalks);
        let mut buf = Vec::new();
        write_canonical(&mut buf, &curves).unwrap();
        let loaded = read_canonical(buf.as_slice()).unwrap();
        assert_eq!(loaded.skipped, 0);
        assert_eq!(loaded.curves, curves);

        let text = "CURVES v1\ncurve 1 a 3\n0 0\n1 0\n2 0\ncurve 2 a 4\n0 0\n1 0\n2 0\n3 1\n";
        let loaded = read_canonical(text.as_bytes()).unwrap();
        assert_eq!(loaded.skipped, 1);
        assert_eq!(loaded.curves.len(), 1);
        assert_eq!(loaded.curves[0].curve_id, 2);
    }

    #[test]
    fn canonical_two_curves_of_ten() {
        let mut text = String::from("CURVES v1\n");
        for id in 0..2 {
            text.push_str(&format!("curve {id} img{id} 10\n"));
            for i in 0..10 {
                text.push_str(&format!("{} {}\n", i, (i * i) as f64 * 0.1));
            }
        }
        assert_eq!(read_canonical(text.as_bytes()).unwrap().curves.len(), 2);
    }

    #[test]
    fn canonical_parse_errors_carry_line() {
        let text = "CURVES v1\ncurve 1 a 2\n0 0\n1 zz\n";
        match read_canonical(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            read_canonical("CURVES v2\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        let truncated = "CURVES v1\ncurve 1 a 5\n0 0\n";
        assert!(matches!(read_canonical(truncated.as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        std::fs::write(&p, "CURVES v1\ncurve 1 a 2\n0 0\n1 1\n").unwrap();
        assert!(matches!(load_curves(&p, CurveFormat::Canonical), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn cem_contours() {
        let text = "\
# header
[BEGIN EDGEMAP]
[END EDGEMAP]
[BEGIN CONTOUR]
EDGE_COUNT=4
[0] [10, 20]  0.5 1 [10.2, 20.1] 0.5 1 0
[1] [11, 20]  0.5 1 [11.1, 20.2] 0.5 1 0
[2] [12, 21]  0.5 1 [12.3, 21.0] 0.5 1 0
[3] [13, 22]  0.5 1 [13.0, 22.4] 0.5 1 0
[END CONTOUR]
";
        let c = parse_cem_contours(text).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].len(), 4);
        assert_eq!(c[0][0], Point2::new(10.2, 20.1));
    }

    #[test]
    fn synth_is_deterministic() {
        for fam in [SynthFamily::CircularArcs, SynthFamily::Lines, SynthFamily::SmoothedRandomWalks] {
            assert_eq!(synth_corpus(42, 30, fam), synth_corpus(42, 30, fam));
            assert_ne!(synth_corpus(42, 30, fam), synth_corpus(43, 30, fam));
        }
    }

    #[test]
    fn synth_arcs_fragment_count_matches_formula() {
        let curves = synth_corpus(7, 50, SynthFamily::CircularArcs);
        let cfg = CorpusConfig::default();
        let expected: usize = curves
            .iter()
            .map(|c| {
                let p = c.poly.len();
                (p - 3) * (p - 2) / 2
            })
            .sum();
        assert_eq!(enumerate_fragments(&curves, &cfg).count(), expected);
    }
}
