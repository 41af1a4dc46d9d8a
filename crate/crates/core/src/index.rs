//! Canonical fragment frames and the relative-configuration index.
//!
//! Every fragment is moved into the frame of its first inducer (origin,
//! tangent along +X) and reflected so its second inducer lies on or below the
//! X axis. The pose of the second inducer in that frame is the fragment's
//! [`RelativeConfiguration`].
//!
//! Fragments are bucketed twice: a log-polar grid over `(ln |q|, φ, q_θ)` for
//! same-scale queries, whose tolerance is relative to `|p|`, and a polar grid
//! over `(φ, q_θ)` for scale-invariant queries. Both grids are dense CSR
//! tables; a query visits the cells covering its tolerance window plus one
//! cell of slack on each side and then applies the exact match predicate.

pub mod snapshot;

use std::f64::consts::{PI, TAU};
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{collect_fragments, inducers_of, CorpusConfig, CurveRecord, FragmentRef};
use crate::error::{Error, Result};
use crate::geometry::{angular_distance, normalize_angle, Inducer, Point2, Similarity2};

/// Pose of the second inducer in the canonical frame of the first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeConfiguration {
    pub p: Point2,
    pub theta: f64,
    pub reflected: bool,
}

impl RelativeConfiguration {
    pub fn norm(&self) -> f64 {
        self.p.norm()
    }

    /// Direction of `p` from the X axis, in [-π, 0].
    pub fn direction(&self) -> f64 {
        direction_of(self.p)
    }

    /// Same direction and orientation at another distance.
    pub fn scaled(&self, s: f64) -> RelativeConfiguration {
        RelativeConfiguration {
            p: self.p * s,
            ..*self
        }
    }

    /// Configuration of two horizontal inducers a unit apart, with tangent
    /// angles `theta1`, `theta2` measured from the chord running from the
    /// first inducer to the second. `theta1` must lie in [0, π].
    pub fn from_chord_angles(theta1: f64, theta2: f64) -> RelativeConfiguration {
        RelativeConfiguration {
            p: Point2::new(theta1.cos(), -theta1.sin()),
            theta: normalize_angle(theta2 - theta1),
            reflected: false,
        }
    }

    /// Inverse of [`from_chord_angles`](Self::from_chord_angles): `(θ1, θ2)`
    /// with θ1 in [0, π] and θ2 in [0, 2π).
    pub fn chord_angles(&self) -> (f64, f64) {
        let theta1 = -self.direction();
        (theta1, normalize_angle(self.theta + theta1))
    }
}

fn direction_of(p: Point2) -> f64 {
    let phi = p.angle();
    // p.y <= 0 for every canonical configuration; +0.0 with p.x < 0 gives +π
    if phi > 0.0 {
        phi - TAU
    } else {
        phi
    }
}

/// Canonical frame of an inducer pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalFrame {
    pub config: RelativeConfiguration,
    pub to_canonical: Similarity2,
}

/// Rigid motion (plus reflection when the second inducer lands above the X
/// axis) taking `i1` to the origin with zero heading.
pub fn canonicalize(i1: &Inducer, i2: &Inducer) -> Result<CanonicalFrame> {
    if i1.position == i2.position {
        return Err(Error::CoincidentInducers);
    }
    let rot = -i1.theta;
    let rigid = Similarity2 {
        rotation: rot,
        scale: 1.0,
        translation: -i1.position.rotate(rot),
        reflect: false,
    };
    let moved = rigid.apply_point(i2.position);
    let to_canonical = if moved.y > 0.0 {
        Similarity2::reflection().compose(&rigid)
    } else {
        rigid
    };
    let end = to_canonical.apply_inducer(i2);
    Ok(CanonicalFrame {
        config: RelativeConfiguration {
            p: end.position,
            theta: end.theta,
            reflected: to_canonical.reflect,
        },
        to_canonical,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalFragment {
    pub fragment: FragmentRef,
    pub config: RelativeConfiguration,
    pub to_canonical: Similarity2,
}

/// Canonicalizes one fragment of `curves`, estimating endpoint tangents over
/// `tangent_window` points.
pub fn canonicalize_fragment(
    curves: &[CurveRecord],
    f: FragmentRef,
    tangent_window: usize,
) -> Result<CanonicalFragment> {
    let (i1, i2) = inducers_of(f.points(curves), tangent_window)?;
    let frame = canonicalize(&i1, &i2)?;
    Ok(CanonicalFragment {
        fragment: f,
        config: frame.config,
        to_canonical: frame.to_canonical,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryTolerances {
    /// Same-scale: bound on `|p - q| / |p|`.
    pub t1_rel_dist: f64,
    /// Scale-invariant: bound on the angle between `p` and `q` (radians).
    pub t1_angle: f64,
    /// Bound on the angular distance between `p_θ` and `q_θ` (radians).
    pub t2_orient: f64,
}

impl Default for QueryTolerances {
    fn default() -> Self {
        QueryTolerances {
            t1_rel_dist: 0.05,
            t1_angle: 0.05,
            t2_orient: 0.10,
        }
    }
}

impl QueryTolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.t1_rel_dist, self.t1_angle, self.t2_orient]
            .iter()
            .all(|t| t.is_finite() && *t >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad tolerances {self:?}")))
        }
    }

    pub fn scaled(&self, k: f64) -> QueryTolerances {
        QueryTolerances {
            t1_rel_dist: self.t1_rel_dist * k,
            t1_angle: self.t1_angle * k,
            t2_orient: self.t2_orient * k,
        }
    }
}

/// Same-scale match predicate (bounds inclusive).
pub fn matches_same_scale(p: &RelativeConfiguration, q: &RelativeConfiguration, tol: &QueryTolerances) -> bool {
    (p.p - q.p).norm() <= tol.t1_rel_dist * p.norm()
        && angular_distance(p.theta, q.theta) <= tol.t2_orient
}

/// Scale-invariant match predicate (bounds inclusive).
pub fn matches_scale_invariant(
    p: &RelativeConfiguration,
    q: &RelativeConfiguration,
    tol: &QueryTolerances,
) -> bool {
    angular_distance(p.direction(), q.direction()) <= tol.t1_angle
        && angular_distance(p.theta, q.theta) <= tol.t2_orient
}

/// Rotation and scaling about the origin taking `q` exactly onto `p`.
pub fn alignment(p: Point2, q: Point2) -> Similarity2 {
    Similarity2::rotation_scale(p.angle() - q.angle(), p.norm() / q.norm())
}

/// Cell sizes of the two grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketParams {
    pub d_log_r: f64,
    pub d_phi: f64,
    pub d_theta: f64,
}

impl BucketParams {
    pub fn from_tolerances(tol: &QueryTolerances) -> Self {
        let pick = |t: f64, fallback: f64| if t > 0.0 { t } else { fallback };
        BucketParams {
            d_log_r: pick(tol.t1_rel_dist, 0.05),
            d_phi: pick(tol.t1_angle, 0.05),
            d_theta: pick(tol.t2_orient, 0.10),
        }
    }
}

impl Default for BucketParams {
    fn default() -> Self {
        BucketParams::from_tolerances(&QueryTolerances::default())
    }
}

/// Upper bound on same-scale grid cells; `d_log_r` is widened to respect it.
const MAX_CELLS: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GridShape {
    pub n_log_r: usize,
    pub n_phi: usize,
    pub n_theta: usize,
    pub log_r_min: f64,
    pub d_log_r: f64,
}

impl GridShape {
    fn new(params: &BucketParams, log_r: Option<(f64, f64)>) -> Self {
        let n_phi = ((PI / params.d_phi).floor() as usize).max(1);
        let n_theta = ((TAU / params.d_theta).floor() as usize).max(1);
        let (lo, hi) = log_r.unwrap_or((0.0, 0.0));
        let mut d_log_r = params.d_log_r;
        let mut n_log_r = ((hi - lo) / d_log_r).floor() as usize + 1;
        while n_log_r * n_phi * n_theta > MAX_CELLS {
            d_log_r *= 2.0;
            n_log_r = ((hi - lo) / d_log_r).floor() as usize + 1;
        }
        GridShape {
            n_log_r,
            n_phi,
            n_theta,
            log_r_min: lo,
            d_log_r,
        }
    }

    fn phi_width(&self) -> f64 {
        PI / self.n_phi as f64
    }

    fn theta_width(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    fn phi_cell_raw(&self, phi: f64) -> i64 {
        ((phi + PI) / self.phi_width()).floor() as i64
    }

    fn theta_cell_raw(&self, theta: f64) -> i64 {
        (theta / self.theta_width()).floor() as i64
    }

    fn log_r_cell_raw(&self, log_r: f64) -> i64 {
        ((log_r - self.log_r_min) / self.d_log_r).floor() as i64
    }

    fn clamp(i: i64, n: usize) -> usize {
        i.clamp(0, n as i64 - 1) as usize
    }

    fn cells_of(&self, c: &RelativeConfiguration) -> (usize, usize, usize) {
        (
            Self::clamp(self.log_r_cell_raw(c.norm().ln()), self.n_log_r),
            Self::clamp(self.phi_cell_raw(c.direction()), self.n_phi),
            Self::clamp(self.theta_cell_raw(c.theta), self.n_theta),
        )
    }

    fn scale_free_cell(&self, phi: usize, theta: usize) -> usize {
        phi * self.n_theta + theta
    }

    fn same_scale_cell(&self, log_r: usize, phi: usize, theta: usize) -> usize {
        (log_r * self.n_phi + phi) * self.n_theta + theta
    }

    fn phi_range(&self, phi: f64, half_width: f64) -> Range<usize> {
        if half_width >= PI {
            return 0..self.n_phi;
        }
        let lo = Self::clamp(self.phi_cell_raw(phi - half_width) - 1, self.n_phi);
        let hi = Self::clamp(self.phi_cell_raw(phi + half_width) + 1, self.n_phi);
        lo..hi + 1
    }

    fn theta_cells(&self, theta: f64, half_width: f64) -> Vec<usize> {
        let lo = self.theta_cell_raw(theta - half_width) - 1;
        let hi = self.theta_cell_raw(theta + half_width) + 1;
        if hi - lo + 1 >= self.n_theta as i64 {
            return (0..self.n_theta).collect();
        }
        (lo..=hi)
            .map(|i| i.rem_euclid(self.n_theta as i64) as usize)
            .collect()
    }

    fn log_r_range(&self, r: f64, rel: f64) -> Range<usize> {
        let lo = if rel >= 1.0 {
            0
        } else {
            Self::clamp(self.log_r_cell_raw((r * (1.0 - rel)).ln()) - 1, self.n_log_r)
        };
        let hi = Self::clamp(self.log_r_cell_raw((r * (1.0 + rel)).ln()) + 1, self.n_log_r);
        lo..hi + 1
    }
}

/// Compressed cell → entries table.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct Csr {
    pub offsets: Vec<u32>,
    pub entries: Vec<u32>,
}

impl Csr {
    fn build(n_cells: usize, cell_of: impl Fn(usize) -> usize, n_items: usize) -> Csr {
        let mut counts = vec![0u32; n_cells + 1];
        let cells: Vec<usize> = (0..n_items).map(&cell_of).collect();
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for k in 1..=n_cells {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut entries = vec![0u32; n_items];
        for (item, &c) in cells.iter().enumerate() {
            entries[fill[c] as usize] = item as u32;
            fill[c] += 1;
        }
        Csr {
            offsets: counts,
            entries,
        }
    }

    fn cell(&self, c: usize) -> &[u32] {
        &self.entries[self.offsets[c] as usize..self.offsets[c + 1] as usize]
    }

    fn n_cells(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }
}

/// A query hit: fragment id plus the fine alignment mapping its `q` onto `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub id: u32,
    pub align: Similarity2,
}

/// Frozen, read-only fragment index.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentIndex {
    params: BucketParams,
    fragments: Vec<CanonicalFragment>,
    pub(crate) shape: GridShape,
    pub(crate) same_scale: Csr,
    pub(crate) scale_free: Csr,
}

impl FragmentIndex {
    /// Buckets already-canonicalized fragments. Fragment ids are positions in
    /// `fragments`.
    pub fn build(fragments: Vec<CanonicalFragment>, params: BucketParams) -> FragmentIndex {
        let log_r = fragments.iter().map(|f| f.config.norm().ln()).fold(None, |acc, v| {
            Some(match acc {
                None => (v, v),
                Some((lo, hi)) => (f64::min(lo, v), f64::max(hi, v)),
            })
        });
        let shape = GridShape::new(&params, log_r);
        let cells: Vec<(usize, usize, usize)> =
            fragments.iter().map(|f| shape.cells_of(&f.config)).collect();
        let same_scale = Csr::build(
            shape.n_log_r * shape.n_phi * shape.n_theta,
            |i| {
                let (r, p, t) = cells[i];
                shape.same_scale_cell(r, p, t)
            },
            fragments.len(),
        );
        let scale_free = Csr::build(
            shape.n_phi * shape.n_theta,
            |i| {
                let (_, p, t) = cells[i];
                shape.scale_free_cell(p, t)
            },
            fragments.len(),
        );
        FragmentIndex {
            params,
            fragments,
            shape,
            same_scale,
            scale_free,
        }
    }

    pub(crate) fn from_parts(
        params: BucketParams,
        fragments: Vec<CanonicalFragment>,
        shape: GridShape,
        same_scale: Csr,
        scale_free: Csr,
    ) -> Result<FragmentIndex> {
        let n = fragments.len();
        let check = |csr: &Csr, cells: usize, name: &str| -> Result<()> {
            let ok = csr.n_cells() == cells
                && csr.entries.len() == n
                && csr.offsets.last().map(|&o| o as usize) == Some(n)
                && csr.offsets.windows(2).all(|w| w[0] <= w[1])
                && csr.entries.iter().all(|&e| (e as usize) < n);
            if ok {
                Ok(())
            } else {
                Err(Error::Snapshot(format!("inconsistent {name} table")))
            }
        };
        check(&same_scale, shape.n_log_r * shape.n_phi * shape.n_theta, "same-scale")?;
        check(&scale_free, shape.n_phi * shape.n_theta, "scale-free")?;
        Ok(FragmentIndex {
            params,
            fragments,
            shape,
            same_scale,
            scale_free,
        })
    }

    pub fn params(&self) -> &BucketParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn fragments(&self) -> &[CanonicalFragment] {
        &self.fragments
    }

    pub fn fragment(&self, id: u32) -> &CanonicalFragment {
        &self.fragments[id as usize]
    }

    /// Fragments matching `p` at its own scale, sorted by id. `p` must be
    /// canonical (`p.y <= 0`), as produced by [`canonicalize`].
    pub fn query_same_scale(&self, p: &RelativeConfiguration, tol: &QueryTolerances) -> Vec<Match> {
        if self.fragments.is_empty() || p.norm() <= 0.0 {
            return Vec::new();
        }
        let t1 = tol.t1_rel_dist;
        let phi_half = if t1 < 1.0 { t1.asin() } else { PI };
        let thetas = self.shape.theta_cells(p.theta, tol.t2_orient);
        let mut out = Vec::new();
        for r in self.shape.log_r_range(p.norm(), t1) {
            for ph in self.shape.phi_range(p.direction(), phi_half) {
                for &th in &thetas {
                    let cell = self.shape.same_scale_cell(r, ph, th);
                    self.collect(self.same_scale.cell(cell), p, &mut out, |q| {
                        matches_same_scale(p, q, tol)
                    });
                }
            }
        }
        out.sort_unstable_by_key(|m| m.id);
        out
    }

    /// Fragments matching the direction and orientation of `p` at any scale,
    /// sorted by id. `p` must be canonical.
    pub fn query_scale_invariant(&self, p: &RelativeConfiguration, tol: &QueryTolerances) -> Vec<Match> {
        if self.fragments.is_empty() || p.norm() <= 0.0 {
            return Vec::new();
        }
        let thetas = self.shape.theta_cells(p.theta, tol.t2_orient);
        let mut out = Vec::new();
        for ph in self.shape.phi_range(p.direction(), tol.t1_angle) {
            for &th in &thetas {
                let cell = self.shape.scale_free_cell(ph, th);
                self.collect(self.scale_free.cell(cell), p, &mut out, |q| {
                    matches_scale_invariant(p, q, tol)
                });
            }
        }
        out.sort_unstable_by_key(|m| m.id);
        out
    }

    fn collect(
        &self,
        ids: &[u32],
        p: &RelativeConfiguration,
        out: &mut Vec<Match>,
        pred: impl Fn(&RelativeConfiguration) -> bool,
    ) {
        for &id in ids {
            let q = &self.fragments[id as usize].config;
            if pred(q) {
                out.push(Match {
                    id,
                    align: alignment(p.p, q.p),
                });
            }
        }
    }

    /// Entry counts of the non-empty cells of both grids.
    pub fn occupancy(&self) -> (Vec<usize>, Vec<usize>) {
        let counts = |csr: &Csr| {
            csr.offsets
                .windows(2)
                .map(|w| (w[1] - w[0]) as usize)
                .filter(|&c| c > 0)
                .collect()
        };
        (counts(&self.same_scale), counts(&self.scale_free))
    }
}

/// Curves plus the index built over their fragments.
#[derive(Debug, Clone)]
pub struct Prior {
    pub curves: Vec<CurveRecord>,
    pub corpus: CorpusConfig,
    pub index: FragmentIndex,
    /// Fragments dropped for degenerate tangents or coincident endpoints.
    pub skipped: usize,
}

impl Prior {
    pub fn build(curves: Vec<CurveRecord>, corpus: CorpusConfig, params: BucketParams) -> Result<Prior> {
        corpus.validate()?;
        let refs = collect_fragments(&curves, &corpus);
        let canon: Vec<Option<CanonicalFragment>> = refs
            .par_iter()
            .map(|&f| canonicalize_fragment(&curves, f, corpus.tangent_window).ok())
            .collect();
        let total = canon.len();
        let fragments: Vec<CanonicalFragment> = canon.into_iter().flatten().collect();
        let skipped = total - fragments.len();
        if fragments.len() > u32::MAX as usize {
            return Err(Error::InvalidArgument(
                "more than 2^32 fragments; raise fragment_stride or set max_fragments".into(),
            ));
        }
        Ok(Prior {
            index: FragmentIndex::build(fragments, params),
            curves,
            corpus,
            skipped,
        })
    }

    /// Points of fragment `id` in the image frame.
    pub fn fragment_points(&self, id: u32) -> &[Point2] {
        self.index.fragment(id).fragment.points(&self.curves)
    }
}
