//! Reconstruction benchmark: image-level train/test split, scale-stratified
//! sampling of test fragments, relative reconstruction error (RRE), and the
//! accuracy-vs-threshold curve (ARC) with its mean (AUC).

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::complete_with_fallback;
use crate::corpus::{enumerate_fragments, inducers_of, CorpusConfig, CurveRecord, FragmentRef};
use crate::error::{Error, Result};
use crate::geometry::{discrete_frechet, resample_points, Inducer, Point2};
use crate::index::{canonicalize, Prior, RelativeConfiguration};
use crate::reconstruct::{reconstruct, ReconstructOptions};

/// Number of ARC thresholds: τ = 0.00, 0.01, ..., 1.00.
pub const ARC_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub test_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            seed: 0,
            test_fraction: 0.10,
        }
    }
}

/// Number of test images for `n_images`: round half up, at least one, and at
/// least one image left for training.
pub fn test_image_count(n_images: usize, fraction: f64) -> usize {
    let k = (fraction * n_images as f64 + 0.5).floor() as usize;
    k.max(1).min(n_images.saturating_sub(1))
}

/// Partitions curves by image. Curve order is preserved in both halves.
pub fn split_corpus(curves: &[CurveRecord], spec: &SplitSpec) -> Result<(Vec<CurveRecord>, Vec<CurveRecord>)> {
    if !(0.0..=1.0).contains(&spec.test_fraction) {
        return Err(Error::InvalidArgument(format!("test_fraction {}", spec.test_fraction)));
    }
    let images: BTreeSet<&str> = curves.iter().map(|c| c.image_id.as_str()).collect();
    if images.len() < 2 {
        return Err(Error::TooFewImages(images.len()));
    }
    let mut images: Vec<&str> = images.into_iter().collect();
    images.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let n_test = test_image_count(images.len(), spec.test_fraction);
    let test_images: BTreeSet<&str> = images[..n_test].iter().copied().collect();
    let (test, train): (Vec<CurveRecord>, Vec<CurveRecord>) = curves
        .iter()
        .cloned()
        .partition(|c| test_images.contains(c.image_id.as_str()));
    Ok((train, test))
}

/// True when no image contributes curves to both sets.
pub fn images_disjoint(train: &[CurveRecord], test: &[CurveRecord]) -> bool {
    let a: BTreeSet<&str> = train.iter().map(|c| c.image_id.as_str()).collect();
    test.iter().all(|c| !a.contains(c.image_id.as_str()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub id: usize,
    pub curve_id: u64,
    pub image_id: String,
    /// Fragment position within the test curve list.
    pub fragment: FragmentRef,
    pub i1: Inducer,
    pub i2: Inducer,
    /// Inducer distance.
    pub scale: f64,
    pub config: RelativeConfiguration,
    /// Ground truth resampled to `n` points.
    pub ground_truth: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    /// `"uniform_by_scale"` or `"difficult"`.
    pub kind: String,
    pub bins: usize,
    pub min_scale: f64,
    pub max_scale: f64,
    pub seed: u64,
    /// Candidate fragments considered.
    pub population: usize,
    /// Candidates passing the selection predicate.
    pub eligible: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSet {
    pub records: Vec<BenchmarkRecord>,
    pub n: usize,
    pub sampling: Sampling,
}

impl BenchmarkSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

struct Candidate {
    fragment: FragmentRef,
    i1: Inducer,
    i2: Inducer,
    scale: f64,
    config: RelativeConfiguration,
}

fn candidates<'a>(curves: &'a [CurveRecord], cfg: &'a CorpusConfig) -> impl Iterator<Item = Candidate> + 'a {
    enumerate_fragments(curves, cfg).filter_map(move |f| {
        let (i1, i2) = inducers_of(f.points(curves), cfg.tangent_window).ok()?;
        let frame = canonicalize(&i1, &i2).ok()?;
        Some(Candidate {
            fragment: f,
            i1,
            i2,
            scale: i1.position.distance(i2.position),
            config: frame.config,
        })
    })
}

fn into_record(id: usize, c: Candidate, curves: &[CurveRecord], n: usize) -> Result<BenchmarkRecord> {
    let rec = &curves[c.fragment.curve as usize];
    Ok(BenchmarkRecord {
        id,
        curve_id: rec.curve_id,
        image_id: rec.image_id.clone(),
        fragment: c.fragment,
        i1: c.i1,
        i2: c.i2,
        scale: c.scale,
        config: c.config,
        ground_truth: resample_points(c.fragment.points(curves), n)?,
    })
}

/// Uniform reservoir of `quota` items (algorithm R).
struct Reservoir {
    quota: usize,
    seen: usize,
    items: Vec<Candidate>,
}

impl Reservoir {
    fn new(quota: usize) -> Self {
        Reservoir {
            quota,
            seen: 0,
            items: Vec::with_capacity(quota),
        }
    }

    fn offer(&mut self, c: Candidate, rng: &mut ChaCha8Rng) {
        self.seen += 1;
        if self.items.len() < self.quota {
            self.items.push(c);
        } else if self.quota > 0 {
            let j = rng.random_range(0..self.seen);
            if j < self.quota {
                self.items[j] = c;
            }
        }
    }
}

fn finish(
    reservoirs: Vec<Reservoir>,
    curves: &[CurveRecord],
    n: usize,
    sampling: Sampling,
) -> Result<BenchmarkSet> {
    for (bin, r) in reservoirs.iter().enumerate() {
        if r.items.len() < r.quota {
            return Err(Error::BinUnderflow {
                bin,
                available: r.items.len(),
                needed: r.quota,
            });
        }
    }
    let mut picked: Vec<Candidate> = reservoirs.into_iter().flat_map(|r| r.items).collect();
    picked.sort_by_key(|c| (c.fragment.curve, c.fragment.start, c.fragment.end));
    let records = picked
        .into_iter()
        .enumerate()
        .map(|(id, c)| into_record(id, c, curves, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkSet { records, n, sampling })
}

/// Samples `count` test fragments spread evenly over `bins` equal-width
/// inducer-distance bins spanning the empirical range. Bin quotas are
/// `count / bins`, with the remainder going to the lowest bins.
pub fn sample_benchmark(
    test_curves: &[CurveRecord],
    count: usize,
    bins: usize,
    n: usize,
    cfg: &CorpusConfig,
    seed: u64,
) -> Result<BenchmarkSet> {
    sample_benchmark_in(test_curves, count, bins, None, n, cfg, seed)
}

/// As [`sample_benchmark`], with bins spanning `range` instead of the
/// empirical range. Fragments outside `range` are ignored.
pub fn sample_benchmark_in(
    test_curves: &[CurveRecord],
    count: usize,
    bins: usize,
    range: Option<(f64, f64)>,
    n: usize,
    cfg: &CorpusConfig,
    seed: u64,
) -> Result<BenchmarkSet> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins = 0".into()));
    }
    cfg.validate()?;
    let (lo, hi, population) = match range {
        Some((lo, hi)) => {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!("scale range [{lo}, {hi}]")));
            }
            (lo, hi, candidates(test_curves, cfg).count())
        }
        None => {
            let (mut lo, mut hi, mut population) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
            for c in candidates(test_curves, cfg) {
                lo = lo.min(c.scale);
                hi = hi.max(c.scale);
                population += 1;
            }
            (lo, hi, population)
        }
    };
    let mut reservoirs: Vec<Reservoir> = (0..bins)
        .map(|b| Reservoir::new(count / bins + usize::from(b < count % bins)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = (hi - lo) / bins as f64;
    let mut eligible = 0;
    for c in candidates(test_curves, cfg) {
        if !(lo..=hi).contains(&c.scale) {
            continue;
        }
        eligible += 1;
        let b = if width > 0.0 {
            (((c.scale - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        reservoirs[b].offer(c, &mut rng);
    }
    let sampling = Sampling {
        kind: "uniform_by_scale".into(),
        bins,
        min_scale: lo,
        max_scale: hi,
        seed,
        population,
        eligible,
    };
    finish(reservoirs, test_curves, n, sampling)
}

/// Away-facing configurations: with `(θ1, θ2)` the tangent angles measured
/// from the inducer chord, `θ1 > π/2` and `θ2 < π/2`.
pub fn is_difficult(config: &RelativeConfiguration) -> bool {
    let (t1, t2) = config.chord_angles();
    t1 > FRAC_PI_2 && t2 < FRAC_PI_2
}

/// Uniform sample of `count` difficult test fragments.
pub fn sample_difficult(
    test_curves: &[CurveRecord],
    count: usize,
    n: usize,
    cfg: &CorpusConfig,
    seed: u64,
) -> Result<BenchmarkSet> {
    cfg.validate()?;
    let mut res = Reservoir::new(count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi, mut population) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
    for c in candidates(test_curves, cfg) {
        population += 1;
        if is_difficult(&c.config) {
            lo = lo.min(c.scale);
            hi = hi.max(c.scale);
            res.offer(c, &mut rng);
        }
    }
    let sampling = Sampling {
        kind: "difficult".into(),
        bins: 1,
        min_scale: lo,
        max_scale: hi,
        seed,
        population,
        eligible: res.seen,
    };
    finish(vec![res], test_curves, n, sampling)
}

/// Discrete Fréchet distance between the `n`-point resamplings of `gt` and
/// `recon`, divided by the inducer distance.
pub fn rre(gt: &[Point2], recon: &[Point2], i1: &Inducer, i2: &Inducer, n: usize) -> Result<f64> {
    let gap = i1.position.distance(i2.position);
    if gap == 0.0 {
        return Err(Error::CoincidentInducers);
    }
    let a = resample_points(gt, n)?;
    let b = resample_points(recon, n)?;
    Ok(discrete_frechet(&a, &b)? / gap)
}

/// Output of one method on one record.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutput {
    pub points: Vec<Point2>,
    /// Short tags, e.g. `"midway"`, `"fallback"`.
    pub flags: Vec<&'static str>,
}

pub trait Reconstructor: Sync {
    fn name(&self) -> &str;
    fn complete(&self, i1: &Inducer, i2: &Inducer, n: usize) -> Result<MethodOutput>;
}

/// Mean-curve method backed by a (train-only) prior.
pub struct MeanCurveMethod<'a> {
    pub prior: &'a Prior,
    pub opts: ReconstructOptions,
}

impl Reconstructor for MeanCurveMethod<'_> {
    fn name(&self) -> &str {
        "mean_curve"
    }

    fn complete(&self, i1: &Inducer, i2: &Inducer, n: usize) -> Result<MethodOutput> {
        let opts = ReconstructOptions { n, ..self.opts };
        let r = reconstruct(self.prior, i1, i2, &opts)?;
        let mut flags = Vec::new();
        if r.flags.midway_extended {
            flags.push("midway");
        }
        if r.flags.fallback_used {
            flags.push("fallback");
        }
        Ok(MethodOutput {
            points: r.points,
            flags,
        })
    }
}

/// Euler-spiral baseline (biarc when the clothoid solve fails).
pub struct EulerSpiralMethod;

impl Reconstructor for EulerSpiralMethod {
    fn name(&self) -> &str {
        "euler"
    }

    fn complete(&self, i1: &Inducer, i2: &Inducer, n: usize) -> Result<MethodOutput> {
        let (poly, biarc) = complete_with_fallback(i1, i2, n)?;
        Ok(MethodOutput {
            points: poly.into_points(),
            flags: if biarc { vec!["biarc"] } else { Vec::new() },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub name: String,
    /// Per-record RRE; `+∞` for failures.
    pub rre: Vec<f64>,
    pub flags: Vec<String>,
    pub arc: Vec<f64>,
    pub auc: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub thresholds: Vec<f64>,
    pub methods: Vec<MethodResult>,
}

pub fn arc_thresholds() -> Vec<f64> {
    (0..ARC_POINTS).map(|k| k as f64 / 100.0).collect()
}

/// Fraction of records with RRE ≤ τ at each threshold.
pub fn arc_curve(rre: &[f64], thresholds: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = rre.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len().max(1) as f64;
    thresholds
        .iter()
        .map(|&t| sorted.partition_point(|&r| r <= t) as f64 / total)
        .collect()
}

/// Arithmetic mean of the ARC samples.
pub fn auc(arc: &[f64]) -> f64 {
    if arc.is_empty() {
        return 0.0;
    }
    arc.iter().sum::<f64>() / arc.len() as f64
}

/// Runs every method on every record in parallel. Failed reconstructions
/// score `+∞`.
pub fn evaluate(set: &BenchmarkSet, methods: &[&dyn Reconstructor]) -> EvalResult {
    let thresholds = arc_thresholds();
    let methods = methods
        .iter()
        .map(|m| {
            let per: Vec<(f64, String)> = set
                .records
                .par_iter()
                .map(|r| {
                    let out = m
                        .complete(&r.i1, &r.i2, set.n)
                        .and_then(|o| Ok((rre(&r.ground_truth, &o.points, &r.i1, &r.i2, set.n)?, o.flags)));
                    match out {
                        Ok((e, flags)) => (e, flags.join("|")),
                        Err(e) => (f64::INFINITY, format!("error:{}", error_tag(&e))),
                    }
                })
                .collect();
            let (rre, flags): (Vec<f64>, Vec<String>) = per.into_iter().unzip();
            let failures = rre.iter().filter(|e| e.is_infinite()).count();
            let arc = arc_curve(&rre, &thresholds);
            MethodResult {
                name: m.name().to_string(),
                auc: auc(&arc),
                rre,
                flags,
                arc,
                failures,
            }
        })
        .collect();
    EvalResult { thresholds, methods }
}

fn error_tag(e: &Error) -> String {
    let s = format!("{e:?}");
    s.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("unknown").to_string()
}

/// Record-level CSV: `id, scale, rre_<method>..., flags`.
pub fn write_csv<W: Write>(w: W, set: &BenchmarkSet, result: &EvalResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["id".to_string(), "scale".to_string()];
    header.extend(result.methods.iter().map(|m| format!("rre_{}", m.name)));
    header.push("flags".into());
    out.write_record(&header)?;
    for (k, r) in set.records.iter().enumerate() {
        let mut row = vec![r.id.to_string(), r.scale.to_string()];
        row.extend(result.methods.iter().map(|m| m.rre[k].to_string()));
        let flags: Vec<String> = result
            .methods
            .iter()
            .filter(|m| !m.flags[k].is_empty())
            .map(|m| format!("{}:{}", m.name, m.flags[k]))
            .collect();
        row.push(flags.join(";"));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct Summary<'a> {
    config: &'a serde_json::Value,
    sampling: &'a Sampling,
    records: usize,
    thresholds: &'a [f64],
    methods: Vec<MethodSummary<'a>>,
}

#[derive(Debug, Clone, Serialize)]
struct MethodSummary<'a> {
    name: &'a str,
    auc: f64,
    failures: usize,
    arc: &'a [f64],
}

/// JSON summary with ARC arrays, AUCs and an echo of `config`.
pub fn write_summary<W: Write>(
    w: W,
    set: &BenchmarkSet,
    result: &EvalResult,
    config: &serde_json::Value,
) -> Result<()> {
    let summary = Summary {
        config,
        sampling: &set.sampling,
        records: set.len(),
        thresholds: &result.thresholds,
        methods: result
            .methods
            .iter()
            .map(|m| MethodSummary {
                name: &m.name,
                auc: m.auc,
                failures: m.failures,
                arc: &m.arc,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(w, &summary)?;
    Ok(())
}

/// File stem for a report of `kind` produced with `seed`.
pub fn report_stem(kind: &str, seed: u64) -> String {
    format!("{kind}_seed{seed}")
}
