use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use curvefill::bench::{
    evaluate, report_stem, sample_benchmark_in, sample_difficult, split_corpus, write_csv, write_summary,
    BenchmarkSet, EulerSpiralMethod, MeanCurveMethod, SplitSpec,
};
use curvefill::corpus::{fragment_count, load_curves, synth_corpus, write_curves};
use curvefill::index::snapshot::{read_snapshot, write_snapshot};
use curvefill::{
    euler_spiral_complete, reconstruct as reconstruct_curve, scale_invariance_analysis, BucketParams,
    CurveFormat, CurveRecord, Error, Inducer, Prior, RelativeConfiguration, SynthFamily,
};

use crate::config::RunConfig;
use crate::svg;

/// Exit status for a failed run: 2 usage, 3 data error, 4 numeric failure.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::InvalidArgument(_) => 2,
                e if e.is_numeric() => 4,
                _ => 3,
            };
        }
        if cause.is::<toml::de::Error>() {
            return 2;
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return 3;
        }
    }
    1
}

fn load(path: &Path, format: CurveFormat) -> Result<Vec<CurveRecord>> {
    let loaded = load_curves(path, format).with_context(|| format!("loading corpus {}", path.display()))?;
    if loaded.skipped > 0 {
        warn!("skipped {} curves with fewer than 4 distinct points", loaded.skipped);
    }
    info!("loaded {} curves", loaded.curves.len());
    Ok(loaded.curves)
}

fn build_prior(curves: Vec<CurveRecord>, cfg: &RunConfig) -> Result<Prior> {
    let params = BucketParams::from_tolerances(&cfg.tolerances());
    let prior = Prior::build(curves, cfg.corpus(), params)?;
    info!("indexed {} fragments ({} skipped)", prior.index.len(), prior.skipped);
    Ok(prior)
}

fn open_prior(corpus: &Path, format: CurveFormat, snapshot: Option<&Path>, cfg: &RunConfig) -> Result<Prior> {
    let curves = load(corpus, format)?;
    match snapshot {
        Some(s) => {
            let f = fs::File::open(s).with_context(|| format!("opening snapshot {}", s.display()))?;
            Ok(read_snapshot(BufReader::new(f), curves).with_context(|| format!("reading snapshot {}", s.display()))?)
        }
        None => build_prior(curves, cfg),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Prints a line to stdout; a reader that went away is not an error.
fn say(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Counts of occupied cells, bucketed by powers of two of their size.
fn occupancy_histogram(counts: &[usize]) -> serde_json::Value {
    let mut buckets: Vec<usize> = Vec::new();
    for &c in counts {
        let b = (usize::BITS - c.leading_zeros() - 1) as usize;
        if buckets.len() <= b {
            buckets.resize(b + 1, 0);
        }
        buckets[b] += 1;
    }
    json!({
        "occupied_cells": counts.len(),
        "max_entries": counts.iter().max().copied().unwrap_or(0),
        "cells_by_log2_size": buckets,
    })
}

pub fn ingest(corpus: &Path, format: CurveFormat, out: &Path, cfg: &RunConfig) -> Result<()> {
    let curves = load(corpus, format)?;
    let expected: usize = curves.iter().map(|c| fragment_count(c.poly.len(), &cfg.corpus())).sum();
    let prior = build_prior(curves, cfg)?;
    let f = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_snapshot(&prior, BufWriter::new(f))?;
    let (same, free) = prior.index.occupancy();
    let stats = json!({
        "config": cfg.to_json(),
        "curves": prior.curves.len(),
        "enumerated_fragments": expected.min(cfg.max_fragments.unwrap_or(usize::MAX)),
        "indexed_fragments": prior.index.len(),
        "skipped_fragments": prior.skipped,
        "same_scale": occupancy_histogram(&same),
        "scale_free": occupancy_histogram(&free),
    });
    let mut side = out.as_os_str().to_owned();
    side.push(".stats.json");
    write_json(Path::new(&side), &stats)?;
    say(&format!(
        "{} curves, {} fragments -> {}",
        prior.curves.len(),
        prior.index.len(),
        out.display()
    ))?;
    Ok(())
}

pub struct ReconstructRequest<'a> {
    pub corpus: &'a Path,
    pub format: CurveFormat,
    pub snapshot: Option<&'a Path>,
    pub i1: Inducer,
    pub i2: Inducer,
    pub euler: bool,
    pub svg: Option<&'a Path>,
    pub out: Option<&'a Path>,
    pub cfg: &'a RunConfig,
}

pub fn reconstruct(req: &ReconstructRequest) -> Result<()> {
    let prior = open_prior(req.corpus, req.format, req.snapshot, req.cfg)?;
    let opts = req.cfg.reconstruct_options();
    let rec = reconstruct_curve(&prior, &req.i1, &req.i2, &opts)?;
    let euler = if req.euler {
        Some(euler_spiral_complete(&req.i1, &req.i2, opts.n)?.into_points())
    } else {
        None
    };
    let record = json!({
        "config": req.cfg.to_json(),
        "i1": req.i1,
        "i2": req.i2,
        "n": opts.n,
        "m": rec.m,
        "flags": rec.flags,
        "tolerances": opts.tolerances,
        "points": rec.points,
        "euler_points": euler,
    });
    match req.out {
        Some(p) => write_json(p, &record)?,
        None => say(&serde_json::to_string_pretty(&record)?)?,
    }
    if let Some(path) = req.svg {
        let plot = svg::ReconstructionPlot {
            i1: &req.i1,
            i2: &req.i2,
            mean: &rec.points,
            m: rec.m,
            euler: euler.as_deref(),
            ground_truth: None,
        };
        write_text(path, &plot.render())?;
    }
    Ok(())
}

fn report_set(out_dir: &Path, kind: &str, set: &BenchmarkSet, prior: &Prior, cfg: &RunConfig) -> Result<()> {
    let mc = MeanCurveMethod {
        prior,
        opts: cfg.reconstruct_options(),
    };
    let result = evaluate(set, &[&mc, &EulerSpiralMethod]);
    let stem = report_stem(kind, cfg.seed);
    let csv_path = out_dir.join(format!("{stem}.csv"));
    write_csv(
        BufWriter::new(fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?),
        set,
        &result,
    )?;
    let mut echo = cfg.to_json();
    echo["baseline"] = json!("reimplemented clothoid");
    echo["train_fragments"] = json!(prior.index.len());
    let json_path = out_dir.join(format!("{stem}.json"));
    write_summary(
        BufWriter::new(fs::File::create(&json_path).with_context(|| format!("creating {}", json_path.display()))?),
        set,
        &result,
        &echo,
    )?;
    let series: Vec<(&str, &[f64], f64)> = result
        .methods
        .iter()
        .map(|m| (m.name.as_str(), m.arc.as_slice(), m.auc))
        .collect();
    write_text(
        &out_dir.join(format!("arc_{stem}.svg")),
        &svg::arc_plot(&format!("{kind} set, {} records", set.len()), &result.thresholds, &series),
    )?;
    for m in &result.methods {
        say(&format!("{kind}\t{}\tAUC {:.4}\tfailures {}", m.name, m.auc, m.failures))?;
    }
    Ok(())
}

pub fn bench(corpus: &Path, format: CurveFormat, out_dir: &Path, cfg: &RunConfig) -> Result<()> {
    let curves = load(corpus, format)?;
    let spec = SplitSpec {
        seed: cfg.split_seed,
        test_fraction: cfg.test_fraction,
    };
    let (train, test) = split_corpus(&curves, &spec)?;
    info!("split: {} train curves, {} test curves", train.len(), test.len());
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let corpus_cfg = cfg.corpus();
    let full = sample_benchmark_in(&test, cfg.count, cfg.bins, cfg.scale_range(), cfg.n, &corpus_cfg, cfg.seed)
        .context("sampling the scale-stratified benchmark set")?;
    let difficult = if cfg.difficult > 0 {
        let set = sample_difficult(&test, cfg.difficult, cfg.n, &corpus_cfg, cfg.seed)
            .context("sampling the difficult benchmark set")?;
        info!(
            "difficult fragments: {} of {}",
            set.sampling.eligible, set.sampling.population
        );
        Some(set)
    } else {
        None
    };
    let prior = build_prior(train, cfg)?;
    report_set(out_dir, "full", &full, &prior, cfg)?;
    if let Some(set) = &difficult {
        report_set(out_dir, "difficult", set, &prior, cfg)?;
    }
    Ok(())
}

pub struct AnalyzeRequest<'a> {
    pub corpus: &'a Path,
    pub format: CurveFormat,
    pub snapshot: Option<&'a Path>,
    pub out_dir: &'a Path,
    pub grid: usize,
    pub scales: &'a [f64],
    pub min_samples: usize,
    pub cfg: &'a RunConfig,
}

#[derive(Debug, Serialize)]
struct Cell {
    theta1: f64,
    theta2: f64,
    std_of_mu: Option<f64>,
    mean_of_sigma: Option<f64>,
    scales_used: usize,
    status: String,
}

/// Grid angles: θ1 = iπ/g for i in 0..=g, θ2 = jπ/g for j in 0..2g. Grids of
/// resolution g and 2g share every cell of the coarser one.
pub fn grid_angles(g: usize) -> (Vec<f64>, Vec<f64>) {
    // i·π/g rather than i·(π/g): doubling g then reproduces the angles bit for bit
    let at = |i: usize| i as f64 * std::f64::consts::PI / g as f64;
    ((0..=g).map(at).collect(), (0..2 * g).map(at).collect())
}

pub fn analyze_scale(req: &AnalyzeRequest) -> Result<()> {
    if req.grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()).into());
    }
    let prior = open_prior(req.corpus, req.format, req.snapshot, req.cfg)?;
    let tol = req.cfg.tolerances();
    let (t1s, t2s) = grid_angles(req.grid);
    let coords: Vec<(f64, f64)> = t1s.iter().flat_map(|&a| t2s.iter().map(move |&b| (a, b))).collect();
    let cells: Vec<Cell> = coords
        .par_iter()
        .map(|&(theta1, theta2)| {
            let config = RelativeConfiguration::from_chord_angles(theta1, theta2);
            match scale_invariance_analysis(&prior, &config, req.scales, &tol, req.min_samples) {
                Ok(r) => Cell {
                    theta1,
                    theta2,
                    std_of_mu: Some(r.std_of_mu),
                    mean_of_sigma: Some(r.mean_of_sigma),
                    scales_used: r.scales.len(),
                    status: "ok".into(),
                },
                Err(e) => Cell {
                    theta1,
                    theta2,
                    std_of_mu: None,
                    mean_of_sigma: None,
                    scales_used: match e {
                        Error::InsufficientScales { found } => found,
                        _ => 0,
                    },
                    status: format!("{e}"),
                },
            }
        })
        .collect();
    fs::create_dir_all(req.out_dir).with_context(|| format!("creating {}", req.out_dir.display()))?;
    let csv_path = req.out_dir.join("scale_analysis.csv");
    let mut w = BufWriter::new(fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?);
    writeln!(w, "theta1,theta2,std_of_mu,mean_of_sigma,scales_used,status")?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for c in &cells {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            c.theta1,
            c.theta2,
            opt(c.std_of_mu),
            opt(c.mean_of_sigma),
            c.scales_used,
            c.status.replace(',', ";")
        )?;
    }
    w.flush()?;
    write_json(
        &req.out_dir.join("scale_analysis.json"),
        &json!({
            "config": req.cfg.to_json(),
            "grid": req.grid,
            "scales": req.scales,
            "min_samples": req.min_samples,
            "cells": cells,
        }),
    )?;
    let cols = t2s.len();
    let map = |f: fn(&Cell) -> Option<f64>| -> Vec<Vec<f64>> {
        cells
            .chunks(cols)
            .map(|row| row.iter().map(|c| f(c).unwrap_or(f64::NAN)).collect())
            .collect()
    };
    let cell_px = (480.0 / cols as f64).clamp(4.0, 40.0);
    write_text(
        &req.out_dir.join("std_of_mu.svg"),
        &svg::heatmap("STD of mean centers", &map(|c| c.std_of_mu), cell_px),
    )?;
    write_text(
        &req.out_dir.join("mean_of_sigma.svg"),
        &svg::heatmap("mean center spread", &map(|c| c.mean_of_sigma), cell_px),
    )?;
    let ok = cells.iter().filter(|c| c.std_of_mu.is_some()).count();
    say(&format!("{ok} of {} cells had at least 2 usable scales", cells.len()))?;
    Ok(())
}

pub fn synth(family: SynthFamily, count: usize, seed: u64, out: &Path) -> Result<()> {
    let curves = synth_corpus(seed, count, family);
    write_curves(out, &curves).with_context(|| format!("writing {}", out.display()))?;
    say(&format!("{count} {family} curves -> {}", out.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let numeric: anyhow::Error = anyhow::Error::from(Error::NoPrior).context("reconstructing");
        assert_eq!(exit_code(&numeric), 4);
        assert_eq!(exit_code(&Error::EmptyCorpus.into()), 3);
        assert_eq!(exit_code(&Error::CoincidentInducers.into()), 3);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into()).into()), 2);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(exit_code(&anyhow::Error::from(io).context("opening")), 3);
    }

    #[test]
    fn coarse_grid_is_subset_of_fine_grid() {
        let (a1, a2) = grid_angles(6);
        let (b1, b2) = grid_angles(12);
        assert!(a1.iter().all(|x| b1.contains(x)));
        assert!(a2.iter().all(|x| b2.contains(x)));
        assert_eq!(a2.len(), 12);
    }

    #[test]
    fn histogram_buckets() {
        let h = occupancy_histogram(&[1, 2, 3, 4, 9]);
        assert_eq!(h["cells_by_log2_size"], json!([1, 2, 1, 1]));
        assert_eq!(h["max_entries"], json!(9));
    }
}
