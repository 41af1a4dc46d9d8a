use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod svg;

use config::RunConfig;
use curvefill::{CurveFormat, Inducer, Point2, SynthFamily};

/// Fill gaps between oriented curve endpoints with the mean of matching
/// natural curve fragments.
#[derive(Debug, Parser)]
#[command(name = "curvefill", version)]
struct Cli {
    /// Optional `key = value` file with run settings (flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a fragment index snapshot from a corpus.
    Ingest(IngestArgs),
    /// Reconstruct the curve between two inducers.
    Reconstruct(ReconstructArgs),
    /// Run the reconstruction benchmark against the Euler-spiral baseline.
    Bench(BenchArgs),
    /// Map mean-curve stability across scales over a grid of configurations.
    AnalyzeScale(AnalyzeArgs),
    /// Write a synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Corpus file (canonical format) or directory of .cem files.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "canonical")]
    format: CurveFormat,
}

/// Knobs shared by every command; unset flags fall back to the config file.
#[derive(Debug, Args, Default)]
struct Knobs {
    /// Points per reconstructed curve.
    #[arg(long)]
    n: Option<usize>,
    /// Same-scale relative distance tolerance.
    #[arg(long)]
    t1: Option<f64>,
    /// Scale-invariant direction tolerance (radians).
    #[arg(long)]
    t1_angle: Option<f64>,
    /// Orientation tolerance (radians).
    #[arg(long)]
    t2: Option<f64>,
    /// Query at the exact inducer distance only.
    #[arg(long)]
    no_scale_invariance: bool,
    #[arg(long)]
    no_midway: bool,
    #[arg(long)]
    midway_threshold: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Fail instead of using the Euler spiral when nothing matches.
    #[arg(long)]
    no_fallback: bool,
    #[arg(long)]
    min_points: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    tangent_window: Option<usize>,
    #[arg(long)]
    max_fragments: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Knobs {
    fn apply(&self, c: &mut RunConfig) {
        macro_rules! set {
            ($flag:ident => $field:ident) => {
                if let Some(v) = self.$flag {
                    c.$field = v;
                }
            };
        }
        set!(n => n);
        set!(t1 => t1);
        set!(t1_angle => t1_angle);
        set!(t2 => t2);
        set!(midway_threshold => midway_threshold);
        set!(max_depth => max_depth);
        set!(min_points => min_fragment_points);
        set!(stride => fragment_stride);
        set!(tangent_window => tangent_window);
        set!(seed => seed);
        if self.max_fragments.is_some() {
            c.max_fragments = self.max_fragments;
        }
        c.scale_invariant &= !self.no_scale_invariance;
        c.midway &= !self.no_midway;
        c.fallback &= !self.no_fallback;
    }
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Snapshot path; a `.stats.json` sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Index snapshot built from the same corpus (built in memory if absent).
    #[arg(long, env = "CURVEFILL_SNAPSHOT")]
    snapshot: Option<PathBuf>,
    /// First inducer as `x,y,theta`, tangent pointing into the gap.
    #[arg(long, value_parser = parse_inducer, allow_hyphen_values = true)]
    i1: Inducer,
    /// Second inducer as `x,y,theta`, tangent pointing into the gap.
    #[arg(long, value_parser = parse_inducer, allow_hyphen_values = true)]
    i2: Inducer,
    /// Also compute the Euler-spiral completion.
    #[arg(long)]
    euler: bool,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// JSON output path (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    out_dir: PathBuf,
    /// Size of the scale-stratified set.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Size of the away-facing set (0 skips it).
    #[arg(long)]
    difficult: Option<usize>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Lower end of the scale range used for stratification.
    #[arg(long)]
    scale_min: Option<f64>,
    #[arg(long)]
    scale_max: Option<f64>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, env = "CURVEFILL_SNAPSHOT")]
    snapshot: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    /// θ1 steps over [0, π]; θ2 uses twice as many over [0, 2π).
    #[arg(long, default_value_t = 12)]
    grid: usize,
    /// Inducer distances to compare.
    #[arg(long, value_delimiter = ',', default_values_t = [8.0, 16.0, 32.0, 64.0, 128.0])]
    scales: Vec<f64>,
    /// Matches needed for a scale to count.
    #[arg(long, default_value_t = 50)]
    min_samples: usize,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// circular_arcs, lines or smoothed_random_walks.
    #[arg(long)]
    family: SynthFamily,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_inducer(s: &str) -> Result<Inducer, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, theta] => Inducer::checked(Point2::new(x, y), theta).map_err(|e| e.to_string()),
        _ => Err(format!("expected x,y,theta, got {s:?}")),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(a) => {
            a.knobs.apply(&mut cfg);
            commands::ingest(&a.corpus.corpus, a.corpus.format, &a.out, &cfg)
        }
        Command::Reconstruct(a) => {
            a.knobs.apply(&mut cfg);
            commands::reconstruct(&commands::ReconstructRequest {
                corpus: &a.corpus.corpus,
                format: a.corpus.format,
                snapshot: a.snapshot.as_deref(),
                i1: a.i1,
                i2: a.i2,
                euler: a.euler,
                svg: a.svg.as_deref(),
                out: a.out.as_deref(),
                cfg: &cfg,
            })
        }
        Command::Bench(a) => {
            a.knobs.apply(&mut cfg);
            if let Some(v) = a.count {
                cfg.count = v;
            }
            if let Some(v) = a.bins {
                cfg.bins = v;
            }
            if let Some(v) = a.difficult {
                cfg.difficult = v;
            }
            if let Some(v) = a.split_seed {
                cfg.split_seed = v;
            }
            if let Some(v) = a.test_fraction {
                cfg.test_fraction = v;
            }
            cfg.scale_min = a.scale_min.or(cfg.scale_min);
            cfg.scale_max = a.scale_max.or(cfg.scale_max);
            commands::bench(&a.corpus.corpus, a.corpus.format, &a.out_dir, &cfg)
        }
        Command::AnalyzeScale(a) => {
            a.knobs.apply(&mut cfg);
            commands::analyze_scale(&commands::AnalyzeRequest {
                corpus: &a.corpus.corpus,
                format: a.corpus.format,
                snapshot: a.snapshot.as_deref(),
                out_dir: &a.out_dir,
                grid: a.grid,
                scales: &a.scales,
                min_samples: a.min_samples,
                cfg: &cfg,
            })
        }
        Command::Synth(a) => commands::synth(a.family, a.count, a.seed, &a.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
