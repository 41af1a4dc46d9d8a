//! Run configuration: defaults, overridden by an optional `key = value` file,
//! overridden by command-line flags.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use curvefill::{CorpusConfig, QueryTolerances, ReconstructOptions};

/// Every knob that influences an output. Echoed into each artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub t1: f64,
    pub t1_angle: f64,
    pub t2: f64,
    pub scale_invariant: bool,
    pub midway: bool,
    pub midway_threshold: usize,
    pub max_depth: usize,
    pub fallback: bool,
    pub min_fragment_points: usize,
    pub fragment_stride: usize,
    pub tangent_window: usize,
    pub max_fragments: Option<usize>,
    pub seed: u64,
    pub split_seed: u64,
    pub test_fraction: f64,
    pub count: usize,
    pub bins: usize,
    pub difficult: usize,
    pub scale_min: Option<f64>,
    pub scale_max: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let r = ReconstructOptions::default();
        let c = CorpusConfig::default();
        RunConfig {
            n: r.n,
            t1: r.tolerances.t1_rel_dist,
            t1_angle: r.tolerances.t1_angle,
            t2: r.tolerances.t2_orient,
            scale_invariant: r.scale_invariant,
            midway: r.midway,
            midway_threshold: r.midway_threshold,
            max_depth: r.max_depth,
            fallback: r.fallback,
            min_fragment_points: c.min_fragment_points,
            fragment_stride: c.fragment_stride,
            tangent_window: c.tangent_window,
            max_fragments: c.max_fragments,
            seed: 0,
            split_seed: 0,
            test_fraction: 0.10,
            count: 5000,
            bins: 20,
            difficult: 1000,
            scale_min: None,
            scale_max: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        Ok(toml::from_str(text)?)
    }

    pub fn tolerances(&self) -> QueryTolerances {
        QueryTolerances {
            t1_rel_dist: self.t1,
            t1_angle: self.t1_angle,
            t2_orient: self.t2,
        }
    }

    pub fn reconstruct_options(&self) -> ReconstructOptions {
        ReconstructOptions {
            n: self.n,
            tolerances: self.tolerances(),
            scale_invariant: self.scale_invariant,
            midway: self.midway,
            midway_threshold: self.midway_threshold,
            max_depth: self.max_depth,
            fallback: self.fallback,
        }
    }

    pub fn corpus(&self) -> CorpusConfig {
        CorpusConfig {
            min_fragment_points: self.min_fragment_points,
            fragment_stride: self.fragment_stride,
            tangent_window: self.tangent_window,
            max_fragments: self.max_fragments,
            seed: self.seed,
        }
    }

    pub fn scale_range(&self) -> Option<(f64, f64)> {
        match (self.scale_min, self.scale_max) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(0.0), hi.unwrap_or(f64::MAX))),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config is plain data")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_file_overrides_defaults() {
        let c = RunConfig::parse("n = 24\nt2 = 0.2\n# comment\nmidway = false\nscale_max = 300.0\n").unwrap();
        assert_eq!(c.n, 24);
        assert_eq!(c.t2, 0.2);
        assert!(!c.midway);
        assert_eq!(c.t1, RunConfig::default().t1);
        assert_eq!(c.scale_range(), Some((0.0, 300.0)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("nn = 3").is_err());
    }

    #[test]
    fn defaults_round_trip_into_library_options() {
        let c = RunConfig::default();
        assert_eq!(c.reconstruct_options(), ReconstructOptions::default());
        assert_eq!(c.corpus(), CorpusConfig::default());
    }
}
