//! Experiment configuration and result rows.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelId;
use crate::patterns::{generate_grid_with, generate_uniform, GridPlacement, PatternSet};

use super::mixture::GaussianMixture;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MinimaScaling,
    Loglik,
    KernelSweep,
}

/// Where stored patterns come from. Per-seed generators take the job seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Uniform {
        m: usize,
        d: usize,
    },
    Grid {
        points_per_dim: usize,
        d: usize,
        #[serde(default)]
        placement: GridPlacement,
    },
    /// `m` draws from a mixture of `k` Gaussians whose means are uniform in
    /// the unit cube.
    Mixture {
        m: usize,
        d: usize,
        k: usize,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    File {
        path: PathBuf,
    },
}

fn default_sigma() -> f64 {
    0.1
}

impl Generator {
    pub fn patterns(&self, seed: u64) -> Result<PatternSet> {
        match self {
            Generator::Uniform { m, d } => generate_uniform(*m, *d, seed),
            Generator::Grid {
                points_per_dim,
                d,
                placement,
            } => generate_grid_with(*points_per_dim, *d, *placement),
            Generator::Mixture { m, .. } => self
                .mixture(seed)?
                .expect("mixture generator")
                .sample(*m, seed),
            Generator::File { path } => PatternSet::read_csv(path),
        }
    }

    /// The ground-truth mixture for a mixture generator.
    pub fn mixture(&self, seed: u64) -> Result<Option<GaussianMixture>> {
        match self {
            Generator::Mixture { d, k, sigma, .. } => {
                GaussianMixture::random(*k, *d, *sigma, seed).map(Some)
            }
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Geometric,
    Linear,
}

/// Which upper end the default ladder uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperEnd {
    /// `2 / r_min^2`: no pattern lies inside another's support ball.
    #[default]
    Critical,
    /// `8 / r_min^2`: support balls are pairwise disjoint.
    Disjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaLadder {
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// Explicit bounds; default to the pattern set's critical range.
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
    #[serde(default)]
    pub upper_end: UpperEnd,
}

impl BetaLadder {
    pub fn geometric(count: usize) -> Self {
        BetaLadder {
            count,
            spacing: Spacing::Geometric,
            lower: None,
            upper: None,
            upper_end: UpperEnd::Critical,
        }
    }

    /// Resolves the ladder for one pattern set.
    pub fn resolve(&self, patterns: &PatternSet) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Ok(Vec::new());
        }
        let (lo, hi) = match (self.lower, self.upper) {
            (Some(lo), Some(hi)) => (lo, hi),
            (lower, upper) => {
                let (clo, chi) = patterns.critical_beta_range()?;
                let top = match self.upper_end {
                    UpperEnd::Critical => chi,
                    UpperEnd::Disjoint => 4.0 * chi,
                };
                (lower.unwrap_or(clo), upper.unwrap_or(top))
            }
        };
        ladder(lo, hi, self.count, self.spacing)
    }
}

/// `count` values from `lo` to `hi` inclusive.
pub fn ladder(lo: f64, hi: f64, count: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "invalid beta range [{lo}, {hi}]"
        )));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let n = (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            let t = i as f64 / n;
            if i == count - 1 {
                hi
            } else {
                match spacing {
                    Spacing::Geometric => lo * (hi / lo).powf(t),
                    Spacing::Linear => lo + (hi - lo) * t,
                }
            }
        })
        .collect())
}

/// Descent settings for the log-likelihood benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescentConfig {
    pub lse_steps: usize,
    pub lse_lr_start: f64,
    pub lse_lr_end: f64,
    pub lse_delta: f64,
    pub lsr_steps: usize,
    pub lsr_lr: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig {
            lse_steps: 13_000,
            lse_lr_start: 0.01,
            lse_lr_end: 1e-4,
            lse_delta: 1e-8,
            lsr_steps: 500,
            lsr_lr: 0.1,
        }
    }
}

/// Fractions of the ladder (by index) that form the mid-beta band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub from: f64,
    pub to: f64,
}

impl Default for Band {
    fn default() -> Self {
        Band { from: 0.5, to: 1.0 }
    }
}

impl Band {
    /// Ladder indices `i` with `from <= i / (count - 1) <= to`.
    pub fn indices(&self, count: usize) -> Vec<usize> {
        if count <= 1 {
            return (0..count).collect();
        }
        let n = (count - 1) as f64;
        (0..count)
            .filter(|&i| i as f64 / n >= self.from - 1e-12 && i as f64 / n <= self.to + 1e-12)
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub summary_csv: Option<PathBuf>,
    #[serde(default)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub generator: Generator,
    #[serde(default = "default_kernel")]
    pub kernel: KernelId,
    pub ladder: BetaLadder,
    #[serde(default = "default_queries")]
    pub n_queries: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Query shell thickness as a fraction of `2/beta`.
    #[serde(default = "default_thickness")]
    pub boundary_thickness: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default)]
    pub descent: DescentConfig,
    #[serde(default)]
    pub band: Band,
    /// Kernels for the sweep; all eight when empty.
    #[serde(default)]
    pub kernels: Vec<KernelId>,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_kernel() -> KernelId {
    KernelId::Epanechnikov
}
fn default_queries() -> usize {
    500
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_thickness() -> f64 {
    0.1
}
fn default_delta() -> f64 {
    crate::emergence::DEFAULT_DELTA
}
fn default_mc() -> usize {
    100_000
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.boundary_thickness > 0.0 && self.boundary_thickness < 1.0) {
            return Err(Error::InvalidParameter(
                "boundary_thickness must lie in (0, 1)".into(),
            ));
        }
        if self.mc_samples == 0 && self.experiment == ExperimentKind::MinimaScaling {
            return Err(Error::InvalidParameter(
                "mc_samples must be at least 1".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one seed is required".into(),
            ));
        }
        if !(self.band.from >= 0.0 && self.band.from <= self.band.to && self.band.to <= 1.0) {
            return Err(Error::InvalidParameter(
                "band must satisfy 0 <= from <= to <= 1".into(),
            ));
        }
        Ok(())
    }

    /// Minima-scaling configuration with the given generator and ladder.
    pub fn minima_scaling(generator: Generator, ladder: BetaLadder, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::MinimaScaling,
            generator,
            kernel: KernelId::Epanechnikov,
            ladder,
            n_queries: default_queries(),
            seeds,
            boundary_thickness: default_thickness(),
            delta: default_delta(),
            mc_samples: default_mc(),
            descent: DescentConfig::default(),
            band: Band::default(),
            kernels: Vec::new(),
            output: OutputPaths::default(),
        }
    }

    pub fn with_experiment(mut self, kind: ExperimentKind) -> Self {
        self.experiment = kind;
        self
    }
}

/// One (seed, beta) cell of a sweep. Columns that an experiment does not
/// measure are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub ladder_index: usize,
    pub beta: f64,
    pub avg_loglik_lsr: Option<f64>,
    pub avg_loglik_lse: Option<f64>,
    pub unique_lsr: Option<usize>,
    pub unique_lse: Option<usize>,
    pub stored_recovered_lsr: Option<usize>,
    pub stored_recovered_lse: Option<usize>,
    pub novel_count: Option<usize>,
    pub support_fraction: Option<f64>,
    /// Leading 16 hex digits of the SHA-256 of the shared query list.
    pub query_checksum: Option<String>,
    pub status: String,
}

impl MetricsRow {
    pub fn empty(seed: u64, ladder_index: usize, beta: f64) -> Self {
        MetricsRow {
            seed,
            ladder_index,
            beta,
            avg_loglik_lsr: None,
            avg_loglik_lse: None,
            unique_lsr: None,
            unique_lse: None,
            stored_recovered_lsr: None,
            stored_recovered_lse: None,
            novel_count: None,
            support_fraction: None,
            query_checksum: None,
            status: "ok".into(),
        }
    }

    pub fn failed(seed: u64, ladder_index: usize, beta: f64, err: &Error) -> Self {
        MetricsRow {
            status: format!("error: {err}"),
            ..Self::empty(seed, ladder_index, beta)
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status.starts_with("ok")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_endpoints_and_spacing() {
        let l = ladder(0.25, 8.0, 6, Spacing::Geometric).unwrap();
        assert_eq!(l.len(), 6);
        assert_eq!((l[0], l[5]), (0.25, 8.0));
        for w in l.windows(3) {
            assert!((w[1] / w[0] - w[2] / w[1]).abs() < 1e-12);
        }
        let lin = ladder(1.0, 2.0, 3, Spacing::Linear).unwrap();
        assert_eq!(lin, vec![1.0, 1.5, 2.0]);
        assert!(ladder(0.0, 1.0, 3, Spacing::Geometric).is_err());
    }

    #[test]
    fn ladder_resolves_against_patterns() {
        let p = PatternSet::from_rows(&[vec![0.0, 0.0], vec![0.5, 0.0]]).unwrap();
        let l = BetaLadder::geometric(4).resolve(&p).unwrap();
        assert_eq!((l[0], l[3]), (1.0, 8.0));
        let l = BetaLadder {
            upper_end: UpperEnd::Disjoint,
            ..BetaLadder::geometric(4)
        }
        .resolve(&p)
        .unwrap();
        assert_eq!(l[3], 32.0);
        assert!(BetaLadder::geometric(0).resolve(&p).unwrap().is_empty());
    }

    #[test]
    fn band_indices() {
        assert_eq!(Band::default().indices(5), vec![2, 3, 4]);
        assert_eq!(Band { from: 0.0, to: 1.0 }.indices(3), vec![0, 1, 2]);
    }

    #[test]
    fn config_json_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment":"minima_scaling","generator":{"kind":"uniform","m":20,"d":8},"ladder":{"count":12}}"#,
        )
        .unwrap();
        assert_eq!(cfg.kernel, KernelId::Epanechnikov);
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.mc_samples, 100_000);
        assert_eq!(cfg.descent.lse_steps, 13_000);
        let back: ExperimentConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(ExperimentConfig::from_json(r#"{"experiment":"nope"}"#).is_err());
    }
}
