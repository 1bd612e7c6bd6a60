//! Synthetic experiments: memory counts across beta, log-likelihood of
//! retrieved memories against a Gaussian mixture, Monte Carlo support
//! volume and a per-kernel emergence sweep.
//!
//! Every sweep is a pure function of its [`ExperimentConfig`]: cells run in
//! parallel but each draws from its own seeded stream and rows come back in
//! (seed, ladder index) order.

mod config;
mod kernel_sweep;
mod loglik;
mod mixture;
mod output;
mod scaling;
mod support;

pub use config::{
    ladder, Band, BetaLadder, DescentConfig, ExperimentConfig, ExperimentKind, Generator,
    MetricsRow, OutputPaths, Spacing, UpperEnd,
};
pub use kernel_sweep::{
    analyze_1d, canonical_instance, canonical_sweep, run_kernel_sweep, KernelSweepRow,
    DEFAULT_LADDER, FLAT_TOLERANCE,
};
pub use loglik::{
    boundary_queries, query_checksum, retrieve_lse, retrieve_lsr, run_loglik_benchmark, Retrieved,
};
pub use mixture::{gmm_logpdf, GaussianMixture};
pub use output::{
    csv_bytes, sha256_hex, summarize, write_json, write_rows_csv, Sidecar, SummaryRow,
};
pub use scaling::run_minima_scaling;
pub use support::{
    fraction_std_error, sample_support_boundary, support_fraction_mc, support_fraction_with, Shell,
};

use crate::error::Result;

/// Rows produced by a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepRows {
    Metrics(Vec<MetricsRow>),
    Kernels(Vec<KernelSweepRow>),
}

impl SweepRows {
    pub fn len(&self) -> usize {
        match self {
            SweepRows::Metrics(r) => r.len(),
            SweepRows::Kernels(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cells_ok(&self) -> usize {
        match self {
            SweepRows::Metrics(r) => r.iter().filter(|r| r.is_ok()).count(),
            SweepRows::Kernels(r) => r.len(),
        }
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        match self {
            SweepRows::Metrics(r) => csv_bytes(r),
            SweepRows::Kernels(r) => csv_bytes(r),
        }
    }
}

/// Dispatches on the configured experiment.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepRows> {
    config.validate()?;
    Ok(match config.experiment {
        ExperimentKind::MinimaScaling => SweepRows::Metrics(run_minima_scaling(config)),
        ExperimentKind::Loglik => SweepRows::Metrics(run_loglik_benchmark(config)),
        ExperimentKind::KernelSweep => SweepRows::Kernels(run_kernel_sweep(config)?),
    })
}
