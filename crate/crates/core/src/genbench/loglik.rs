//! Log-likelihood of retrieved memories under a Gaussian-mixture ground
//! truth, comparing log-sum-ReLU and log-sum-exp retrieval.

use std::collections::HashSet;

use sha2::{Digest, Sha256};

use crate::energy::{active_indices, EnergySpec};
use crate::error::{Error, Result};
use crate::kernels::KernelId;
use crate::patterns::{sqdist, PatternSet};
use crate::retrieval::{
    cluster_within, dedup_radius, gradient_descent_with, lsr_fixed_point, DescentOptions,
    LrSchedule,
};
use crate::rng::{job_rng, streams};

use super::config::{DescentConfig, ExperimentConfig, MetricsRow};
use super::mixture::{gmm_logpdf, GaussianMixture};
use super::scaling::run_cells;
use super::support::Shell;

/// SHA-256 over the bit patterns of every query coordinate.
pub fn query_checksum(queries: &[Vec<f64>]) -> String {
    let mut h = Sha256::new();
    for q in queries {
        for v in q {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// `n` queries on the support-boundary shells, assigned to patterns
/// round-robin.
pub fn boundary_queries(
    patterns: &PatternSet,
    beta: f64,
    thickness_fraction: f64,
    n: usize,
    seed: u64,
    index: u32,
) -> Result<Vec<Vec<f64>>> {
    let spec = EnergySpec::lsr(beta)?;
    let shell = Shell::new(&spec, thickness_fraction * 2.0 / beta, patterns.dim())?;
    let mut rng = job_rng(seed, streams::QUERIES, index);
    Ok((0..n)
        .map(|i| shell.sample(patterns.pattern(i % patterns.len()), &mut rng))
        .collect())
}

/// Retrieved memories for one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieved {
    pub points: Vec<Vec<f64>>,
    pub unique: usize,
    pub stored_recovered: usize,
    pub failures: usize,
}

/// Cosine-decayed descent on the log-sum-exp energy, merged at `2/sqrt(beta)`.
pub fn retrieve_lse(
    queries: &[Vec<f64>],
    patterns: &PatternSet,
    beta: f64,
    descent: &DescentConfig,
) -> Result<Retrieved> {
    let spec = EnergySpec::lse(beta)?;
    let mut opts = DescentOptions::new(
        descent.lse_steps,
        LrSchedule::cosine(descent.lse_lr_start, descent.lse_lr_end),
    );
    opts.delta = descent.lse_delta;
    let points = queries
        .iter()
        .map(|q| gradient_descent_with(q, patterns, &spec, &opts).map(|r| r.point))
        .collect::<Result<Vec<_>>>()?;
    let labels = cluster_within(&points, dedup_radius(beta));
    let unique = labels.iter().enumerate().filter(|(i, l)| i == *l).count();
    let r2 = dedup_radius(beta).powi(2);
    let stored_recovered = patterns
        .iter()
        .filter(|xi| points.iter().any(|p| sqdist(p, xi) <= r2))
        .count();
    Ok(Retrieved {
        points,
        unique,
        stored_recovered,
        failures: 0,
    })
}

/// Preconditioned descent as a warm start, finished exactly by the centroid
/// iteration. Unique memories are counted by generating subset; stored
/// recovery counts patterns that are exact fixed points.
pub fn retrieve_lsr(
    queries: &[Vec<f64>],
    patterns: &PatternSet,
    beta: f64,
    descent: &DescentConfig,
) -> Result<Retrieved> {
    let spec = EnergySpec::new(KernelId::Epanechnikov, beta, 0.0)?;
    let mut opts = DescentOptions::new(descent.lsr_steps, LrSchedule::constant(descent.lsr_lr));
    opts.precondition = true;
    opts.delta = f64::MIN_POSITIVE;
    let mut points = Vec::with_capacity(queries.len());
    let mut subsets = HashSet::new();
    let mut failures = 0;
    for q in queries {
        let fixed = gradient_descent_with(q, patterns, &spec, &opts)
            .and_then(|warm| lsr_fixed_point(&warm.point, patterns, &spec));
        match fixed {
            Ok(f) => {
                subsets.insert(f.subset);
                points.push(f.point);
            }
            Err(_) => failures += 1,
        }
    }
    let stored_recovered = (0..patterns.len())
        .filter(|&mu| active_indices(patterns.pattern(mu), patterns, &spec) == [mu])
        .count();
    Ok(Retrieved {
        points,
        unique: subsets.len(),
        stored_recovered,
        failures,
    })
}

fn mean_loglik(points: &[Vec<f64>], mix: &GaussianMixture) -> Option<f64> {
    (!points.is_empty())
        .then(|| points.iter().map(|p| gmm_logpdf(p, mix)).sum::<f64>() / points.len() as f64)
}

/// Samples patterns from the configured mixture and, for each ladder beta,
/// retrieves memories under both energies from one shared query list.
pub fn run_loglik_benchmark(config: &ExperimentConfig) -> Vec<MetricsRow> {
    run_cells(config, |cell| {
        let mix = config.generator.mixture(cell.seed)?.ok_or_else(|| {
            Error::InvalidParameter("the log-likelihood benchmark needs a mixture generator".into())
        })?;
        let index = u32::try_from(cell.index)
            .map_err(|_| Error::InvalidParameter("ladder too long".into()))?;
        let queries = boundary_queries(
            cell.patterns,
            cell.beta,
            config.boundary_thickness,
            config.n_queries,
            cell.seed,
            index,
        )?;
        let checksum = query_checksum(&queries);
        let lse = retrieve_lse(&queries, cell.patterns, cell.beta, &config.descent)?;
        if query_checksum(&queries) != checksum {
            return Err(Error::InvalidParameter(
                "query list changed between energies".into(),
            ));
        }
        let lsr = retrieve_lsr(&queries, cell.patterns, cell.beta, &config.descent)?;
        let mut row = MetricsRow::empty(cell.seed, cell.index, cell.beta);
        row.avg_loglik_lse = mean_loglik(&lse.points, &mix);
        row.avg_loglik_lsr = mean_loglik(&lsr.points, &mix);
        row.unique_lse = Some(lse.unique);
        row.unique_lsr = Some(lsr.unique);
        row.stored_recovered_lse = Some(lse.stored_recovered);
        row.stored_recovered_lsr = Some(lsr.stored_recovered);
        row.query_checksum = Some(checksum[..16].to_string());
        if lsr.failures > 0 {
            row.status = format!("ok ({} lsr queries failed)", lsr.failures);
        }
        Ok(row)
    })
}
