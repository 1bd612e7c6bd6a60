//! Memory counts across a beta ladder.

use rayon::prelude::*;

use crate::emergence::{classify_records, discover_minima_with, EnumerationOptions};
use crate::energy::EnergySpec;
use crate::error::{Error, Result};
use crate::patterns::PatternSet;
use crate::rng::{job_rng, streams};

use super::config::{ExperimentConfig, MetricsRow};
use super::support::support_fraction_with;

/// One cell of a sweep: a seed's pattern set at one ladder rung.
pub(crate) struct Cell<'a> {
    pub seed: u64,
    pub index: usize,
    pub beta: f64,
    pub patterns: &'a PatternSet,
}

/// Pattern sets and ladders for every seed; seeds whose setup fails yield a
/// single failed row.
pub(crate) fn prepare(config: &ExperimentConfig) -> Vec<(u64, Result<(PatternSet, Vec<f64>)>)> {
    config
        .seeds
        .iter()
        .map(|&seed| {
            let setup = config.generator.patterns(seed).and_then(|p| {
                let ladder = config.ladder.resolve(&p)?;
                Ok((p, ladder))
            });
            (seed, setup)
        })
        .collect()
}

pub(crate) fn run_cells<F>(config: &ExperimentConfig, f: F) -> Vec<MetricsRow>
where
    F: Fn(&Cell<'_>) -> Result<MetricsRow> + Sync,
{
    let prepared = prepare(config);
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for (seed, setup) in &prepared {
        match setup {
            Ok((p, ladder)) => cells.extend(ladder.iter().enumerate().map(|(index, &beta)| Cell {
                seed: *seed,
                index,
                beta,
                patterns: p,
            })),
            Err(e) => failures.push(MetricsRow::failed(*seed, 0, f64::NAN, e)),
        }
    }
    let mut rows: Vec<MetricsRow> = cells
        .par_iter()
        .map(|c| f(c).unwrap_or_else(|e| MetricsRow::failed(c.seed, c.index, c.beta, &e)))
        .collect();
    rows.extend(failures);
    rows.sort_by_key(|r| (r.seed, r.ladder_index));
    rows
}

/// For every seed and ladder beta: novel and stored counts from the pruned
/// enumeration plus the Monte Carlo support fraction. Per-cell errors become
/// failed rows.
pub fn run_minima_scaling(config: &ExperimentConfig) -> Vec<MetricsRow> {
    let opts = EnumerationOptions::with_delta(config.delta);
    run_cells(config, |cell| {
        let spec = EnergySpec::new(config.kernel, cell.beta, 0.0)?;
        let memories = discover_minima_with(cell.patterns, &spec, &opts)?;
        let report = classify_records(memories, cell.patterns, &spec, config.delta);
        let index = u32::try_from(cell.index)
            .map_err(|_| Error::InvalidParameter("ladder too long".into()))?;
        let mut rng = job_rng(cell.seed, streams::MONTE_CARLO, index);
        let support = support_fraction_with(cell.patterns, &spec, config.mc_samples, &mut rng)?;
        let mut row = MetricsRow::empty(cell.seed, cell.index, cell.beta);
        row.unique_lsr = Some(report.memories.len());
        row.stored_recovered_lsr = Some(report.stored_recovered);
        row.novel_count = Some(report.novel_count);
        row.support_fraction = Some(support);
        Ok(row)
    })
}
