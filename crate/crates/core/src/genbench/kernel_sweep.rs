//! Per-kernel emergence on one-dimensional instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{energy, gradient, norm, EnergySpec};
use crate::error::{Error, Result};
use crate::kernels::KernelId;
use crate::patterns::PatternSet;

use super::config::{ladder, ExperimentConfig, Spacing};

/// Scan resolution over the pattern hull.
pub const SCAN_POINTS: usize = 20_001;
/// Energy range below which a run of scan points counts as flat.
pub const FLAT_TOLERANCE: f64 = 1e-9;
/// Default ladder bounds when the config leaves them open.
pub const DEFAULT_LADDER: (f64, f64) = (0.5, 32.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSweepRow {
    pub kernel: KernelId,
    pub ladder_index: usize,
    pub beta: f64,
    /// Every stored pattern is a stationary strict local minimum.
    pub stored_minima: bool,
    /// Location of a strict interior minimum away from the patterns.
    pub novel_minimum: Option<f64>,
    pub novel_energy: Option<f64>,
    pub coexisting: bool,
    /// Longest interior run of the scan with energy range below
    /// [`FLAT_TOLERANCE`], if it spans at least 2% of the hull.
    pub flat_start: Option<f64>,
    pub flat_end: Option<f64>,
    pub flat_variation: Option<f64>,
}

/// The two-pattern instance `{0, 1}`.
pub fn canonical_instance() -> PatternSet {
    PatternSet::from_rows(&[vec![0.0], vec![1.0]]).expect("two distinct points")
}

fn e1(x: f64, patterns: &PatternSet, spec: &EnergySpec) -> f64 {
    energy(&[x], patterns, spec)
}

fn stored_is_minimum(xi: f64, patterns: &PatternSet, spec: &EnergySpec) -> bool {
    if norm(&gradient(&[xi], patterns, spec)) >= 1e-12 {
        return false;
    }
    let e0 = e1(xi, patterns, spec);
    [1e-6, 1e-4, 1e-3]
        .iter()
        .all(|h| e1(xi - h, patterns, spec) > e0 && e1(xi + h, patterns, spec) > e0)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Stationarity, interior minima and flat segments for one kernel and beta
/// on a one-dimensional pattern set.
pub fn analyze_1d(
    patterns: &PatternSet,
    kernel: KernelId,
    beta: f64,
    ladder_index: usize,
) -> Result<KernelSweepRow> {
    if patterns.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: patterns.dim(),
        });
    }
    let spec = EnergySpec::new(kernel, beta, 0.0)?;
    let xs: Vec<f64> = patterns.iter().map(|p| p[0]).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let stored_minima = xs.iter().all(|&x| stored_is_minimum(x, patterns, &spec));

    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + step * i as f64).collect();
    let es: Vec<f64> = grid.iter().map(|&x| e1(x, patterns, &spec)).collect();
    let near_pattern = |x: f64| xs.iter().any(|p| (x - p).abs() < 1e-6);

    let mut novel = None;
    for i in 1..SCAN_POINTS - 1 {
        let tol = 1e-13 * (1.0 + es[i].abs());
        if es[i].is_finite() && es[i] + tol < es[i - 1] && es[i] + tol < es[i + 1] {
            let x = golden_min(|x| e1(x, patterns, &spec), grid[i - 1], grid[i + 1]);
            if !near_pattern(x) {
                novel = Some((x, e1(x, patterns, &spec)));
                break;
            }
        }
    }

    let mut best: Option<(usize, usize, f64)> = None;
    let mut start = 0;
    let (mut rmin, mut rmax) = (es[0], es[0]);
    let consider = |s: usize, e: usize, var: f64, best: &mut Option<(usize, usize, f64)>| {
        let interior = !(s..=e).any(|j| near_pattern(grid[j]));
        if interior && es[s].is_finite() && best.is_none_or(|b| e - s > b.1 - b.0) {
            *best = Some((s, e, var));
        }
    };
    for j in 1..SCAN_POINTS {
        let (nmin, nmax) = (rmin.min(es[j]), rmax.max(es[j]));
        if es[j].is_finite() && nmax - nmin < FLAT_TOLERANCE {
            rmin = nmin;
            rmax = nmax;
        } else {
            consider(start, j - 1, rmax - rmin, &mut best);
            start = j;
            rmin = es[j];
            rmax = es[j];
        }
    }
    consider(start, SCAN_POINTS - 1, rmax - rmin, &mut best);
    let flat = best.filter(|b| b.1 - b.0 >= SCAN_POINTS / 50);

    Ok(KernelSweepRow {
        kernel,
        ladder_index,
        beta,
        stored_minima,
        novel_minimum: novel.map(|n| n.0),
        novel_energy: novel.map(|n| n.1),
        coexisting: stored_minima && novel.is_some(),
        flat_start: flat.map(|f| grid[f.0]),
        flat_end: flat.map(|f| grid[f.1]),
        flat_variation: flat.map(|f| f.2),
    })
}

/// Runs [`analyze_1d`] for every kernel and ladder beta. The instance comes
/// from the config generator; the ladder defaults to
/// [`DEFAULT_LADDER`] when its bounds are not set.
pub fn run_kernel_sweep(config: &ExperimentConfig) -> Result<Vec<KernelSweepRow>> {
    let patterns = config
        .generator
        .patterns(config.seeds.first().copied().unwrap_or(0))?;
    let l = &config.ladder;
    let betas = if l.count == 0 {
        Vec::new()
    } else {
        ladder(
            l.lower.unwrap_or(DEFAULT_LADDER.0),
            l.upper.unwrap_or(DEFAULT_LADDER.1),
            l.count,
            l.spacing,
        )?
    };
    let kernels: Vec<KernelId> = if config.kernels.is_empty() {
        KernelId::ALL.to_vec()
    } else {
        config.kernels.clone()
    };
    let jobs: Vec<(KernelId, usize, f64)> = kernels
        .iter()
        .flat_map(|&k| betas.iter().enumerate().map(move |(i, &b)| (k, i, b)))
        .collect();
    jobs.par_iter()
        .map(|&(k, i, b)| analyze_1d(&patterns, k, b, i))
        .collect()
}

/// Canonical sweep over `count` geometric betas on `{0, 1}`.
pub fn canonical_sweep(kernels: &[KernelId], count: usize) -> Result<Vec<KernelSweepRow>> {
    let p = canonical_instance();
    let betas = ladder(
        DEFAULT_LADDER.0,
        DEFAULT_LADDER.1,
        count,
        Spacing::Geometric,
    )?;
    let jobs: Vec<(KernelId, usize, f64)> = kernels
        .iter()
        .flat_map(|&k| betas.iter().enumerate().map(move |(i, &b)| (k, i, b)))
        .collect();
    jobs.par_iter()
        .map(|&(k, i, b)| analyze_1d(&p, k, b, i))
        .collect()
}
