//! Enumeration and classification of every local minimum of the LSR energy.
//!
//! Each minimum is the centroid of a pattern subset `K` whose own active set
//! is exactly `K`. Two searches are provided: an exhaustive sweep over all
//! `2^M - 1` subsets for small `M`, and a neighbourhood-pruned search that
//! only looks at subsets of patterns lying within `2 * sqrt(2/beta)` of an
//! anchor pattern. Both return records keyed and sorted by subset.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{active_indices, lsr_energy, lsr_gradient, lsr_hessian_scalar, EnergySpec};
use crate::error::{Error, Result};
use crate::kernels::KernelId;
use crate::patterns::{generate_grid, sqdist, PatternSet};

/// Default gradient-norm threshold for accepting a centroid.
pub const DEFAULT_DELTA: f64 = 1e-10;
/// Largest `M` the exhaustive search accepts.
pub const BRUTE_FORCE_CAP: usize = 20;
/// Largest number of subsets examined for a single anchor.
pub const SUBSET_CAP: u64 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemoryKind {
    Stored,
    Novel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalClass {
    NotEmergent,
    LocallyEmergent,
    StronglyEmergent,
}

/// Which patterns enter `D_max` in the basin radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasinRadiusMode {
    /// Maximum distance from the memory to any stored pattern.
    #[default]
    AllPatterns,
    /// Maximum distance to the active patterns only. Can overshoot the true
    /// basin when an inactive pattern sits just outside the support.
    ActiveOnly,
}

/// Support margins at a memory `x*` with active set `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// `min_{mu in B} (2/beta - |x* - xi_mu|^2)`.
    pub delta_min: f64,
    /// `min_{nu not in B} (|x* - xi_nu|^2 - 2/beta)`; `None` when every
    /// pattern is active.
    pub gamma_min: Option<f64>,
    pub d_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub point: Vec<f64>,
    pub subset: Vec<usize>,
    pub energy: f64,
    pub kind: MemoryKind,
    /// Only set for novel memories after classification.
    pub local_class: Option<LocalClass>,
    pub basin_radius: f64,
    pub margins: Margins,
    /// Leave-one-out check that every generating pattern is needed.
    pub minimal: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergenceReport {
    pub memories: Vec<MemoryRecord>,
    pub stored_recovered: usize,
    pub novel_count: usize,
    pub globally_emergent: bool,
    /// Smallest distance from a novel memory to the pattern set.
    pub epsilon_star: Option<f64>,
}

impl EmergenceReport {
    pub fn novel(&self) -> impl Iterator<Item = &MemoryRecord> {
        self.memories.iter().filter(|m| m.kind == MemoryKind::Novel)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationOptions {
    pub delta: f64,
    pub brute_force_cap: usize,
    pub subset_cap: u64,
    pub basin: BasinRadiusMode,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            delta: DEFAULT_DELTA,
            brute_force_cap: BRUTE_FORCE_CAP,
            subset_cap: SUBSET_CAP,
            basin: BasinRadiusMode::AllPatterns,
        }
    }
}

impl EnumerationOptions {
    pub fn with_delta(delta: f64) -> Self {
        EnumerationOptions {
            delta,
            ..Self::default()
        }
    }
}

fn require_lsr(spec: &EnergySpec) -> Result<()> {
    if spec.kernel != KernelId::Epanechnikov {
        return Err(Error::InvalidParameter(format!(
            "minimum enumeration needs the epanechnikov kernel, got {}",
            spec.kernel
        )));
    }
    Ok(())
}

/// Accept test shared by both searches: the centroid of `subset` must have
/// `subset` as its active set and a gradient below `delta`.
fn accept(
    subset: &[usize],
    patterns: &PatternSet,
    spec: &EnergySpec,
    delta: f64,
) -> Option<Vec<f64>> {
    let c = patterns.centroid(subset);
    if active_indices(&c, patterns, spec) != subset {
        return None;
    }
    let g = lsr_gradient(&c, patterns, spec);
    (g.supported && g.norm() < delta).then_some(c)
}

/// Margins and `r* = sqrt(D_max^2 + min(delta_min, gamma_min)) - D_max`.
pub fn basin_margins(
    point: &[f64],
    subset: &[usize],
    patterns: &PatternSet,
    spec: &EnergySpec,
    mode: BasinRadiusMode,
) -> (Margins, f64) {
    let two_over_beta = 2.0 / spec.beta;
    let mut delta_min = f64::INFINITY;
    let mut gamma_min = f64::INFINITY;
    let mut d_max: f64 = 0.0;
    for (mu, xi) in patterns.iter().enumerate() {
        let d2 = sqdist(point, xi);
        let active = subset.binary_search(&mu).is_ok();
        if active {
            delta_min = delta_min.min(two_over_beta - d2);
        } else {
            gamma_min = gamma_min.min(d2 - two_over_beta);
        }
        if active || mode == BasinRadiusMode::AllPatterns {
            d_max = d_max.max(d2.sqrt());
        }
    }
    let margin = delta_min.min(gamma_min).max(0.0);
    let r = (d_max * d_max + margin).sqrt() - d_max;
    let margins = Margins {
        delta_min,
        gamma_min: gamma_min.is_finite().then_some(gamma_min),
        d_max,
    };
    (margins, r.max(0.0))
}

/// Basin radius of an accepted memory.
pub fn basin_radius(record: &MemoryRecord, patterns: &PatternSet, spec: &EnergySpec) -> f64 {
    basin_margins(
        &record.point,
        &record.subset,
        patterns,
        spec,
        BasinRadiusMode::AllPatterns,
    )
    .1
}

fn build_record(
    subset: Vec<usize>,
    point: Vec<f64>,
    patterns: &PatternSet,
    spec: &EnergySpec,
    mode: BasinRadiusMode,
) -> MemoryRecord {
    let energy = lsr_energy(&point, patterns, spec);
    let kind = if subset.len() == 1 && point.as_slice() == patterns.pattern(subset[0]) {
        MemoryKind::Stored
    } else {
        MemoryKind::Novel
    };
    let (margins, basin_radius) = basin_margins(&point, &subset, patterns, spec, mode);
    MemoryRecord {
        point,
        subset,
        energy,
        kind,
        local_class: None,
        basin_radius,
        margins,
        minimal: None,
    }
}

fn finish(
    found: BTreeMap<Vec<usize>, Vec<f64>>,
    patterns: &PatternSet,
    spec: &EnergySpec,
    mode: BasinRadiusMode,
) -> Vec<MemoryRecord> {
    found
        .into_iter()
        .map(|(k, p)| build_record(k, p, patterns, spec, mode))
        .collect()
}

/// Exhaustive search over every non-empty subset.
pub fn brute_force_minima(
    patterns: &PatternSet,
    spec: &EnergySpec,
    delta: f64,
) -> Result<Vec<MemoryRecord>> {
    brute_force_minima_with(patterns, spec, &EnumerationOptions::with_delta(delta))
}

pub fn brute_force_minima_with(
    patterns: &PatternSet,
    spec: &EnergySpec,
    opts: &EnumerationOptions,
) -> Result<Vec<MemoryRecord>> {
    require_lsr(spec)?;
    let m = patterns.len();
    if m > opts.brute_force_cap {
        return Err(Error::TooManyPatterns {
            got: m,
            cap: opts.brute_force_cap,
        });
    }
    let found: BTreeMap<Vec<usize>, Vec<f64>> = (1u64..(1u64 << m))
        .into_par_iter()
        .filter_map(|mask| {
            let subset: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
            accept(&subset, patterns, spec, opts.delta).map(|c| (subset, c))
        })
        .collect();
    Ok(finish(found, patterns, spec, opts.basin))
}

/// Patterns `nu > mu` within `2 * sqrt(2/beta)` of `mu`.
///
/// Every accepted subset has all pairwise distances below that bound, so
/// enumerating subsets that contain their smallest index as anchor covers
/// each candidate exactly once.
fn forward_neighbours(patterns: &PatternSet, spec: &EnergySpec, mu: usize) -> Vec<usize> {
    let reach = 2.0 * (2.0 / spec.beta).sqrt() * (1.0 + 1e-12);
    let reach2 = reach * reach;
    ((mu + 1)..patterns.len())
        .filter(|&nu| sqdist(patterns.pattern(mu), patterns.pattern(nu)) <= reach2)
        .collect()
}

/// Neighbourhood-pruned search; returns the same set as
/// [`brute_force_minima`].
pub fn discover_minima(
    patterns: &PatternSet,
    spec: &EnergySpec,
    delta: f64,
) -> Result<Vec<MemoryRecord>> {
    discover_minima_with(patterns, spec, &EnumerationOptions::with_delta(delta))
}

pub fn discover_minima_with(
    patterns: &PatternSet,
    spec: &EnergySpec,
    opts: &EnumerationOptions,
) -> Result<Vec<MemoryRecord>> {
    require_lsr(spec)?;
    let hoods: Vec<Vec<usize>> = (0..patterns.len())
        .map(|mu| forward_neighbours(patterns, spec, mu))
        .collect();
    for (mu, hood) in hoods.iter().enumerate() {
        if hood.len() >= 63 || (1u64 << hood.len()) > opts.subset_cap {
            return Err(Error::NeighborhoodBlowup {
                anchor: mu,
                size: hood.len() + 1,
            });
        }
    }
    let per_anchor: Vec<Vec<(Vec<usize>, Vec<f64>)>> = hoods
        .par_iter()
        .enumerate()
        .map(|(mu, hood)| {
            let mut out = Vec::new();
            let mut subset = Vec::with_capacity(hood.len() + 1);
            for mask in 0u64..(1u64 << hood.len()) {
                subset.clear();
                subset.push(mu);
                subset.extend(
                    hood.iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, nu)| *nu),
                );
                if let Some(c) = accept(&subset, patterns, spec, opts.delta) {
                    out.push((subset.clone(), c));
                }
            }
            out
        })
        .collect();
    let found: BTreeMap<Vec<usize>, Vec<f64>> = per_anchor.into_iter().flatten().collect();
    Ok(finish(found, patterns, spec, opts.basin))
}

/// Stationarity under the kernel chosen by `spec`: supported and `|grad E| < delta`.
pub fn is_stationary(x: &[f64], patterns: &PatternSet, spec: &EnergySpec, delta: f64) -> bool {
    if spec.kernel.is_compact() {
        let g = lsr_gradient(x, patterns, spec);
        g.supported && g.norm() < delta
    } else {
        crate::energy::norm(&crate::energy::lse_gradient(x, patterns, spec)) < delta
    }
}

/// Number of stored patterns that are stationary points of the landscape.
/// Works for any kernel, so it also measures how many patterns the
/// log-sum-exp energy keeps exactly.
pub fn stationary_stored_patterns(patterns: &PatternSet, spec: &EnergySpec, delta: f64) -> usize {
    patterns
        .iter()
        .filter(|xi| is_stationary(xi, patterns, spec, delta))
        .count()
}

/// Enumerates all minima and classifies them.
pub fn classify_emergence(
    patterns: &PatternSet,
    spec: &EnergySpec,
    delta: f64,
) -> Result<EmergenceReport> {
    classify_emergence_with(patterns, spec, &EnumerationOptions::with_delta(delta))
}

pub fn classify_emergence_with(
    patterns: &PatternSet,
    spec: &EnergySpec,
    opts: &EnumerationOptions,
) -> Result<EmergenceReport> {
    let memories = discover_minima_with(patterns, spec, opts)?;
    Ok(classify_records(memories, patterns, spec, opts.delta))
}

/// Fills in local classes and summary counts for enumerated memories.
pub fn classify_records(
    mut memories: Vec<MemoryRecord>,
    patterns: &PatternSet,
    spec: &EnergySpec,
    delta: f64,
) -> EmergenceReport {
    let mut recovered = vec![false; patterns.len()];
    for m in memories.iter().filter(|m| m.kind == MemoryKind::Stored) {
        recovered[m.subset[0]] = true;
    }
    let stored_recovered = recovered.iter().filter(|r| **r).count();
    let mut epsilon_star: Option<f64> = None;
    for m in memories.iter_mut().filter(|m| m.kind == MemoryKind::Novel) {
        let hits = m.subset.iter().filter(|mu| recovered[**mu]).count();
        m.local_class = Some(if hits == m.subset.len() {
            LocalClass::StronglyEmergent
        } else if hits > 0 {
            LocalClass::LocallyEmergent
        } else {
            LocalClass::NotEmergent
        });
        m.minimal = Some(leave_one_out_minimal(m, patterns, spec, delta));
        let nearest = patterns
            .iter()
            .map(|xi| sqdist(&m.point, xi))
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        epsilon_star = Some(epsilon_star.map_or(nearest, |e| e.min(nearest)));
    }
    let novel_count = memories
        .iter()
        .filter(|m| m.kind == MemoryKind::Novel)
        .count();
    EmergenceReport {
        memories,
        stored_recovered,
        novel_count,
        globally_emergent: stored_recovered == patterns.len() && novel_count >= 1,
        epsilon_star,
    }
}

/// True when removing any generating pattern destroys stationarity.
fn leave_one_out_minimal(
    m: &MemoryRecord,
    patterns: &PatternSet,
    spec: &EnergySpec,
    delta: f64,
) -> bool {
    if patterns.len() < 2 {
        return true;
    }
    m.subset.iter().all(|&mu| match patterns.without(mu) {
        Ok(reduced) => !is_stationary(&m.point, &reduced, spec, delta),
        Err(_) => false,
    })
}

/// Result of the binary search over basin radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSearch {
    pub beta: f64,
    pub radius: f64,
    /// Mean interaction count at the returned radius.
    pub k_prime: f64,
    pub iterations: usize,
    pub hit_target: bool,
}

/// Mean over patterns of `#{nu : D(mu, nu) <= 2r}`, self included.
pub fn mean_interactions(patterns: &PatternSet, r: f64) -> Result<f64> {
    let g = patterns.geometry()?;
    let m = patterns.len();
    let mut total = 0usize;
    for mu in 0..m {
        total += g.row(mu).iter().filter(|d| **d <= 2.0 * r).count();
    }
    Ok(total as f64 / m as f64)
}

/// Bisects the basin radius `r` over `[0.5 min D, 4 max D]`, where the
/// minimum runs over the full distance matrix, until the mean
/// interaction count equals `target_k` or `n_max` rounds have run, and
/// returns `beta = 2 / r^2`.
pub fn beta_search(patterns: &PatternSet, target_k: f64, n_max: usize) -> Result<BetaSearch> {
    if !(target_k >= 1.0) || !target_k.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "target_k must be at least 1, got {target_k}"
        )));
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let g = patterns.geometry()?;
    // min D over the whole matrix is the zero diagonal, so the lower bracket
    // is 0; bracketing at half the closest pair would make K' = 1 unreachable.
    let (mut lo, mut hi) = (0.0, 4.0 * g.max_distance());
    let mut r = 0.5 * (lo + hi);
    let mut iterations = 0;
    let k = loop {
        let k = mean_interactions(patterns, r)?;
        if k < target_k {
            lo = r;
        }
        if k > target_k {
            hi = r;
        }
        r = 0.5 * (lo + hi);
        iterations += 1;
        if k == target_k || iterations >= n_max {
            break k;
        }
    };
    let hit_target = k == target_k;
    // The final r may have moved past the last evaluated count.
    let k_prime = mean_interactions(patterns, r)?;
    Ok(BetaSearch {
        beta: 2.0 / (r * r),
        radius: r,
        k_prime,
        iterations,
        hit_target,
    })
}

/// Novel-memory count on a regular grid and the active-set size at a deep
/// interior point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCount {
    pub observed: usize,
    pub lambda: usize,
}

/// Runs the pruned search on `generate_grid(points_per_dim, d)`. `lambda` is
/// the larger active-set size of two deep-interior probes: the most central
/// grid point and the point halfway between it and its upper neighbours
/// along every axis.
pub fn grid_count_check(points_per_dim: usize, d: usize, beta: f64) -> Result<GridCount> {
    if points_per_dim < 2 {
        return Err(Error::InvalidParameter(
            "grid needs at least 2 points per dimension".into(),
        ));
    }
    let grid = generate_grid(points_per_dim, d)?;
    let spec = EnergySpec::lsr(beta)?;
    let memories = discover_minima(&grid, &spec, DEFAULT_DELTA)?;
    let observed = memories
        .iter()
        .filter(|m| m.kind == MemoryKind::Novel)
        .count();
    let k = points_per_dim as f64;
    let mid = ((points_per_dim - 1) / 2) as f64;
    let cell_centre = vec![(mid + 1.0) / k; d];
    let grid_point = vec![(mid + 0.5) / k; d];
    let lambda = active_indices(&cell_centre, &grid, &spec)
        .len()
        .max(active_indices(&grid_point, &grid, &spec).len());
    Ok(GridCount { observed, lambda })
}

/// Checks that an accepted memory is a strict local minimum: exact zero
/// gradient and a positive Hessian scalar.
pub fn is_strict_minimum(record: &MemoryRecord, patterns: &PatternSet, spec: &EnergySpec) -> bool {
    lsr_gradient(&record.point, patterns, spec).is_exact_zero()
        && lsr_hessian_scalar(&record.point, patterns, spec)
            .map(|c| c > 0.0)
            .unwrap_or(false)
}
