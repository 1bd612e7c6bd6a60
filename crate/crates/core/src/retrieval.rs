//! Retrieval dynamics: energy descent, the one-step LSR update and the exact
//! centroid iteration.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::energy::{self, active_indices, lsr_energy, lsr_gradient, norm, EnergySpec};
use crate::error::{Error, Result};
use crate::kernels::{weight_unchecked, KernelId};
use crate::patterns::{sqdist, PatternSet};

/// Default gradient-norm threshold for descent.
pub const DEFAULT_DELTA: f64 = 1e-8;
/// Safety cap on centroid iterations.
pub const FIXED_POINT_CAP: usize = 50;

/// Step size as a function of the step index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LrSchedule {
    Constant {
        lr: f64,
    },
    /// Half-cosine decay from `start` at step 0 to `end` at the last step.
    Cosine {
        start: f64,
        end: f64,
    },
}

impl LrSchedule {
    pub fn constant(lr: f64) -> Self {
        LrSchedule::Constant { lr }
    }

    pub fn cosine(start: f64, end: f64) -> Self {
        LrSchedule::Cosine { start, end }
    }

    pub fn at(&self, t: usize, total: usize) -> f64 {
        match *self {
            LrSchedule::Constant { lr } => lr,
            LrSchedule::Cosine { start, end } => {
                let frac = if total <= 1 {
                    0.0
                } else {
                    t as f64 / (total - 1) as f64
                };
                end + 0.5 * (start - end) * (1.0 + (std::f64::consts::PI * frac).cos())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            LrSchedule::Constant { lr } => lr > 0.0 && lr.is_finite(),
            LrSchedule::Cosine { start, end } => {
                start > 0.0 && end > 0.0 && start.is_finite() && end.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "learning rates must be positive: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub point: Vec<f64>,
    pub steps: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_energy: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOptions {
    pub steps: usize,
    pub schedule: LrSchedule,
    pub delta: f64,
    pub record_energy: bool,
    /// For compact kernels, scale each step by `(eps + sum w) / |B|` so the
    /// update becomes `x - lr * (x - centroid(B))`. The path follows the same
    /// gradient flow but never leaves the support.
    pub precondition: bool,
}

impl DescentOptions {
    pub fn new(steps: usize, schedule: LrSchedule) -> Self {
        DescentOptions {
            steps,
            schedule,
            delta: DEFAULT_DELTA,
            record_energy: false,
            precondition: false,
        }
    }
}

/// Plain gradient descent `x_t = x_{t-1} - lr_t * grad E(x_{t-1})`.
pub fn gradient_descent(
    x0: &[f64],
    patterns: &PatternSet,
    spec: &EnergySpec,
    steps: usize,
    schedule: LrSchedule,
) -> Result<RetrievalResult> {
    gradient_descent_with(x0, patterns, spec, &DescentOptions::new(steps, schedule))
}

pub fn gradient_descent_with(
    x0: &[f64],
    patterns: &PatternSet,
    spec: &EnergySpec,
    opts: &DescentOptions,
) -> Result<RetrievalResult> {
    if opts.steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    opts.schedule.validate()?;
    if x0.len() != patterns.dim() {
        return Err(Error::DimensionMismatch {
            expected: patterns.dim(),
            got: x0.len(),
        });
    }
    let compact = spec.kernel.is_compact();
    if compact && spec.epsilon == 0.0 && active_indices(x0, patterns, spec).is_empty() {
        return Err(Error::UnsupportedStart);
    }
    let mut x = x0.to_vec();
    let mut g = vec![0.0; x.len()];
    let mut scratch = Vec::with_capacity(patterns.len());
    let mut trace = opts
        .record_energy
        .then(|| vec![energy::energy(&x, patterns, spec)]);
    let mut converged = false;
    let mut taken = 0;
    for t in 0..opts.steps {
        if compact {
            let lg = lsr_gradient(&x, patterns, spec);
            if !lg.supported {
                break;
            }
            if lg.norm() < opts.delta {
                converged = true;
                break;
            }
            if opts.precondition && spec.kernel == KernelId::Epanechnikov {
                let c = patterns.centroid(&lg.active);
                for (gi, (xi, ci)) in g.iter_mut().zip(x.iter().zip(&c)) {
                    *gi = xi - ci;
                }
            } else {
                g.copy_from_slice(&lg.vector);
            }
        } else {
            energy::lse_gradient_into(&x, patterns, spec.beta, &mut g, &mut scratch);
            if norm(&g) < opts.delta {
                converged = true;
                break;
            }
        }
        let lr = opts.schedule.at(t, opts.steps);
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= lr * gi;
        }
        taken += 1;
        if let Some(tr) = trace.as_mut() {
            tr.push(energy::energy(&x, patterns, spec));
        }
    }
    if !converged && taken == opts.steps {
        converged = norm(&energy::gradient(&x, patterns, spec)) < opts.delta;
    }
    Ok(RetrievalResult {
        point: x,
        steps: taken,
        converged,
        trajectory_energy: trace,
    })
}

fn single_basin(x0: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> Result<usize> {
    if spec.kernel != KernelId::Epanechnikov {
        return Err(Error::InvalidParameter(
            "single-step retrieval needs the epanechnikov kernel".into(),
        ));
    }
    if x0.len() != patterns.dim() {
        return Err(Error::DimensionMismatch {
            expected: patterns.dim(),
            got: x0.len(),
        });
    }
    let active = active_indices(x0, patterns, spec);
    match active.as_slice() {
        [mu] => Ok(*mu),
        _ => Err(Error::AmbiguousBasin(active.len())),
    }
}

/// One LSR descent step with learning rate `eps + relu(1 - beta/2 |x0 - xi|^2)`
/// from a query inside exactly one support ball. The update cancels to
/// `x0 - (x0 - xi_mu)`, so the stored pattern is returned bit for bit.
pub fn single_step_retrieve(
    x0: &[f64],
    patterns: &PatternSet,
    spec: &EnergySpec,
) -> Result<Vec<f64>> {
    let mu = single_basin(x0, patterns, spec)?;
    Ok(patterns.pattern(mu).to_vec())
}

/// The same step carried out in floating point as `x0 - eta * grad E(x0)`.
/// Agrees with [`single_step_retrieve`] up to rounding.
pub fn single_step_via_gradient(
    x0: &[f64],
    patterns: &PatternSet,
    spec: &EnergySpec,
) -> Result<Vec<f64>> {
    let mu = single_basin(x0, patterns, spec)?;
    let eta =
        spec.epsilon + weight_unchecked(spec.kernel, spec.beta, sqdist(x0, patterns.pattern(mu)));
    let g = lsr_gradient(x0, patterns, spec);
    Ok(x0
        .iter()
        .zip(&g.vector)
        .map(|(x, gi)| x - eta * gi)
        .collect())
}

/// Outcome of the centroid iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub point: Vec<f64>,
    /// Sorted pattern indices whose centroid is `point`.
    pub subset: Vec<usize>,
    pub iterations: usize,
    /// Set when the active sets started repeating without settling; `point`
    /// is then the lowest-energy centroid on the cycle.
    pub cycle_detected: bool,
    /// LSR energy at each visited centroid.
    pub energy_trace: Vec<f64>,
}

impl FixedPoint {
    pub fn energy_monotone(&self) -> bool {
        self.energy_trace.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Repeats `z <- mean{xi_mu : mu in B(z)}` until the active set stops
/// changing.
pub fn lsr_fixed_point(z0: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> Result<FixedPoint> {
    if x_dim_mismatch(z0, patterns) {
        return Err(Error::DimensionMismatch {
            expected: patterns.dim(),
            got: z0.len(),
        });
    }
    let spec = spec.with_kernel(KernelId::Epanechnikov);
    let mut current = active_indices(z0, patterns, &spec);
    if current.is_empty() {
        return Err(Error::UnsupportedStart);
    }
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut visited: Vec<(Vec<usize>, Vec<f64>, f64)> = Vec::new();
    for it in 1..=FIXED_POINT_CAP {
        let c = patterns.centroid(&current);
        let e = lsr_energy(&c, patterns, &spec);
        let next = active_indices(&c, patterns, &spec);
        let trace: Vec<f64> = visited
            .iter()
            .map(|v| v.2)
            .chain(std::iter::once(e))
            .collect();
        if next == current {
            return Ok(FixedPoint {
                point: c,
                subset: current,
                iterations: it,
                cycle_detected: false,
                energy_trace: trace,
            });
        }
        seen.insert(current.clone(), visited.len());
        visited.push((current, c, e));
        if let Some(&start) = seen.get(&next) {
            let (subset, point, _) = visited[start..]
                .iter()
                .min_by(|a, b| a.2.total_cmp(&b.2))
                .cloned()
                .expect("cycle has at least one entry");
            return Ok(FixedPoint {
                point,
                subset,
                iterations: it,
                cycle_detected: true,
                energy_trace: trace,
            });
        }
        if next.is_empty() {
            return Err(Error::UnsupportedStart);
        }
        current = next;
    }
    Err(Error::IterationCap(FIXED_POINT_CAP))
}

fn x_dim_mismatch(x: &[f64], patterns: &PatternSet) -> bool {
    x.len() != patterns.dim()
}

/// Minimal union-find over point indices.
struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root so representatives are first occurrences.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Cluster labels for points merged whenever two lie within `radius`.
/// Labels are the index of the first point in each cluster.
pub fn cluster_within(points: &[Vec<f64>], radius: f64) -> Vec<usize> {
    let mut sets = DisjointSets::new(points.len());
    let r2 = radius * radius;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if sqdist(&points[i], &points[j]) <= r2 {
                sets.union(i, j);
            }
        }
    }
    (0..points.len()).map(|i| sets.find(i)).collect()
}

/// Radius `2 / sqrt(beta)` used to merge approximate LSE memories.
pub fn dedup_radius(beta: f64) -> f64 {
    2.0 / beta.sqrt()
}

/// Unique memories among `points`, in first-occurrence order.
///
/// Gaussian landscapes merge points within [`dedup_radius`]; compact ones
/// keep every bitwise-distinct point, since their fixed points are exact
/// centroids.
pub fn dedup_memories(points: &[Vec<f64>], spec: &EnergySpec) -> Vec<Vec<f64>> {
    if spec.kernel == KernelId::Gaussian {
        let labels = cluster_within(points, dedup_radius(spec.beta));
        return labels
            .iter()
            .enumerate()
            .filter(|(i, l)| *i == **l)
            .map(|(i, _)| points[i].clone())
            .collect();
    }
    let mut seen = std::collections::HashSet::new();
    points
        .iter()
        .filter(|p| seen.insert(p.iter().map(|v| (v + 0.0).to_bits()).collect::<Vec<u64>>()))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::generate_uniform;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn pats(rows: &[f64]) -> PatternSet {
        PatternSet::from_rows(&rows.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let s = LrSchedule::cosine(0.01, 0.0001);
        assert!((s.at(0, 13000) - 0.01).abs() < 1e-15);
        assert!((s.at(12999, 13000) - 0.0001).abs() < 1e-15);
        assert!(s.at(6500, 13000) < 0.01 && s.at(6500, 13000) > 0.0001);
        assert!(LrSchedule::constant(0.0).validate().is_err());
    }

    #[test]
    fn descent_from_stored_pattern_does_not_move() {
        let p = pats(&[0.0, 1.0]);
        let s = EnergySpec::lsr(16.0).unwrap();
        let r = gradient_descent(&[1.0], &p, &s, 100, LrSchedule::constant(0.1)).unwrap();
        assert_eq!(r.point, vec![1.0]);
        assert_eq!(r.steps, 0);
        assert!(r.converged);
    }

    #[test]
    fn descent_single_pattern_lse() {
        let p = PatternSet::from_rows(&[vec![0.3, -0.2]]).unwrap();
        let s = EnergySpec::lse(3.0).unwrap();
        let r = gradient_descent(&[2.0, 1.0], &p, &s, 10_000, LrSchedule::constant(0.1)).unwrap();
        assert!(r.converged);
        assert!(sqdist(&r.point, p.pattern(0)).sqrt() < 1e-8);
    }

    #[test]
    fn descent_symmetric_stationary_point() {
        let p = pats(&[0.0, 1.0]);
        let r = gradient_descent(
            &[0.5],
            &p,
            &EnergySpec::lse(2.0).unwrap(),
            50,
            LrSchedule::constant(0.1),
        )
        .unwrap();
        assert_eq!(r.point, vec![0.5]);
    }

    #[test]
    fn descent_rejects_unsupported_start() {
        let p = pats(&[0.0, 1.0]);
        let s = EnergySpec::lsr(16.0).unwrap();
        assert!(matches!(
            gradient_descent(&[0.5], &p, &s, 10, LrSchedule::constant(0.1)),
            Err(Error::UnsupportedStart)
        ));
        assert!(gradient_descent(&[0.0], &p, &s, 0, LrSchedule::constant(0.1)).is_err());
    }

    #[test]
    fn descent_energy_trace_decreases() {
        let p = generate_uniform(10, 2, 5).unwrap();
        let s = EnergySpec::lse(10.0).unwrap();
        let mut opts = DescentOptions::new(200, LrSchedule::constant(0.05));
        opts.record_energy = true;
        let r = gradient_descent_with(&[0.5, 0.5], &p, &s, &opts).unwrap();
        let tr = r.trajectory_energy.unwrap();
        assert_eq!(tr.len(), r.steps + 1);
        assert!(tr.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn preconditioned_descent_reaches_centroid() {
        let p = pats(&[0.0, 1.0]);
        let s = EnergySpec::lsr(2.0).unwrap();
        let mut opts = DescentOptions::new(500, LrSchedule::constant(0.5));
        opts.precondition = true;
        let r = gradient_descent_with(&[0.2], &p, &s, &opts).unwrap();
        assert!(r.converged);
        assert!((r.point[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn single_step_examples() {
        let p = pats(&[0.0, 10.0]);
        let s = EnergySpec::lsr(2.0).unwrap();
        let out = single_step_retrieve(&[0.1], &p, &s).unwrap();
        assert_eq!(out[0].to_bits(), 0.0f64.to_bits());
        assert_eq!(single_step_retrieve(&[10.0], &p, &s).unwrap(), vec![10.0]);
        let fp = single_step_via_gradient(&[0.1], &p, &s).unwrap();
        assert!(fp[0].abs() < 1e-12);
        let q = pats(&[0.0, 1.0]);
        assert!(matches!(
            single_step_retrieve(&[0.5], &q, &s),
            Err(Error::AmbiguousBasin(2))
        ));
        assert!(matches!(
            single_step_retrieve(&[5.0], &p, &s),
            Err(Error::AmbiguousBasin(0))
        ));
    }

    #[test]
    fn fixed_point_examples() {
        let p = pats(&[0.0, 1.0]);
        let s = EnergySpec::lsr(2.0).unwrap();
        let f = lsr_fixed_point(&[0.4], &p, &s).unwrap();
        assert_eq!(f.point, vec![0.5]);
        assert_eq!(f.subset, vec![0, 1]);
        assert_eq!(f.iterations, 1);
        let d = EnergySpec::lsr(16.0).unwrap();
        let f = lsr_fixed_point(&[1.0], &p, &d).unwrap();
        assert_eq!((f.point, f.iterations), (vec![1.0], 1));
        assert!(matches!(
            lsr_fixed_point(&[0.5], &p, &d),
            Err(Error::UnsupportedStart)
        ));
    }

    #[test]
    fn fixed_point_after_descent_takes_one_iteration() {
        let p = generate_uniform(30, 3, 11).unwrap();
        let s = EnergySpec::new(KernelId::Epanechnikov, 20.0, 0.0).unwrap();
        let mut rng = stream_rng(3, 0);
        let mut ones = 0;
        let mut total = 0;
        for _ in 0..50 {
            let mu = rng.random_range(0..p.len());
            let x0: Vec<f64> = p
                .pattern(mu)
                .iter()
                .map(|v| v + 0.05 * (rng.random::<f64>() - 0.5))
                .collect();
            let mut opts = DescentOptions::new(500, LrSchedule::constant(0.1));
            opts.precondition = true;
            let warm = gradient_descent_with(&x0, &p, &s, &opts).unwrap();
            let f = lsr_fixed_point(&warm.point, &p, &s).unwrap();
            total += 1;
            ones += usize::from(f.iterations == 1);
        }
        assert_eq!(ones, total);
    }

    #[test]
    fn dedup_examples() {
        let lse = EnergySpec::lse(4.0).unwrap();
        let pts = vec![vec![0.0], vec![0.9], vec![5.0]];
        assert_eq!(dedup_memories(&pts, &lse), vec![vec![0.0], vec![5.0]]);
        assert_eq!(dedup_memories(&[vec![1.0], vec![1.0]], &lse).len(), 1);
        let lsr = EnergySpec::lsr(4.0).unwrap();
        assert_eq!(
            dedup_memories(&[vec![0.0], vec![-0.0], vec![1e-300]], &lsr).len(),
            2
        );
        // Chains merge transitively.
        let chain = vec![vec![0.0], vec![0.8], vec![1.6], vec![2.4]];
        assert_eq!(dedup_memories(&chain, &lse).len(), 1);
    }

    #[test]
    fn dedup_distinct_subset_centroids() {
        for seed in 0..50 {
            let p = generate_uniform(4, 3, seed).unwrap();
            let a = p.centroid(&[1, 2]);
            let b = p.centroid(&[1, 3]);
            assert_eq!(
                dedup_memories(&[a, b], &EnergySpec::lsr(1.0).unwrap()).len(),
                2
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fixed_point_is_self_consistent(seed in 0u64..100_000, scale in 0.3f64..3.0) {
            let p = generate_uniform(15, 2, seed).unwrap();
            let (lo, hi) = p.critical_beta_range().unwrap();
            let beta = lo * (hi / lo).powf(scale / 3.0);
            let s = EnergySpec::lsr(beta).unwrap();
            let f = lsr_fixed_point(&[0.5, 0.5], &p, &s);
            if let Ok(f) = f {
                if !f.cycle_detected {
                    prop_assert_eq!(&f.point, &p.centroid(&f.subset));
                    prop_assert_eq!(&active_indices(&f.point, &p, &s), &f.subset);
                    prop_assert!(lsr_gradient(&f.point, &p, &s).is_exact_zero());
                    prop_assert!(f.energy_monotone());
                }
            }
        }
    }
}
