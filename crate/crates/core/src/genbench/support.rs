//! Support-boundary queries and Monte Carlo support volume.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::energy::EnergySpec;
use crate::error::{Error, Result};
use crate::kernels::in_support;
use crate::patterns::{sqdist, PatternSet};
use crate::rng::{job_rng, streams, Rng};

/// Shell `2/beta - thickness <= |x - xi|^2 < 2/beta` around one pattern.
#[derive(Debug, Clone, Copy)]
pub struct Shell {
    inner2: f64,
    outer2: f64,
    /// `(r_in / r_out)^d`, the inner ball's share of the outer volume.
    inner_share: f64,
}

impl Shell {
    pub fn new(spec: &EnergySpec, thickness: f64, d: usize) -> Result<Self> {
        let outer2 = 2.0 / spec.beta;
        if !(thickness > 0.0 && thickness < outer2) {
            return Err(Error::InvalidParameter(format!(
                "thickness must lie in (0, {outer2}), got {thickness}"
            )));
        }
        let inner2 = outer2 - thickness;
        let inner_share = (inner2 / outer2).powf(0.5 * d as f64);
        Ok(Shell {
            inner2,
            outer2,
            inner_share,
        })
    }

    pub fn contains(&self, xi: &[f64], x: &[f64]) -> bool {
        let d2 = sqdist(x, xi);
        d2 >= self.inner2 && d2 < self.outer2
    }

    /// One point uniform in shell volume: a uniform direction and a radius
    /// with `r^d` uniform between the inner and outer values.
    pub fn sample(&self, xi: &[f64], rng: &mut Rng) -> Vec<f64> {
        let d = xi.len();
        loop {
            let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if len == 0.0 {
                continue;
            }
            let u: f64 = rng.random();
            let r = self.outer2.sqrt()
                * (self.inner_share + u * (1.0 - self.inner_share)).powf(1.0 / d as f64);
            let x: Vec<f64> = xi.iter().zip(&dir).map(|(c, v)| c + r * v / len).collect();
            // Rounding can push a point across either face; redraw it.
            if self.contains(xi, &x) {
                return x;
            }
        }
    }
}

/// `n` points uniform in the support-boundary shell of `xi`.
pub fn sample_support_boundary(
    xi: &[f64],
    spec: &EnergySpec,
    thickness: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let shell = Shell::new(spec, thickness, xi.len())?;
    let mut rng = job_rng(seed, streams::QUERIES, 0);
    Ok((0..n).map(|_| shell.sample(xi, &mut rng)).collect())
}

/// Fraction of uniform `[0,1]^d` samples with finite LSR energy at `eps = 0`.
pub fn support_fraction_mc(
    patterns: &PatternSet,
    spec: &EnergySpec,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = job_rng(seed, streams::MONTE_CARLO, 0);
    support_fraction_with(patterns, spec, n_samples, &mut rng)
}

pub fn support_fraction_with(
    patterns: &PatternSet,
    spec: &EnergySpec,
    n_samples: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter(
            "n_samples must be at least 1".into(),
        ));
    }
    let d = patterns.dim();
    let mut x = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..n_samples {
        x.iter_mut().for_each(|v| *v = rng.random());
        if patterns
            .iter()
            .any(|xi| in_support(spec.beta, sqdist(&x, xi)))
        {
            hits += 1;
        }
    }
    Ok(hits as f64 / n_samples as f64)
}

/// Binomial standard error of a Monte Carlo fraction.
pub fn fraction_std_error(p: f64, n_samples: usize) -> f64 {
    (p * (1.0 - p) / n_samples as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::generate_uniform;

    #[test]
    fn shell_examples_1d() {
        let s = EnergySpec::lsr(2.0).unwrap();
        let pts = sample_support_boundary(&[0.0], &s, 0.01, 200, 5).unwrap();
        let lo = 0.99f64.sqrt();
        for p in &pts {
            assert!(p[0].abs() >= lo && p[0].abs() < 1.0, "{}", p[0]);
        }
        assert!(pts.iter().any(|p| p[0] > 0.0) && pts.iter().any(|p| p[0] < 0.0));
        assert_eq!(
            pts,
            sample_support_boundary(&[0.0], &s, 0.01, 200, 5).unwrap()
        );
        assert!(sample_support_boundary(&[0.0], &s, 1.0, 1, 0).is_err());
        assert!(sample_support_boundary(&[0.0], &s, 0.0, 1, 0).is_err());
    }

    #[test]
    fn shell_inequality_high_dim() {
        let s = EnergySpec::lsr(40.0).unwrap();
        let xi = vec![0.3; 64];
        let shell = Shell::new(&s, 0.2 * 2.0 / 40.0, 64).unwrap();
        for p in sample_support_boundary(&xi, &s, 0.2 * 2.0 / 40.0, 500, 1).unwrap() {
            assert!(shell.contains(&xi, &p));
        }
    }

    #[test]
    fn shell_radius_distribution_matches_volume() {
        // In 3D with r_in = 0, r^3 is uniform so the median radius is 0.5^(1/3) r_out.
        let s = EnergySpec::lsr(2.0).unwrap();
        let pts = sample_support_boundary(&[0.0; 3], &s, 1.0 - 1e-12, 20_000, 2).unwrap();
        let below = pts
            .iter()
            .filter(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt() < 0.5f64.cbrt())
            .count();
        let frac = below as f64 / pts.len() as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn support_fraction_examples() {
        let one = PatternSet::from_rows(&[vec![0.5]]).unwrap();
        assert_eq!(
            support_fraction_mc(&one, &EnergySpec::lsr(2.0).unwrap(), 1000, 0).unwrap(),
            1.0
        );
        let n = 1_000_000;
        let f = support_fraction_mc(&one, &EnergySpec::lsr(200.0).unwrap(), n, 0).unwrap();
        assert!((f - 0.2).abs() <= 3.0 * fraction_std_error(0.2, n), "{f}");
        assert!(support_fraction_mc(&one, &EnergySpec::lsr(2.0).unwrap(), 0, 0).is_err());
    }

    #[test]
    fn support_fraction_non_increasing_in_beta() {
        let p = generate_uniform(10, 3, 9).unwrap();
        let mut prev = 1.0;
        for beta in [1.0, 5.0, 20.0, 80.0, 320.0] {
            let f = support_fraction_mc(&p, &EnergySpec::lsr(beta).unwrap(), 20_000, 4).unwrap();
            assert!(f <= prev);
            prev = f;
        }
    }
}
