//! Isotropic Gaussian mixtures used as ground truth.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patterns::{sqdist, PatternSet};
use crate::rng::{job_rng, streams};

/// Equal-weight mixture of `k` Gaussians with shared isotropic `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    means: Vec<f64>,
    k: usize,
    d: usize,
    sigma: f64,
}

impl GaussianMixture {
    /// `means` is row-major `k x d`.
    pub fn new(means: Vec<f64>, d: usize, sigma: f64) -> Result<Self> {
        if d == 0 || means.is_empty() || !means.len().is_multiple_of(d) {
            return Err(Error::InvalidParameter(
                "means must be a non-empty k x d matrix".into(),
            ));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if means.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("means must be finite".into()));
        }
        Ok(GaussianMixture {
            k: means.len() / d,
            means,
            d,
            sigma,
        })
    }

    /// Means drawn uniformly from `[0,1]^d`.
    pub fn random(k: usize, d: usize, sigma: f64, seed: u64) -> Result<Self> {
        let mut rng = job_rng(seed, streams::MIXTURE_MEANS, 0);
        let means = (0..k * d).map(|_| rng.random::<f64>()).collect();
        Self::new(means, d, sigma)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mean(&self, i: usize) -> &[f64] {
        &self.means[i * self.d..(i + 1) * self.d]
    }

    /// `m` draws: a uniform component, then an isotropic normal offset.
    pub fn sample(&self, m: usize, seed: u64) -> Result<PatternSet> {
        let mut rng = job_rng(seed, streams::MIXTURE_SAMPLES, 0);
        let mut data = Vec::with_capacity(m * self.d);
        for _ in 0..m {
            let c = rng.random_range(0..self.k);
            for v in self.mean(c) {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(v + self.sigma * z);
            }
        }
        PatternSet::new(data, self.d)
    }
}

/// `ln((1/k) sum_i N(x | mu_i, sigma^2 I))` with a max shift.
pub fn gmm_logpdf(x: &[f64], mix: &GaussianMixture) -> f64 {
    assert_eq!(x.len(), mix.d, "point dimension does not match the mixture");
    let s2 = mix.sigma * mix.sigma;
    let exps: Vec<f64> = (0..mix.k)
        .map(|i| -0.5 * sqdist(x, mix.mean(i)) / s2)
        .collect();
    let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + exps.iter().map(|e| (e - top).exp()).sum::<f64>().ln();
    let norm = -0.5 * mix.d as f64 * (2.0 * std::f64::consts::PI * s2).ln();
    lse + norm - (mix.k as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_component_peak() {
        let mix = GaussianMixture::new(vec![0.0], 1, 0.1).unwrap();
        let v = gmm_logpdf(&[0.0], &mix);
        assert!((v - (-0.5 * (2.0 * std::f64::consts::PI * 0.01).ln())).abs() < 1e-14);
        assert!((v - 1.3836).abs() < 1e-4);
    }

    #[test]
    fn dominant_component_bound() {
        let mix = GaussianMixture::new(vec![0.0, 0.0, 5.0, 5.0, 10.0, 0.0], 2, 0.1).unwrap();
        let peak = -(2.0 * std::f64::consts::PI * 0.01).ln();
        for i in 0..3 {
            let v = gmm_logpdf(mix.mean(i), &mix);
            let floor = peak - 3f64.ln();
            assert!(v >= floor && v - floor < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussianMixture::new(vec![0.0], 1, 0.0).is_err());
        assert!(GaussianMixture::new(vec![0.0, 1.0, 2.0], 2, 0.1).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let mix = GaussianMixture::random(10, 8, 0.1, 3).unwrap();
        let a = mix.sample(100, 4).unwrap();
        let b = mix.sample(100, 4).unwrap();
        assert_eq!(a.as_flat(), b.as_flat());
        assert_eq!((a.len(), a.dim()), (100, 8));
    }

    #[test]
    fn sample_moments() {
        let mix = GaussianMixture::new(vec![0.5], 1, 0.1).unwrap();
        let p = mix.sample(20_000, 1).unwrap();
        let n = p.len() as f64;
        let mean = p.as_flat().iter().sum::<f64>() / n;
        let var = p.as_flat().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((mean - 0.5).abs() < 0.005);
        assert!((var.sqrt() - 0.1).abs() < 0.005);
    }

    proptest! {
        #[test]
        fn permutation_invariant(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, x in -2.0f64..2.0) {
            prop_assume!(a != b && b != c && a != c);
            let m1 = GaussianMixture::new(vec![a, b, c], 1, 0.2).unwrap();
            let m2 = GaussianMixture::new(vec![c, a, b], 1, 0.2).unwrap();
            prop_assert!((gmm_logpdf(&[x], &m1) - gmm_logpdf(&[x], &m2)).abs() < 1e-12);
        }
    }
}
