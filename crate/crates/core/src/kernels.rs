//! Radial kernel shapes and their density-estimation statistics.
//!
//! Every kernel is stored in its unnormalized *shape* form `K(u)`, with a
//! peak of 1 at `u = 0`. The energy of a pattern set evaluates the shape at
//! `u = sqrt(beta / 2) * |x - xi|`, so for the Epanechnikov kernel the summand
//! is `relu(1 - beta/2 * |x - xi|^2)` and for the Gaussian kernel it is
//! `exp(-beta/2 * |x - xi|^2)`.
//!
//! Statistics (`mu_K = int u^2 K`, `sigma_K = int K^2`) are computed on the
//! unit-mass version of each shape. Only the scale-free product
//! `sqrt(mu_K) * sigma_K` enters the kernel efficiency, which is the ratio of
//! that product for the Epanechnikov kernel to that of the kernel in question.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Identifier of a radial kernel shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelId {
    Epanechnikov,
    Gaussian,
    Triangle,
    Uniform,
    Triweight,
    Quartic,
    Tricube,
    Cosine,
}

impl KernelId {
    pub const ALL: [KernelId; 8] = [
        KernelId::Epanechnikov,
        KernelId::Gaussian,
        KernelId::Triangle,
        KernelId::Uniform,
        KernelId::Triweight,
        KernelId::Quartic,
        KernelId::Tricube,
        KernelId::Cosine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelId::Epanechnikov => "epanechnikov",
            KernelId::Gaussian => "gaussian",
            KernelId::Triangle => "triangle",
            KernelId::Uniform => "uniform",
            KernelId::Triweight => "triweight",
            KernelId::Quartic => "quartic",
            KernelId::Tricube => "tricube",
            KernelId::Cosine => "cosine",
        }
    }

    /// True for every kernel that vanishes for `|u| >= 1`.
    pub fn is_compact(self) -> bool {
        self != KernelId::Gaussian
    }

    /// Shape formula without the support cutoff, valid for `|u| <= 1`
    /// (and everywhere for the Gaussian).
    fn profile(self, u: f64) -> f64 {
        let a = u.abs();
        match self {
            KernelId::Epanechnikov => 1.0 - u * u,
            KernelId::Gaussian => (-0.5 * u * u).exp(),
            KernelId::Triangle => 1.0 - a,
            KernelId::Uniform => 1.0,
            KernelId::Triweight => (1.0 - u * u).powi(3),
            KernelId::Quartic => (1.0 - u * u).powi(2),
            KernelId::Tricube => (1.0 - a * a * a).powi(3),
            KernelId::Cosine => (0.5 * PI * u).cos(),
        }
    }

    /// Derivative of the profile with respect to `u >= 0`.
    fn profile_slope(self, u: f64) -> f64 {
        match self {
            KernelId::Epanechnikov => -2.0 * u,
            KernelId::Gaussian => -u * (-0.5 * u * u).exp(),
            KernelId::Triangle => -1.0,
            KernelId::Uniform => 0.0,
            KernelId::Triweight => -6.0 * u * (1.0 - u * u).powi(2),
            KernelId::Quartic => -4.0 * u * (1.0 - u * u),
            KernelId::Tricube => -9.0 * u * u * (1.0 - u * u * u).powi(2),
            KernelId::Cosine => -0.5 * PI * (0.5 * PI * u).sin(),
        }
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelId::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown kernel `{s}`")))
    }
}

/// Unnormalized kernel shape `K(u)`.
///
/// Compact kernels return exactly zero for `|u| >= 1`.
pub fn kernel_shape(id: KernelId, u: f64) -> f64 {
    if id.is_compact() && u.abs() >= 1.0 {
        return 0.0;
    }
    id.profile(u)
}

/// Derivative `dK/du` of the shape at `u >= 0`; zero outside compact support.
pub fn kernel_shape_slope(id: KernelId, u: f64) -> f64 {
    if id.is_compact() && u >= 1.0 {
        return 0.0;
    }
    id.profile_slope(u)
}

/// Squared support test shared by every compact kernel: true when
/// `beta/2 * sqdist < 1`, i.e. the pattern's summand is strictly positive.
#[inline]
pub fn in_support(beta: f64, sqdist: f64) -> bool {
    0.5 * beta * sqdist < 1.0
}

/// Summand weight of one pattern at squared distance `sqdist`.
///
/// Kernels whose shape is a polynomial in `u^2` are evaluated directly from
/// `u^2 = beta/2 * sqdist`, which keeps the Epanechnikov weight bitwise equal
/// to `relu(1 - beta/2 * sqdist)`. The Gaussian weight is
/// `exp(-beta/2 * sqdist)`, its shape evaluated at `u = sqrt(beta * sqdist)`.
pub fn separation_weight(id: KernelId, beta: f64, sqdist: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Ok(weight_unchecked(id, beta, sqdist))
}

#[inline]
pub(crate) fn weight_unchecked(id: KernelId, beta: f64, sqdist: f64) -> f64 {
    let u2 = 0.5 * beta * sqdist;
    match id {
        KernelId::Gaussian => (-u2).exp(),
        _ if u2 >= 1.0 => 0.0,
        KernelId::Epanechnikov => 1.0 - u2,
        KernelId::Quartic => (1.0 - u2).powi(2),
        KernelId::Triweight => (1.0 - u2).powi(3),
        _ => id.profile(u2.sqrt()),
    }
}

/// Euclidean radius at which the separation weight first vanishes.
pub fn support_radius(id: KernelId, beta: f64) -> f64 {
    if id.is_compact() {
        (2.0 / beta).sqrt()
    } else {
        f64::INFINITY
    }
}

/// Second moment, regularity and relative efficiency of a kernel.
///
/// `mu_k` and `sigma_k` belong to the unit-mass kernel at its natural shape
/// scale; `efficiency` is scale free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelMoments {
    pub mu_k: f64,
    pub sigma_k: f64,
    pub efficiency: f64,
}

impl KernelMoments {
    /// `sigma_K` after rescaling the kernel so that `mu_K = 1`.
    pub fn unit_variance_sigma(&self) -> f64 {
        self.sigma_k * self.mu_k.sqrt()
    }
}

const QUAD_TOL: f64 = 1e-14;
const GAUSSIAN_HALF_WIDTH: f64 = 12.0;

fn half_line_integral<F: Fn(f64) -> f64>(id: KernelId, f: F) -> f64 {
    let upper = if id.is_compact() {
        1.0
    } else {
        GAUSSIAN_HALF_WIDTH
    };
    2.0 * adaptive_simpson(&f, 0.0, upper, QUAD_TOL)
}

/// Total mass of the unnormalized shape.
pub fn shape_mass(id: KernelId) -> f64 {
    half_line_integral(id, |u| id.profile(u))
}

fn raw_moments(id: KernelId) -> (f64, f64) {
    let mass = shape_mass(id);
    let mu = half_line_integral(id, |u| u * u * id.profile(u)) / mass;
    let sigma = half_line_integral(id, |u| id.profile(u).powi(2)) / (mass * mass);
    (mu, sigma)
}

/// Moments and efficiency by adaptive quadrature.
pub fn kernel_moments(id: KernelId) -> KernelMoments {
    static EPAN: OnceLock<f64> = OnceLock::new();
    let reference = *EPAN.get_or_init(|| {
        let (mu, sigma) = raw_moments(KernelId::Epanechnikov);
        sigma * mu.sqrt()
    });
    let (mu_k, sigma_k) = raw_moments(id);
    KernelMoments {
        mu_k,
        sigma_k,
        efficiency: reference / (sigma_k * mu_k.sqrt()),
    }
}

/// MISE-optimal bandwidth `(4 sigma_K / (m mu_K^2 R(f'')))^(1/5)` for the
/// kernel at its natural shape scale.
pub fn optimal_bandwidth(id: KernelId, m: usize, roughness: f64) -> Result<f64> {
    let moments = kernel_moments(id);
    optimal_bandwidth_from(moments.mu_k, moments.sigma_k, m, roughness)
}

/// Same as [`optimal_bandwidth`] with caller-supplied moments.
pub fn optimal_bandwidth_from(mu_k: f64, sigma_k: f64, m: usize, roughness: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    if !(roughness > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "roughness must be positive, got {roughness}"
        )));
    }
    Ok((sigma_k * 4.0 / (m as f64 * mu_k * mu_k * roughness)).powf(0.2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shape_examples() {
        assert_eq!(kernel_shape(KernelId::Epanechnikov, 0.0), 1.0);
        assert_eq!(kernel_shape(KernelId::Epanechnikov, 1.0), 0.0);
        assert_eq!(kernel_shape(KernelId::Triangle, 0.5), 0.5);
        assert_eq!(kernel_shape(KernelId::Gaussian, 0.0), 1.0);
    }

    #[test]
    fn compact_support_boundaries() {
        for id in KernelId::ALL.into_iter().filter(|k| k.is_compact()) {
            for u in [1.0, -1.0, 1.5, -7.0, 1e9] {
                assert_eq!(kernel_shape(id, u), 0.0, "{id} at {u}");
            }
            for u in [0.0, 0.3, -0.3, 0.999, -0.999] {
                assert!(kernel_shape(id, u) > 0.0, "{id} at {u}");
            }
        }
    }

    #[test]
    fn separation_weight_examples() {
        assert_eq!(
            separation_weight(KernelId::Epanechnikov, 2.0, 0.25).unwrap(),
            0.75
        );
        assert_eq!(
            separation_weight(KernelId::Epanechnikov, 2.0, 1.0).unwrap(),
            0.0
        );
        assert_eq!(
            separation_weight(KernelId::Gaussian, 2.0, 0.0).unwrap(),
            1.0
        );
        assert!(separation_weight(KernelId::Epanechnikov, 0.0, 1.0).is_err());
        assert!(separation_weight(KernelId::Gaussian, -1.0, 1.0).is_err());
    }

    #[test]
    fn weight_matches_shape_convention() {
        for id in KernelId::ALL {
            for &(beta, d2) in &[(2.0f64, 0.3f64), (0.7, 1.9), (13.0, 0.05), (5.0, 0.0)] {
                // The Gaussian shape exp(-u^2/2) needs u = sqrt(beta) * d to give exp(-beta/2 d^2).
                let scale = if id == KernelId::Gaussian { 1.0 } else { 0.5 };
                let u = (scale * beta * d2).sqrt();
                let w = separation_weight(id, beta, d2).unwrap();
                assert!((w - kernel_shape(id, u)).abs() < 1e-14, "{id}");
            }
        }
    }

    #[test]
    fn support_radius_examples() {
        assert!((support_radius(KernelId::Epanechnikov, 2.0) - 1.0).abs() < 1e-15);
        assert!((support_radius(KernelId::Epanechnikov, 200.0) - 0.1).abs() < 1e-15);
        assert!(support_radius(KernelId::Gaussian, 3.0).is_infinite());
    }

    #[test]
    fn normalized_kernels_integrate_to_one() {
        for id in KernelId::ALL {
            let mass = shape_mass(id);
            let unit = half_line_integral(id, |u| id.profile(u) / mass);
            assert!((unit - 1.0).abs() < 1e-8, "{id}: {unit}");
        }
    }

    #[test]
    fn closed_form_moments() {
        // Epanechnikov unit-mass kernel is 3/4 (1 - u^2): mu = 1/5, sigma = 3/5.
        let m = kernel_moments(KernelId::Epanechnikov);
        assert!((m.mu_k - 0.2).abs() < 1e-12);
        assert!((m.sigma_k - 0.6).abs() < 1e-12);
        // Gaussian: mu = 1, sigma = 1 / (2 sqrt(pi)).
        let g = kernel_moments(KernelId::Gaussian);
        assert!((g.mu_k - 1.0).abs() < 1e-10);
        assert!((g.sigma_k - 0.5 / PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn efficiencies() {
        assert!((kernel_moments(KernelId::Epanechnikov).efficiency - 1.0).abs() < 1e-6);
        assert!((kernel_moments(KernelId::Gaussian).efficiency - 0.951).abs() < 5e-4);
        // Uniform: mu = 1/3, sigma = 1/2, so the ratio is 0.6 sqrt(0.2) / (0.5 sqrt(1/3)).
        let closed = 0.6 * 0.2f64.sqrt() / (0.5 * (1.0f64 / 3.0).sqrt());
        assert!((kernel_moments(KernelId::Uniform).efficiency - closed).abs() < 1e-10);
        let gauss = 0.6 * 0.2f64.sqrt() / (0.5 / PI.sqrt());
        assert!((kernel_moments(KernelId::Gaussian).efficiency - gauss).abs() < 1e-10);
        for id in KernelId::ALL {
            let e = kernel_moments(id).efficiency;
            assert!(e <= 1.0 + 1e-9, "{id}: {e}");
            if id != KernelId::Epanechnikov {
                assert!(e < 1.0 - 1e-4, "{id}: {e}");
            }
        }
    }

    #[test]
    fn bandwidth_examples() {
        assert!((optimal_bandwidth_from(1.0, 1.0, 4, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let g = kernel_moments(KernelId::Gaussian);
        let expected = (g.sigma_k * 4.0 / (100.0 * g.mu_k * g.mu_k)).powf(0.2);
        let h = optimal_bandwidth(KernelId::Gaussian, 100, 1.0).unwrap();
        assert!((h - expected).abs() < 1e-15);
        // Closed-form Gaussian moments: (4 / (2 sqrt(pi) * 100))^(1/5).
        assert!((h - (2.0 / (PI.sqrt() * 100.0)).powf(0.2)).abs() < 1e-10);
        assert!(optimal_bandwidth(KernelId::Gaussian, 100, 0.0).is_err());
        assert!(optimal_bandwidth(KernelId::Gaussian, 100, -1.0).is_err());
        let mut prev = f64::INFINITY;
        for m in [1, 2, 10, 100, 1000] {
            let h = optimal_bandwidth(KernelId::Epanechnikov, m, 2.5).unwrap();
            assert!(h < prev);
            prev = h;
        }
    }

    #[test]
    fn names_round_trip() {
        for id in KernelId::ALL {
            assert_eq!(id.name().parse::<KernelId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.name()));
        }
        assert!("gauss".parse::<KernelId>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn epanechnikov_weight_is_shifted_relu(beta in 1e-3f64..1e3, d2 in 0.0f64..10.0) {
            let w = separation_weight(KernelId::Epanechnikov, beta, d2).unwrap();
            prop_assert_eq!(w, (1.0 - (beta / 2.0) * d2).max(0.0));
        }

        #[test]
        fn shapes_are_symmetric(u in -3.0f64..3.0) {
            for id in KernelId::ALL {
                prop_assert_eq!(kernel_shape(id, u), kernel_shape(id, -u));
                prop_assert!(kernel_shape(id, u) >= 0.0);
            }
        }
    }
}
