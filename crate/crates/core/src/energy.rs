//! Log-sum-ReLU and log-sum-exp energies over a pattern set.
//!
//! The log-sum-ReLU (LSR) energy is
//!
//! ```text
//! E(x) = -(1/beta) * ln(eps + sum_mu relu(1 - beta/2 * |x - xi_mu|^2))
//! ```
//!
//! and is infinite outside the union of support balls when `eps = 0`. The
//! log-sum-exp (LSE) energy replaces the shifted ReLU with
//! `exp(-beta/2 * |x - xi_mu|^2)`. Any other compact kernel from
//! [`crate::kernels`] can stand in for the shifted ReLU; its energy is
//! `-(1/beta) * ln(eps + sum_mu K(sqrt(beta/2) * |x - xi_mu|))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{in_support, kernel_shape_slope, weight_unchecked, KernelId};
use crate::patterns::{sqdist, PatternSet};

/// Kernel, inverse temperature and floor constant of an energy landscape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySpec {
    pub kernel: KernelId,
    pub beta: f64,
    /// Ignored by the Gaussian kernel.
    #[serde(default)]
    pub epsilon: f64,
}

impl EnergySpec {
    pub fn new(kernel: KernelId, beta: f64, epsilon: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be non-negative, got {epsilon}"
            )));
        }
        Ok(EnergySpec {
            kernel,
            beta,
            epsilon,
        })
    }

    /// Epanechnikov (LSR) landscape with `epsilon = 0`.
    pub fn lsr(beta: f64) -> Result<Self> {
        Self::new(KernelId::Epanechnikov, beta, 0.0)
    }

    /// Gaussian (LSE) landscape.
    pub fn lse(beta: f64) -> Result<Self> {
        Self::new(KernelId::Gaussian, beta, 0.0)
    }

    pub fn with_kernel(self, kernel: KernelId) -> Self {
        EnergySpec { kernel, ..self }
    }

    /// Radius `sqrt(2/beta)` of each pattern's support ball.
    pub fn support_radius(&self) -> f64 {
        crate::kernels::support_radius(self.kernel, self.beta)
    }
}

/// Indices of the patterns whose open support ball contains `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
    pub center: Vec<f64>,
}

impl ActiveSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, mu: usize) -> bool {
        self.indices.binary_search(&mu).is_ok()
    }
}

fn check_dim(x: &[f64], patterns: &PatternSet) {
    assert_eq!(
        x.len(),
        patterns.dim(),
        "query dimension does not match the pattern set"
    );
}

/// Sorted indices with `beta/2 * |x - xi|^2 < 1`; every index for the
/// Gaussian kernel.
pub fn active_indices(x: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> Vec<usize> {
    check_dim(x, patterns);
    if !spec.kernel.is_compact() {
        return (0..patterns.len()).collect();
    }
    patterns
        .iter()
        .enumerate()
        .filter(|(_, xi)| in_support(spec.beta, sqdist(x, xi)))
        .map(|(mu, _)| mu)
        .collect()
}

pub fn active_set(x: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> ActiveSet {
    ActiveSet {
        indices: active_indices(x, patterns, spec),
        center: x.to_vec(),
    }
}

/// `eps + sum_mu K(...)` for a compact kernel, together with the active set.
fn compact_sum(x: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> (f64, Vec<usize>) {
    let mut total = 0.0;
    let mut active = Vec::new();
    for (mu, xi) in patterns.iter().enumerate() {
        let d2 = sqdist(x, xi);
        if in_support(spec.beta, d2) {
            total += weight_unchecked(spec.kernel, spec.beta, d2);
            active.push(mu);
        }
    }
    (spec.epsilon + total, active)
}

/// LSR energy (or the analogous energy of another compact kernel).
///
/// Returns `+inf` when `epsilon = 0` and `x` lies outside every support ball.
pub fn lsr_energy(x: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> f64 {
    check_dim(x, patterns);
    let (sum, _) = compact_sum(x, patterns, spec);
    if sum > 0.0 {
        -sum.ln() / spec.beta
    } else {
        f64::INFINITY
    }
}

/// Log-sum-exp energy, evaluated with a max shift.
pub fn lse_energy(x: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> f64 {
    check_dim(x, patterns);
    let exponents: Vec<f64> = patterns
        .iter()
        .map(|xi| -0.5 * spec.beta * sqdist(x, xi))
        .collect();
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + exponents.iter().map(|a| (a - top).exp()).sum::<f64>().ln();
    -lse / spec.beta
}

/// Energy under the kernel chosen by `spec`.
pub fn energy(x: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> f64 {
    match spec.kernel {
        KernelId::Gaussian => lse_energy(x, patterns, spec),
        _ => lsr_energy(x, patterns, spec),
    }
}

/// Gradient of a compact-kernel energy plus whether `x` touches any support
/// ball. Outside every ball the vector is zero and `supported` is false.
#[derive(Debug, Clone, PartialEq)]
pub struct LsrGradient {
    pub vector: Vec<f64>,
    pub supported: bool,
    pub active: Vec<usize>,
}

impl LsrGradient {
    pub fn norm(&self) -> f64 {
        norm(&self.vector)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.vector.iter().all(|v| *v == 0.0)
    }
}

/// Euclidean norm; rescales when the squares leave the normal range.
pub fn norm(v: &[f64]) -> f64 {
    let s: f64 = v.iter().map(|a| a * a).sum();
    if s.is_finite() && (s >= f64::MIN_POSITIVE || s == 0.0 && v.iter().all(|a| *a == 0.0)) {
        return s.sqrt();
    }
    let top = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if top == 0.0 || !top.is_finite() {
        return top;
    }
    top * v.iter().map(|a| (a / top) * (a / top)).sum::<f64>().sqrt()
}

/// Gradient of the LSR energy,
/// `sum_{mu in B} (x - xi_mu) / (eps + sum_{nu in B} relu(...))`.
///
/// The numerator is evaluated as `|B| * (x - centroid(B))`, which is the
/// same sum regrouped; it is exactly zero whenever `x` is the centroid of its
/// own active set as computed by [`PatternSet::centroid`].
pub fn lsr_gradient(x: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> LsrGradient {
    check_dim(x, patterns);
    if spec.kernel != KernelId::Epanechnikov {
        return kernel_gradient(x, patterns, spec);
    }
    let (denom, active) = compact_sum(x, patterns, spec);
    if active.is_empty() {
        return LsrGradient {
            vector: vec![0.0; x.len()],
            supported: false,
            active,
        };
    }
    let c = patterns.centroid(&active);
    let scale = active.len() as f64 / denom;
    let vector = x.iter().zip(&c).map(|(xi, ci)| scale * (xi - ci)).collect();
    LsrGradient {
        vector,
        supported: true,
        active,
    }
}

/// Gradient for any compact kernel from the shape derivative.
fn kernel_gradient(x: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> LsrGradient {
    let (denom, active) = compact_sum(x, patterns, spec);
    let mut vector = vec![0.0; x.len()];
    if active.is_empty() {
        return LsrGradient {
            vector,
            supported: false,
            active,
        };
    }
    let root = (0.5 * spec.beta).sqrt();
    for &mu in &active {
        let xi = patterns.pattern(mu);
        let dist = sqdist(x, xi).sqrt();
        if dist == 0.0 {
            // Smooth kernels have zero slope at the peak; for kinked ones
            // this picks the zero subgradient.
            continue;
        }
        let coeff =
            -kernel_shape_slope(spec.kernel, root * dist) * root / (dist * spec.beta * denom);
        for (g, (a, b)) in vector.iter_mut().zip(x.iter().zip(xi)) {
            *g += coeff * (a - b);
        }
    }
    LsrGradient {
        vector,
        supported: true,
        active,
    }
}

/// Softmax weights `p_mu(x) ∝ exp(-beta/2 |x - xi_mu|^2)`.
pub fn lse_weights(x: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> Vec<f64> {
    check_dim(x, patterns);
    let mut w: Vec<f64> = patterns
        .iter()
        .map(|xi| -0.5 * spec.beta * sqdist(x, xi))
        .collect();
    let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in w.iter_mut() {
        *v = (*v - top).exp();
        total += *v;
    }
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// LSE gradient `x - sum_mu p_mu(x) xi_mu`, summed as
/// `sum_mu p_mu(x) (x - xi_mu)`.
pub fn lse_gradient(x: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut scratch = Vec::with_capacity(patterns.len());
    lse_gradient_into(x, patterns, spec.beta, &mut g, &mut scratch);
    g
}

/// Allocation-free LSE gradient for inner loops.
pub(crate) fn lse_gradient_into(
    x: &[f64],
    patterns: &PatternSet,
    beta: f64,
    out: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    scratch.clear();
    scratch.extend(patterns.iter().map(|xi| -0.5 * beta * sqdist(x, xi)));
    let top = scratch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in scratch.iter_mut() {
        *v = (*v - top).exp();
        total += *v;
    }
    out.fill(0.0);
    for (w, xi) in scratch.iter().zip(patterns.iter()) {
        let p = w / total;
        for ((gi, v), xk) in out.iter_mut().zip(xi).zip(x) {
            *gi += p * (xk - v);
        }
    }
}

/// Gradient under the kernel chosen by `spec`; unsupported compact points give zero.
pub fn gradient(x: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> Vec<f64> {
    match spec.kernel {
        KernelId::Gaussian => lse_gradient(x, patterns, spec),
        _ => lsr_gradient(x, patterns, spec).vector,
    }
}

/// Scalar `c` with `Hessian = c * I` at a stationary point of the LSR energy:
/// `|B(x)| / (eps + sum relu(...))`.
pub fn lsr_hessian_scalar(x: &[f64], patterns: &PatternSet, spec: &EnergySpec) -> Result<f64> {
    check_dim(x, patterns);
    let (denom, active) = compact_sum(x, patterns, &spec.with_kernel(KernelId::Epanechnikov));
    if active.is_empty() {
        return Err(Error::UnsupportedStart);
    }
    Ok(active.len() as f64 / denom)
}
