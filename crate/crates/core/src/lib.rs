//! Dense associative memories with log-sum-ReLU and log-sum-exp energies.
//!
//! Patterns live in a [`PatternSet`]; an [`EnergySpec`] picks the kernel,
//! inverse temperature and floor constant. The [`retrieval`] module runs
//! descent and the exact centroid iteration, [`emergence`] enumerates every
//! local minimum of the log-sum-ReLU landscape, and [`genbench`] hosts the
//! synthetic experiments.
//!
//! ```
//! use densam::{EnergySpec, PatternSet, emergence};
//!
//! let patterns = PatternSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
//! let spec = EnergySpec::lsr(2.0).unwrap();
//! let report = emergence::classify_emergence(&patterns, &spec, 1e-10).unwrap();
//! assert_eq!(report.memories.len(), 3);
//! assert!(report.globally_emergent);
//! ```

pub mod emergence;
pub mod energy;
pub mod error;
pub mod genbench;
pub mod kernels;
pub mod patterns;
pub mod quadrature;
pub mod retrieval;
pub mod rng;

pub use energy::{ActiveSet, EnergySpec};
pub use error::{Error, Result};
pub use kernels::KernelId;
pub use patterns::PatternSet;

/// Crate version, echoed into sidecars and run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
