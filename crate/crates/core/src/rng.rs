//! Seeded random streams.
//!
//! All randomness goes through ChaCha8 (`rand_chacha::ChaCha8Rng`), seeded
//! with `seed_from_u64` and split into independent streams with
//! `set_stream`, so a run is fully determined by its master seed regardless
//! of how jobs are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for `(seed, stream)`; stream 0 is the plain seeded generator.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for job `index` of consumer `kind`: stream `(kind << 32) | index`.
pub fn job_rng(seed: u64, kind: u64, index: u32) -> Rng {
    stream_rng(seed, (kind << 32) | u64::from(index))
}

/// Named stream identifiers so different consumers of one seed never overlap.
pub mod streams {
    pub const PATTERNS: u64 = 0;
    pub const MIXTURE_MEANS: u64 = 1;
    pub const QUERIES: u64 = 2;
    pub const MONTE_CARLO: u64 = 3;
    pub const MIXTURE_SAMPLES: u64 = 4;
}
