//! Reproducible, splittable random sources for parallel Monte Carlo.
//!
//! A [`RandomSource`] is a value — a `(seed, stream_id)` pair — not a stateful
//! generator. Materializing it with [`RandomSource::rng`] always yields the
//! same ChaCha8 sequence, so simulation results depend only on how sources are
//! assigned to repetitions, never on thread scheduling. The convention used
//! throughout the crate:
//!
//! - every Monte Carlo repetition `i` of a job draws from `source.with_stream(i)`;
//! - nested jobs (calibration candidates, grid cells, …) first fork a new seed
//!   with [`RandomSource::derive`] using a stable tag, then assign streams.
//!
//! ChaCha8 gives 2^64 independent streams per seed; `derive` mixes the seed
//! and tag through SplitMix64 so sibling jobs get statistically independent
//! generators.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Description of a deterministic random sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RandomSource {
    /// Base seed; identifies a family of streams.
    pub seed: u64,
    /// Stream index within the family (typically the repetition index).
    pub stream_id: u64,
}

impl RandomSource {
    /// Source for `seed` with stream 0.
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    /// Same seed, different stream. Streams are independent by construction
    /// of the underlying counter-based generator.
    pub fn with_stream(self, stream_id: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id,
        }
    }

    /// Forks a new seed from this source and a caller-chosen tag, resetting
    /// the stream to 0. Use this to give sub-jobs (a calibration candidate, a
    /// grid cell) their own stream families.
    pub fn derive(self, tag: u64) -> Self {
        let mixed = splitmix64(self.seed ^ splitmix64(tag ^ 0x9E37_79B9_7F4A_7C15));
        Self {
            seed: splitmix64(mixed ^ self.stream_id),
            stream_id: 0,
        }
    }

    /// Materializes the generator for this source.
    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// SplitMix64 finalizer; a cheap, well-dispersed 64-bit mixing function.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
