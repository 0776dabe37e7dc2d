//! Seeded random streams.
//!
//! Each episode derives independent named substreams from one master seed so
//! that, e.g., changing the solver budget never perturbs environment noise.
//! ChaCha streams with a shared key are statistically independent.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tag for a derived random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Environment initialization (positions, initial hazards, growth rates).
    Init = 1,
    /// Sensor noise draws.
    Noise = 2,
    /// Randomized choices inside the heuristic solver.
    Solver = 3,
    /// Baseline strategy scores (the random strategy's uniform draws).
    Score = 4,
}

/// A deterministic RNG for `purpose`, derived from `master_seed`.
pub fn substream(master_seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(purpose as u64);
    rng
}
