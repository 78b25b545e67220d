//! Seedable, splittable random streams.
//!
//! Every stochastic component (a coefficient, an informer, an initial
//! condition) of every Monte Carlo run draws from its own ChaCha stream, so
//! samplers never share state and results do not depend on how runs are
//! distributed over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Bits of the stream id reserved for the component index.
const COMPONENT_BITS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSeeder {
    seed: u64,
}

impl StreamSeeder {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for `component` within `run`.
    pub fn stream(&self, run: u64, component: u32) -> StreamRng {
        debug_assert!(run < (1 << (64 - COMPONENT_BITS)));
        debug_assert!(component < (1 << COMPONENT_BITS));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((run << COMPONENT_BITS) | u64::from(component));
        rng
    }
}
