//! Fuzzers, brute-force oracles and fixtures shared by the test suites.
//!
//! Nothing here calls the code it checks: the oracles recompute answers from
//! raw layouts and plain loops so a bug in the library cannot hide in both.

pub mod fixtures;
pub mod scenes;
pub mod specs;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
