//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha stream derived from
//! the run seed and a fixed stream identifier, so adding draws in one
//! component never shifts another component's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub mod stream {
    pub const INIT: u64 = 1;
    pub const ENV: u64 = 2;
    pub const POLICY: u64 = 3;
    pub const LEARNER: u64 = 4;
    pub const DISTURBANCE: u64 = 5;
    pub const REPLAY: u64 = 6;
    pub const EVAL: u64 = 7;
}

/// A generator for `(seed, stream)`.
pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; used to derive child seeds.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| gaussian(rng)).collect()
}
