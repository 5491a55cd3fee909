//! Reproducible randomness: one master seed fans out into independent ChaCha20 streams.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Named streams derived from a master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    KeyGen = 1,
    Sensor = 2,
    Actuator = 3,
    Setup = 4,
    Trials = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
