//! Counter-style RNG streams.
//!
//! Every random draw in the pipeline comes from a ChaCha8 stream selected by
//! `(seed, stage, block)`. Blocks are fixed ranges of clock cycles, so the
//! numbers a block consumes do not depend on how blocks are scheduled across
//! workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Pipeline stage owning a stream. The discriminant is mixed into the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Source = 1,
    Memory = 2,
    Splitter = 3,
    DetectSignal = 4,
    DetectIdler = 5,
    DetectSignalA = 6,
    DetectSignalB = 7,
    Bootstrap = 8,
    Synthetic = 9,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, stage: Stage, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(stage as u64)));
    rng.set_stream(block);
    rng
}
