//! Named, counter-based random streams.
//!
//! Every consumer of randomness asks for a stream by `(seed, module,
//! channel, segment)`. The first three select a ChaCha key, the segment
//! selects the ChaCha stream number, so any segment can be generated
//! independently and in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Which part of the pipeline a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u32)]
pub enum Module {
    Squeezer = 1,
    Loss = 2,
    Jitter = 3,
    Vacuum = 4,
    Dark = 5,
    Acoustic = 6,
    Bootstrap = 7,
    Dataset = 8,
}

pub fn stream(seed: u64, module: Module, channel: u32, segment: u64) -> StreamRng {
    let mut h = Sha256::new();
    h.update(b"twinhet-stream-v1");
    h.update(seed.to_le_bytes());
    h.update((module as u32).to_le_bytes());
    h.update(channel.to_le_bytes());
    let key: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(segment);
    rng
}

/// Derives a child seed, e.g. for one run of a multi-run recipe.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"twinhet-seed-v1");
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}
