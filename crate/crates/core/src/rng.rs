//! Seeded, splittable random streams.
//!
//! Every task derives its own ChaCha20 generator from a master seed and a
//! 64-bit stream id. ChaCha is counter based, so distinct stream ids give
//! independent sequences and a task's draws do not depend on which thread
//! runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type SeededRng = ChaCha20Rng;

pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
