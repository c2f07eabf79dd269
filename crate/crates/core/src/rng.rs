use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random state threaded through every noisy operation.
pub type SimRng = ChaCha8Rng;

/// Seeded generator on an independent stream.
///
/// Parallel work (channels, Monte Carlo batches) takes disjoint `stream`
/// values, so results do not depend on scheduling order.
pub fn rng_for(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
