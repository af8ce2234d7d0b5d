//! Seeding contract for everything random in this crate.
//!
//! Work item `i` under master seed `s` draws from ChaCha20 keyed by `s` on
//! stream `i`. Streams are independent and a work item's draws never depend on
//! which thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draws(seed: u64, stream: u64) -> Vec<u64> {
        let mut rng = stream_rng(seed, stream);
        (0..4).map(|_| rng.random()).collect()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        assert_eq!(draws(7, 3), draws(7, 3));
        assert_ne!(draws(7, 3), draws(7, 4));
        assert_ne!(draws(7, 3), draws(8, 3));
    }
}
