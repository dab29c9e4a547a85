//! Deterministic random streams keyed by `(seed, label)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A ChaCha8 generator for `seed` on the stream selected by `label`.
/// Distinct labels give independent streams; the same pair always
/// reproduces the same sequence.
pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(label.as_bytes()));
    rng
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = stream(7, "formbound").sample_iter(rand::distributions::Standard).take(4).collect();
        let b: Vec<u64> = stream(7, "formbound").sample_iter(rand::distributions::Standard).take(4).collect();
        let c: Vec<u64> = stream(7, "mollify").sample_iter(rand::distributions::Standard).take(4).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let _ = stream(8, "formbound").gen::<f64>();
    }
}
