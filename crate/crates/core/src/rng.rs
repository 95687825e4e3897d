//! Seeded random streams.
//!
//! All randomness flows through ChaCha8 (`rand_chacha`), whose output is
//! fixed by the seed and the 64-bit stream id independently of platform.
//! A stream id packs `(repeat << 32) | purpose`, so every repeat of an
//! experiment and every consumer inside it (tensor entries, factor of mode
//! `i`, weights, noise, initialization attempts) draws from its own stream
//! of the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::Matrix;

pub const PURPOSE_ENTRIES: u64 = 0;
/// Factor of mode `i` uses `PURPOSE_FACTOR + i`.
pub const PURPOSE_FACTOR: u64 = 1;
pub const PURPOSE_WEIGHTS: u64 = 1_000;
pub const PURPOSE_NOISE: u64 = 2_000;
/// Initialization attempt `a`, mode `i` uses `PURPOSE_INIT + 64 * a + i`.
pub const PURPOSE_INIT: u64 = 10_000;
pub const PURPOSE_PROBE: u64 = 100_000;

pub fn stream_id(repeat: u32, purpose: u64) -> u64 {
    (u64::from(repeat) << 32) | (purpose & 0xffff_ffff)
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian_matrix_from<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, gaussian_vec(rng, rows * cols)).expect("length matches")
}

/// Standard normal `rows x cols` matrix from stream 0 of `seed`.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    gaussian_matrix_from(&mut stream(seed, PURPOSE_ENTRIES), rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a = gaussian_vec(&mut stream(7, 3), 5);
        let b = gaussian_vec(&mut stream(7, 3), 5);
        let c = gaussian_vec(&mut stream(7, 4), 5);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(stream_id(1, 5), stream_id(0, 5));
    }
}
