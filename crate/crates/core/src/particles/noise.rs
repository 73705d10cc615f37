//! Counter-based Gaussian increments addressed by (seed, replica, stream, step).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Vector;

/// 32-bit words consumed per (stream, step); enough for 8 normals.
const WORDS_PER_STEP: u128 = 16;

/// Stream id reserved for initial-condition sampling, disjoint from particle streams.
pub const SAMPLING_STREAM: u64 = u64::MAX;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of the generator for one replica.
pub fn replica_key(seed: u64, replica: u64) -> u64 {
    splitmix64(seed ^ splitmix64(replica.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Generator for `(seed, replica, stream)` positioned at word 0.
pub fn stream_rng(seed: u64, replica: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(replica_key(seed, replica));
    rng.set_stream(stream);
    rng
}

#[inline]
fn unit_open(bits: u64) -> f64 {
    // (0, 1]
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Brownian increments of one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSource {
    pub seed: u64,
    pub replica: u64,
}

impl NoiseSource {
    pub fn new(seed: u64, replica: u64) -> Self {
        Self { seed, replica }
    }

    /// Standard normal vector for `(stream, step)`, independent of call order.
    pub fn standard_normal<const D: usize>(&self, stream: u64, step: u64) -> Vector<D> {
        assert!(D <= 8, "noise layout supports at most 8 dimensions");
        let mut rng = ChaCha8Rng::seed_from_u64(replica_key(self.seed, self.replica));
        rng.set_stream(stream);
        rng.set_word_pos(step as u128 * WORDS_PER_STEP);
        let mut out = Vector::<D>::zeros();
        let mut i = 0;
        while i < D {
            let u1 = unit_open(rng.next_u64());
            let u2 = unit_open(rng.next_u64());
            let r = (-2.0 * u1.ln()).sqrt();
            let phi = std::f64::consts::TAU * u2;
            out[i] = r * phi.cos();
            if i + 1 < D {
                out[i + 1] = r * phi.sin();
            }
            i += 2;
        }
        out
    }

    /// `ΔB = √dt · N(0, I)`.
    pub fn increment<const D: usize>(&self, stream: u64, step: u64, dt: f64) -> Vector<D> {
        self.standard_normal::<D>(stream, step) * dt.sqrt()
    }
}
