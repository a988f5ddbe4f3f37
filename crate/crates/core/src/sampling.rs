//! Deterministic sample clouds: a Halton sequence shifted by a seeded
//! random rotation (Cranley–Patterson), so different seeds give different
//! but equally well-spread clouds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::veccalc::Vec3;

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// `n` points in the axis-aligned box [lo, hi].
pub fn halton_box(n: usize, lo: Vec3, hi: Vec3, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
    (1..=n as u64)
        .map(|i| {
            let u = [2u64, 3, 5].iter().enumerate().map(|(k, &b)| (radical_inverse(i, b) + shift[k]).fract()).collect::<Vec<_>>();
            Vec3::new(
                lo[0] + u[0] * (hi[0] - lo[0]),
                lo[1] + u[1] * (hi[1] - lo[1]),
                lo[2] + u[2] * (hi[2] - lo[2]),
            )
        })
        .collect()
}
