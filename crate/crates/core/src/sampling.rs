//! Deterministic sample directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lie_algebra::AlgebraVector;

/// Seed used by the convexity and homogeneity validators.
pub const VALIDATION_SEED: u64 = 0x5eed_1e57;

/// Random directions sampled by the validators in addition to the axes.
pub const VALIDATION_RANDOM_DIRECTIONS: usize = 64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform direction on the unit sphere of `R^n`, as a normalized Gaussian.
pub fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> AlgebraVector {
    loop {
        let v = AlgebraVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

/// Vector with entries uniform in `[-1, 1]`, norm at least `min_norm`.
pub fn box_vector<R: Rng>(rng: &mut R, n: usize, min_norm: f64) -> AlgebraVector {
    loop {
        let v = AlgebraVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if v.norm() >= min_norm {
            return v;
        }
    }
}

/// The `2n` signed axis directions followed by 64 seeded random unit vectors.
pub fn validation_directions(n: usize) -> Vec<AlgebraVector> {
    let mut out = Vec::with_capacity(2 * n + VALIDATION_RANDOM_DIRECTIONS);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = AlgebraVector::zeros(n);
            e[i] = sign;
            out.push(e);
        }
    }
    let mut r = rng(VALIDATION_SEED);
    out.extend((0..VALIDATION_RANDOM_DIRECTIONS).map(|_| unit_vector(&mut r, n)));
    out
}

/// `count` points evenly spaced on the unit circle, starting at `e1`.
pub fn circle_directions(count: usize) -> Vec<AlgebraVector> {
    (0..count)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / count as f64;
            AlgebraVector::from_column_slice(&[t.cos(), t.sin()])
        })
        .collect()
}
