//! Seeded randomness. Every task derives its own generator from
//! `(seed, index)`, so serial and parallel runs draw identical samples.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cvec::CVec;
use crate::math;

pub type SampleRng = ChaCha8Rng;

/// splitmix64 finalizer over `seed ⊕ golden·(index+1)`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for task `index` of a run seeded with `seed`.
pub fn task_rng(seed: u64, index: u64) -> SampleRng {
    seeded(sub_seed(seed, index))
}

pub fn normal(rng: &mut SampleRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn uniform(rng: &mut SampleRng) -> f64 {
    rng.random::<f64>()
}

/// Standard complex Gaussian vector (real and imaginary parts N(0, ½)).
pub fn complex_gaussian(rng: &mut SampleRng, n: usize) -> CVec {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    CVec::new(
        (0..n)
            .map(|_| {
                let re = normal(rng) * s;
                let im = normal(rng) * s;
                Complex64::new(re, im)
            })
            .collect(),
    )
}

/// Uniform direction on the Euclidean unit sphere of ℂⁿ.
pub fn euclidean_unit(rng: &mut SampleRng, n: usize) -> CVec {
    loop {
        let v = complex_gaussian(rng, n);
        let r = v.euclid();
        if r > 1e-300 {
            return v.scaled_real(1.0 / r);
        }
    }
}

/// Uniform phase `e^{iα}`.
pub fn phase(rng: &mut SampleRng) -> Complex64 {
    let (s, c) = math::sin_cos(math::TAU * uniform(rng));
    Complex64::new(c, s)
}
