//! Seeded sampling.
//!
//! Every random draw in the crate goes through a ChaCha20 stream keyed by the
//! experiment seed and selected by a stream index, so the value drawn for
//! sample `i` is a pure function of `(seed, i)` and does not depend on the
//! order or the thread in which samples are processed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Name and version of the sampling scheme; recorded in every report.
pub const GENERATOR: &str = "chacha20-stream/v1";

pub type SampleRng = ChaCha20Rng;

/// Generator for stream `index` under `seed`.
pub fn stream_rng(seed: u64, index: u64) -> SampleRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard complex Gaussian: real and imaginary parts are independent
/// `N(0, 1/2)`, so `E|z|^2 = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Log-uniform draw on `[lo, hi]`.
pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
}

/// Uniform point on the unit circle.
pub fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let t: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    Complex64::from_polar(1.0, t)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds the exact bit patterns of several coefficient arrays into a 64-bit
/// key. Arrays are length-prefixed so `([a], [b, c])` and `([a, b], [c])`
/// hash differently.
pub fn hash_coeffs(salt: u64, arrays: &[&[Complex64]]) -> u64 {
    let mut h = splitmix64(salt);
    for arr in arrays {
        h = splitmix64(h ^ arr.len() as u64);
        for c in arr.iter() {
            h = splitmix64(h ^ c.re.to_bits());
            h = splitmix64(h ^ c.im.to_bits());
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draw(seed: u64, index: u64) -> Vec<u64> {
        let mut rng = stream_rng(seed, index);
        (0..4).map(|_| rng.random()).collect()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        assert_eq!(draw(7, 3), draw(7, 3));
        assert_ne!(draw(7, 3), draw(7, 4));
        assert_ne!(draw(7, 3), draw(8, 3));
    }

    #[test]
    fn log_uniform_stays_in_range() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..1000 {
            let v = log_uniform(&mut rng, 0.25, 4.0);
            assert!((0.25..=4.0).contains(&v));
        }
    }

    #[test]
    fn hash_depends_on_bits_and_layout() {
        let a = [Complex64::new(1.0, 0.0)];
        let b = [Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0)];
        let ab = [a[0], b[0]];
        let c = [b[1]];
        assert_ne!(hash_coeffs(0, &[&a, &b]), hash_coeffs(0, &[&ab, &c]));
        assert_eq!(hash_coeffs(5, &[&a, &b]), hash_coeffs(5, &[&a, &b]));
        let neg_zero = [Complex64::new(-0.0, 0.0)];
        let zero = [Complex64::new(0.0, 0.0)];
        assert_ne!(hash_coeffs(0, &[&neg_zero]), hash_coeffs(0, &[&zero]));
    }
}
