use rand::Rng;

use crate::scalar::Real;

/// `len` values drawn uniformly from `[−1/√fan_in, 1/√fan_in)`.
pub fn uniform_init<T: Real, R: Rng + ?Sized>(len: usize, fan_in: usize, rng: &mut R) -> Vec<T> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    (0..len).map(|_| T::of(rng.random_range(-bound..bound))).collect()
}
