#![allow(dead_code)]

use qmf_cdae::Example;
use qmf_core::{all_k_marginals, mio_compose, random_density_matrix, ConsistencyMode, DensityMatrix, TwoChannelTensor};
use rand::Rng;

/// One training example built like the data generator does: (N−1)-body
/// marginals of a random state imposed on the maximally mixed state.
pub fn example(n: usize, rng: &mut impl Rng) -> Example {
    let (rho, _) = random_density_matrix(n, 1, rng).unwrap();
    let targets = all_k_marginals(&rho, n - 1).unwrap();
    let out = mio_compose(DensityMatrix::maximally_mixed(n).matrix(), &targets, ConsistencyMode::default()).unwrap();
    Example { input: TwoChannelTensor::from_matrix(&out.mat), targets }
}

pub fn examples(n: usize, count: usize, rng: &mut impl Rng) -> Vec<Example> {
    (0..count).map(|_| example(n, rng)).collect()
}
