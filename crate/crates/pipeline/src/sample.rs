use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use qmf_core::{
    all_k_marginals, mio_compose, partial_trace, random_density_matrix, random_density_matrix_with_rank,
    ConsistencyMode, DensityMatrix, MarginalSet, TwoChannelTensor,
};

use crate::error::{PipelineError, Result};

/// Largest register the pipeline accepts (labels are 32-bit masks and
/// matrices are dense).
pub const MAX_QUBITS: usize = 12;

/// Tolerances checked on every freshly generated sample.
pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const MARGINAL_MATCH_TOL: f64 = 1e-9;
/// Eigenvalues above this count towards the generator's numerical rank.
pub const RANK_TOL: f64 = 1e-10;

/// How the generator rank is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankChoice {
    /// Uniform on `r_min..=2^N`.
    Uniform {
        r_min: usize,
    },
    Fixed(usize),
}

/// One corrupted input with its target marginals and the state they came from.
#[derive(Clone, Debug)]
pub struct Sample {
    pub input: TwoChannelTensor,
    pub targets: MarginalSet,
    pub generator: DensityMatrix,
    pub rank: usize,
    pub seed: u64,
    pub index: u64,
}

/// Independent stream for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn validate_shape(num_qubits: usize, k: usize) -> Result<()> {
    if !(2..=MAX_QUBITS).contains(&num_qubits) {
        return Err(PipelineError::InvalidArgument(format!("number of qubits {num_qubits} outside 2..={MAX_QUBITS}")));
    }
    if k == 0 || k >= num_qubits {
        return Err(PipelineError::InvalidArgument(format!(
            "marginal size k={k} must satisfy 1 <= k <= N-1 = {}",
            num_qubits - 1
        )));
    }
    Ok(())
}

/// Random state → all `k`-body marginals → MIO composition on the
/// maximally mixed state.
pub fn generate_sample(num_qubits: usize, k: usize, rank: RankChoice, seed: u64, index: u64) -> Result<Sample> {
    validate_shape(num_qubits, k)?;
    let mut rng = sample_rng(seed, index);
    let (generator, r) = match rank {
        RankChoice::Uniform { r_min } => random_density_matrix(num_qubits, r_min, &mut rng)?,
        RankChoice::Fixed(r) => (random_density_matrix_with_rank(num_qubits, r, &mut rng)?, r),
    };
    let targets = all_k_marginals(&generator, k)?;
    let x = mio_compose(DensityMatrix::maximally_mixed(num_qubits).matrix(), &targets, ConsistencyMode::default())?;
    Ok(Sample { input: TwoChannelTensor::from_matrix(&x.mat), targets, generator, rank: r, seed, index })
}

/// Hermiticity, unit trace, marginal match and rank bound of a generated sample.
pub fn check_sample(s: &Sample, r_min: usize) -> Result<()> {
    let x = s.input.to_matrix();
    let fail = |what: String| Err(PipelineError::Format(format!("sample {}: {what}", s.index)));
    let h = x.hermiticity_residual();
    if h > HERMITICITY_TOL {
        return fail(format!("Hermiticity residual {h:e}"));
    }
    let t = x.trace();
    if (t.re - 1.0).abs() > TRACE_TOL || t.im.abs() > TRACE_TOL {
        return fail(format!("trace {t}"));
    }
    for m in s.targets.entries() {
        let d = partial_trace(&x, &m.label)?.frobenius_distance(&m.state);
        if d > MARGINAL_MATCH_TOL {
            return fail(format!("marginal {} off by {d:e}", m.label));
        }
    }
    let dim = s.generator.dim();
    if s.rank < r_min || s.rank > dim {
        return fail(format!("rank {} outside {r_min}..={dim}", s.rank));
    }
    let numerical = s.generator.numerical_rank(RANK_TOL)?;
    if numerical > s.rank {
        return fail(format!("generator has numerical rank {numerical} > {}", s.rank));
    }
    Ok(())
}
