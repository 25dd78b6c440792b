use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qmf_cdae::{infer_batch, Network};
use qmf_core::{
    fidelity, negative_eigenvalue_profile, partial_trace, random_density_matrix, CMatrix, MarginalSet,
    NegativeEigenProfile, TwoChannelTensor,
};

use crate::baseline::{alternating_projection_baseline, BaselineConfig};
use crate::error::{PipelineError, Result};
use crate::hybrid::model1_plus_mio_batch;
use crate::sample::{generate_sample, sample_rng, validate_shape, RankChoice, Sample};

/// A reconstruction counts as a valid state when its smallest eigenvalue is
/// at least `-SUCCESS_TOL`.
pub const SUCCESS_TOL: f64 = 1e-7;
/// Mixed into the seed of the random-guess streams so guesses are
/// independent of the evaluated samples.
const RANDOM_GUESS_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvalMode {
    #[serde(rename = "model1")]
    Model1,
    #[serde(rename = "model2")]
    Model2,
    #[serde(rename = "model1+mio")]
    Model1Mio,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "baseline")]
    Baseline,
    /// Returns the generating state; checks the harness itself.
    #[serde(rename = "oracle")]
    Oracle,
}

impl EvalMode {
    pub const ALL: [EvalMode; 6] = [
        EvalMode::Model1,
        EvalMode::Model2,
        EvalMode::Model1Mio,
        EvalMode::Random,
        EvalMode::Baseline,
        EvalMode::Oracle,
    ];

    pub fn needs_model(self) -> bool {
        matches!(self, EvalMode::Model1 | EvalMode::Model2 | EvalMode::Model1Mio)
    }

    pub fn name(self) -> &'static str {
        match self {
            EvalMode::Model1 => "model1",
            EvalMode::Model2 => "model2",
            EvalMode::Model1Mio => "model1+mio",
            EvalMode::Random => "random",
            EvalMode::Baseline => "baseline",
            EvalMode::Oracle => "oracle",
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        EvalMode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<&str> = EvalMode::ALL.iter().map(|m| m.name()).collect();
            format!("unknown mode {s:?} (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub num_qubits: usize,
    pub k: usize,
    pub ranks: Vec<usize>,
    pub samples_per_rank: usize,
    pub seed: u64,
    pub baseline: BaselineConfig,
    /// Network inference batch size.
    pub batch_size: usize,
}

impl EvalConfig {
    pub fn new(num_qubits: usize, k: usize, ranks: Vec<usize>, samples_per_rank: usize, seed: u64) -> Self {
        Self { num_qubits, k, ranks, samples_per_rank, seed, baseline: BaselineConfig::default(), batch_size: 100 }
    }

    pub fn validate(&self) -> Result<()> {
        validate_shape(self.num_qubits, self.k)?;
        let d = 1usize << self.num_qubits;
        if self.ranks.is_empty() {
            return Err(PipelineError::InvalidArgument("no ranks to evaluate".into()));
        }
        if let Some(r) = self.ranks.iter().find(|&&r| r == 0 || r > d) {
            return Err(PipelineError::InvalidArgument(format!("rank {r} outside 1..={d}")));
        }
        if self.samples_per_rank == 0 || self.batch_size == 0 {
            return Err(PipelineError::InvalidArgument("sample count and batch size must be positive".into()));
        }
        Ok(())
    }

    /// Sample `i` of rank `r`; identical across modes for a fixed seed.
    pub fn sample(&self, rank: usize, i: usize) -> Result<Sample> {
        generate_sample(self.num_qubits, self.k, RankChoice::Fixed(rank), self.seed, ((rank as u64) << 32) | i as u64)
    }
}

/// Metrics for one rank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub mode: EvalMode,
    pub num_qubits: usize,
    pub k: usize,
    pub rank: usize,
    pub samples: usize,
    pub f_mean: f64,
    pub sd: f64,
    pub success_rate: f64,
    /// Mean fraction of eigenvalues below the negativity tolerance.
    pub negative_proportion: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub num_qubits: usize,
    pub k: usize,
    pub sample_count: usize,
    pub rows: Vec<RankRow>,
}

impl EvalReport {
    /// Mean fidelity over all samples of all ranks.
    pub fn overall_f_mean(&self) -> f64 {
        self.rows.iter().map(|r| r.f_mean * r.samples as f64).sum::<f64>() / self.sample_count.max(1) as f64
    }

    pub fn overall_success_rate(&self) -> f64 {
        self.rows.iter().map(|r| r.success_rate * r.samples as f64).sum::<f64>() / self.sample_count.max(1) as f64
    }
}

/// Mean and sample standard deviation (`n − 1` denominator; zero for a
/// single value).
pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Average fidelity between the marginals of `z` and their targets.
pub fn sample_fidelity(z: &CMatrix, targets: &MarginalSet) -> Result<f64> {
    let mut total = 0.0;
    for m in targets.entries() {
        total += fidelity(&m.state, &partial_trace(z, &m.label)?)?;
    }
    Ok(total / targets.len() as f64)
}

/// Per-sample fidelity, success flag and negative-eigenvalue profile.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleScore {
    pub fidelity: f64,
    pub success: bool,
    pub negative: NegativeEigenProfile,
}

pub fn score(z: &CMatrix, targets: &MarginalSet) -> Result<SampleScore> {
    let negative = negative_eigenvalue_profile(z)?;
    Ok(SampleScore {
        fidelity: sample_fidelity(z, targets)?,
        success: negative.min_eigenvalue >= -SUCCESS_TOL,
        negative,
    })
}

fn reconstruct(
    mode: EvalMode,
    model: Option<&Network<f32>>,
    cfg: &EvalConfig,
    samples: &[Sample],
) -> Result<Vec<CMatrix>> {
    match mode {
        EvalMode::Model1 | EvalMode::Model2 | EvalMode::Model1Mio => {
            let net = model.ok_or_else(|| PipelineError::InvalidArgument(format!("mode {mode} needs a model")))?;
            let mut out = Vec::with_capacity(samples.len());
            for chunk in samples.chunks(cfg.batch_size) {
                if mode == EvalMode::Model1Mio {
                    let targets: Vec<&MarginalSet> = chunk.iter().map(|s| &s.targets).collect();
                    out.extend(model1_plus_mio_batch(net, &targets)?.into_iter().map(|r| r.state));
                } else {
                    let inputs: Vec<&TwoChannelTensor> = chunk.iter().map(|s| &s.input).collect();
                    out.extend(infer_batch(net, &inputs)?.into_iter().map(|r| r.clean));
                }
            }
            Ok(out)
        }
        EvalMode::Random => samples
            .par_iter()
            .map(|s| {
                let mut rng = sample_rng(cfg.seed ^ RANDOM_GUESS_SALT, s.index);
                Ok(random_density_matrix(cfg.num_qubits, 1, &mut rng)?.0.matrix().clone())
            })
            .collect(),
        EvalMode::Baseline => {
            samples.par_iter().map(|s| Ok(alternating_projection_baseline(&s.targets, &cfg.baseline)?.state)).collect()
        }
        EvalMode::Oracle => Ok(samples.iter().map(|s| s.generator.matrix().clone()).collect()),
    }
}

/// Draws `samples_per_rank` fresh samples per rank, reconstructs them in the
/// given mode and aggregates fidelity, success rate and negativity.
pub fn evaluate(mode: EvalMode, model: Option<&Network<f32>>, cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    if let Some(net) = model.filter(|_| mode.needs_model()) {
        if net.spec().num_qubits != cfg.num_qubits {
            return Err(PipelineError::Mismatch(format!(
                "model built for {} qubits, evaluation asks for {}",
                net.spec().num_qubits,
                cfg.num_qubits
            )));
        }
    }
    let mut rows = Vec::with_capacity(cfg.ranks.len());
    for &rank in &cfg.ranks {
        let samples: Vec<Sample> =
            (0..cfg.samples_per_rank).into_par_iter().map(|i| cfg.sample(rank, i)).collect::<Result<_>>()?;
        let outputs = reconstruct(mode, model, cfg, &samples)?;
        let scores: Vec<SampleScore> =
            outputs.par_iter().zip(&samples).map(|(z, s)| score(z, &s.targets)).collect::<Result<_>>()?;
        let fids: Vec<f64> = scores.iter().map(|s| s.fidelity).collect();
        let (f_mean, sd) = mean_and_sd(&fids);
        let n = scores.len() as f64;
        rows.push(RankRow {
            mode,
            num_qubits: cfg.num_qubits,
            k: cfg.k,
            rank,
            samples: scores.len(),
            f_mean,
            sd,
            success_rate: scores.iter().filter(|s| s.success).count() as f64 / n,
            negative_proportion: scores.iter().map(|s| s.negative.proportion).sum::<f64>() / n,
        });
    }
    Ok(EvalReport {
        mode,
        num_qubits: cfg.num_qubits,
        k: cfg.k,
        sample_count: rows.iter().map(|r| r.samples).sum(),
        rows,
    })
}
