use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use qmf_cdae::{infer, Network};
use qmf_core::{mio_compose, ConsistencyMode, DensityMatrix, TwoChannelTensor};

use crate::baseline::{alternating_projection_baseline, BaselineConfig};
use crate::error::{PipelineError, Result};
use crate::eval::mean_and_sd;
use crate::sample::{generate_sample, validate_shape, RankChoice};

/// An `(N, k)` pair, written `N3k2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Case {
    pub num_qubits: usize,
    pub k: usize,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N{}k{}", self.num_qubits, self.k)
    }
}

impl FromStr for Case {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("case {s:?} is not of the form N<qubits>k<k>, e.g. N3k2");
        let rest = s.strip_prefix(['N', 'n']).ok_or_else(bad)?;
        let (n, k) = rest.split_once(['k', 'K']).ok_or_else(bad)?;
        let case = Case { num_qubits: n.parse().map_err(|_| bad())?, k: k.parse().map_err(|_| bad())? };
        validate_shape(case.num_qubits, case.k).map_err(|e| e.to_string())?;
        Ok(case)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BenchMode {
    #[serde(rename = "model1")]
    Model1,
    #[serde(rename = "model1+mio")]
    Model1Mio,
    #[serde(rename = "baseline")]
    Baseline,
}

impl BenchMode {
    pub fn needs_model(self) -> bool {
        self != BenchMode::Baseline
    }
}

impl fmt::Display for BenchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchMode::Model1 => "model1",
            BenchMode::Model1Mio => "model1+mio",
            BenchMode::Baseline => "baseline",
        })
    }
}

impl FromStr for BenchMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "model1" => Ok(BenchMode::Model1),
            "model1+mio" => Ok(BenchMode::Model1Mio),
            "baseline" => Ok(BenchMode::Baseline),
            other => Err(format!("unknown benchmark mode {other:?} (expected model1, model1+mio or baseline)")),
        }
    }
}

/// Mean and standard deviation of per-sample wall-clock time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub case: String,
    pub num_qubits: usize,
    pub k: usize,
    pub mode: BenchMode,
    pub samples: usize,
    pub mean_seconds: f64,
    pub sd_seconds: f64,
    /// Baseline only: runs that reached the tolerance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<usize>,
}

/// Times reconstruction of marginals of full-rank states. Model loading is
/// excluded. For each sample the model1 time (first MIO pass and inference)
/// and the model1+MIO time (same run plus the second pass) come from one
/// timeline, so model1 never exceeds model1+MIO.
pub fn benchmark_runtime(
    cases: &[(Case, Option<&Network<f32>>)],
    modes: &[BenchMode],
    samples: usize,
    seed: u64,
    baseline: &BaselineConfig,
) -> Result<Vec<TimingRow>> {
    if samples == 0 {
        return Err(PipelineError::InvalidArgument("need at least one sample".into()));
    }
    let mut rows = Vec::new();
    for &(case, net) in cases {
        let d = 1usize << case.num_qubits;
        let model_modes: Vec<BenchMode> = modes.iter().copied().filter(|m| m.needs_model()).collect();
        let net = match (net, model_modes.is_empty()) {
            (Some(n), _) if n.spec().num_qubits != case.num_qubits => {
                return Err(PipelineError::Mismatch(format!("{case}: model built for {} qubits", n.spec().num_qubits)))
            }
            (None, false) => {
                return Err(PipelineError::InvalidArgument(format!("{case}: no checkpoint for model modes")))
            }
            (n, _) => n,
        };
        let targets: Vec<_> = (0..samples)
            .map(|i| generate_sample(case.num_qubits, case.k, RankChoice::Fixed(d), seed, i as u64).map(|s| s.targets))
            .collect::<Result<_>>()?;

        let mut t_model = Vec::new();
        let mut t_hybrid = Vec::new();
        if let Some(net) = net.filter(|_| !model_modes.is_empty()) {
            let mixed = DensityMatrix::maximally_mixed(case.num_qubits);
            for t in &targets {
                let t0 = Instant::now();
                let x = mio_compose(mixed.matrix(), t, ConsistencyMode::default())?;
                let r = infer(net, &TwoChannelTensor::from_matrix(&x.mat))?;
                let t1 = t0.elapsed().as_secs_f64();
                let out = mio_compose(&r.clean, t, ConsistencyMode::default())?;
                let t2 = t0.elapsed().as_secs_f64();
                std::hint::black_box(&out);
                t_model.push(t1);
                t_hybrid.push(t2);
            }
        }
        for &mode in modes {
            let (times, converged) = match mode {
                BenchMode::Model1 => (t_model.clone(), None),
                BenchMode::Model1Mio => (t_hybrid.clone(), None),
                BenchMode::Baseline => {
                    let mut times = Vec::with_capacity(samples);
                    let mut ok = 0;
                    for t in &targets {
                        let t0 = Instant::now();
                        let out = alternating_projection_baseline(t, baseline)?;
                        times.push(t0.elapsed().as_secs_f64());
                        ok += out.converged as usize;
                    }
                    (times, Some(ok))
                }
            };
            let (mean, sd) = mean_and_sd(&times);
            rows.push(TimingRow {
                case: case.to_string(),
                num_qubits: case.num_qubits,
                k: case.k,
                mode,
                samples,
                mean_seconds: mean,
                sd_seconds: sd,
                converged,
            });
        }
    }
    Ok(rows)
}
