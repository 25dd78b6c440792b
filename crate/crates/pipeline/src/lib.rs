//! End-to-end workflow around the autoencoder: `QMDS` data sets, per-rank
//! evaluation, the network-then-MIO hybrid, an alternating-projection
//! baseline and runtime benchmarks.

pub mod baseline;
pub mod bench;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod hybrid;
pub mod jsonl;
pub mod sample;

pub use baseline::{alternating_projection_baseline, marginal_residual, BaselineConfig, BaselineOutcome};
pub use bench::{benchmark_runtime, BenchMode, Case, TimingRow};
pub use dataset::{
    generate_dataset, validate_dataset, Dataset, DatasetWriter, GenConfig, GenSummary, ValidationReport, FILE_TOL,
    FORMAT_VERSION, MAGIC,
};
pub use error::{PipelineError, Result};
pub use eval::{
    evaluate, mean_and_sd, sample_fidelity, score, EvalConfig, EvalMode, EvalReport, RankRow, SampleScore, SUCCESS_TOL,
};
pub use hybrid::{model1_plus_mio, model1_plus_mio_batch, HybridDiagnostics, HybridResult};
pub use jsonl::{sha256_file, to_json_lines, write_atomic};
pub use sample::{check_sample, generate_sample, sample_rng, RankChoice, Sample, MAX_QUBITS, RANK_TOL};
