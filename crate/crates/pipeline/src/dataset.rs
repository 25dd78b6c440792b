//! `QMDS` dataset files.
//!
//! ```text
//! "QMDS" | version u16 | N u8 | k u8 | count u64
//! per sample: 2·d² f32 (real channel, imaginary channel)
//!             u16 marginal count
//!             per marginal: u32 subset mask, 2·d_J² f32 interleaved (re, im)
//! ```
//!
//! All integers and floats little-endian.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qmf_cdae::{Example, TrainingData};
use qmf_core::{k_subsets, partial_trace, CMatrix, Complex64, Marginal, MarginalSet, SubsystemLabel, TwoChannelTensor};

use crate::error::{PipelineError, Result};
use crate::sample::{check_sample, generate_sample, validate_shape, RankChoice, Sample};

pub const MAGIC: &[u8; 4] = b"QMDS";
pub const FORMAT_VERSION: u16 = 1;
/// Tolerance for checks on single-precision file contents.
pub const FILE_TOL: f64 = 1e-5;
const HEADER_LEN: usize = 4 + 2 + 1 + 1 + 8;
/// Samples generated in parallel before being handed to the writer.
const GEN_CHUNK: u64 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub num_qubits: usize,
    pub k: usize,
    pub count: u64,
    pub r_min: usize,
    pub seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        validate_shape(self.num_qubits, self.k)?;
        let d = 1usize << self.num_qubits;
        if self.r_min == 0 || self.r_min > d {
            return Err(PipelineError::InvalidArgument(format!("r_min {} outside 1..={d}", self.r_min)));
        }
        Ok(())
    }

    /// Sample `index` of this data set, checked.
    pub fn sample(&self, index: u64) -> Result<Sample> {
        let s = generate_sample(self.num_qubits, self.k, RankChoice::Uniform { r_min: self.r_min }, self.seed, index)?;
        check_sample(&s, self.r_min)?;
        Ok(s)
    }

    /// All samples in memory, generated in parallel.
    pub fn samples(&self) -> Result<Vec<Sample>> {
        self.validate()?;
        (0..self.count).into_par_iter().map(|i| self.sample(i)).collect()
    }
}

/// Streams samples into a `QMDS` file while hashing every byte.
pub struct DatasetWriter<W: Write> {
    inner: W,
    hasher: Sha256,
    num_qubits: usize,
    k: usize,
    expected: u64,
    written: u64,
}

impl<W: Write> DatasetWriter<W> {
    pub fn new(inner: W, num_qubits: usize, k: usize, count: u64) -> Result<Self> {
        validate_shape(num_qubits, k)?;
        let mut w = Self { inner, hasher: Sha256::new(), num_qubits, k, expected: count, written: 0 };
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        header.push(num_qubits as u8);
        header.push(k as u8);
        header.extend_from_slice(&count.to_le_bytes());
        w.put(&header)?;
        Ok(w)
    }

    fn put(&mut self, bytes: &[u8]) -> Result<()> {
        self.hasher.update(bytes);
        self.inner.write_all(bytes)?;
        Ok(())
    }

    pub fn write_sample(&mut self, input: &TwoChannelTensor, targets: &MarginalSet) -> Result<()> {
        if self.written == self.expected {
            return Err(PipelineError::InvalidArgument(format!("header declares {} samples", self.expected)));
        }
        if input.side() != 1 << self.num_qubits || targets.num_qubits() != self.num_qubits {
            return Err(PipelineError::Mismatch(format!("sample does not fit a {}-qubit data set", self.num_qubits)));
        }
        if targets.labels().any(|l| l.len() != self.k) {
            return Err(PipelineError::Mismatch(format!("marginals must act on {} qubits", self.k)));
        }
        let mut buf =
            Vec::with_capacity(4 * input.as_slice().len() + 2 + targets.len() * (4 + 8 * (1 << (2 * self.k))));
        for v in input.as_slice() {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        buf.extend_from_slice(&(targets.len() as u16).to_le_bytes());
        for m in targets.entries() {
            buf.extend_from_slice(&m.label.mask().to_le_bytes());
            for c in m.state.as_slice() {
                buf.extend_from_slice(&(c.re as f32).to_le_bytes());
                buf.extend_from_slice(&(c.im as f32).to_le_bytes());
            }
        }
        self.put(&buf)?;
        self.written += 1;
        Ok(())
    }

    /// Flushes and returns the inner writer and the hex SHA-256 of the file.
    pub fn finish(mut self) -> Result<(W, String)> {
        if self.written != self.expected {
            return Err(PipelineError::InvalidArgument(format!(
                "wrote {} samples, header declares {}",
                self.written, self.expected
            )));
        }
        self.inner.flush()?;
        Ok((self.inner, hex::encode(self.hasher.finalize())))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSummary {
    pub count: u64,
    pub digest: String,
}

/// Generates `cfg.count` samples into `path`. The file appears only once
/// complete.
pub fn generate_dataset(cfg: &GenConfig, path: &Path) -> Result<GenSummary> {
    cfg.validate()?;
    let tmp = crate::jsonl::temp_beside(path)?;
    let mut w = DatasetWriter::new(BufWriter::new(tmp), cfg.num_qubits, cfg.k, cfg.count)?;
    let mut start = 0;
    while start < cfg.count {
        let end = (start + GEN_CHUNK).min(cfg.count);
        let chunk: Vec<Sample> = (start..end).into_par_iter().map(|i| cfg.sample(i)).collect::<Result<_>>()?;
        for s in &chunk {
            w.write_sample(&s.input, &s.targets)?;
        }
        start = end;
        if start % (64 * GEN_CHUNK) == 0 {
            info!("generated {start}/{} samples", cfg.count);
        }
    }
    let (buf, digest) = w.finish()?;
    let tmp = buf.into_inner().map_err(|e| e.into_error())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(GenSummary { count: cfg.count, digest })
}

/// A `QMDS` file decoded into training examples.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub num_qubits: usize,
    pub k: usize,
    pub examples: Vec<Example>,
    digest: String,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| PipelineError::Format(format!("truncated at byte {} (wanted {n} more)", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(4 * n)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64).collect())
    }
}

impl Dataset {
    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor { bytes, pos: 0 };
        if c.take(4)? != MAGIC {
            return Err(PipelineError::Format("bad magic, not a QMDS file".into()));
        }
        let version = c.u16()?;
        if version != FORMAT_VERSION {
            return Err(PipelineError::Format(format!("unsupported version {version}")));
        }
        let head = c.take(2)?;
        let (n, k) = (head[0] as usize, head[1] as usize);
        validate_shape(n, k).map_err(|e| PipelineError::Format(e.to_string()))?;
        let count = c.u64()?;
        let d = 1usize << n;
        let dk = 1usize << k;
        let per_sample = 4 * 2 * d * d + 2;
        if (count as u128) * (per_sample as u128) > (bytes.len() - HEADER_LEN) as u128 {
            return Err(PipelineError::Format(format!("{count} samples cannot fit in {} bytes", bytes.len())));
        }
        let mut examples = Vec::with_capacity(count as usize);
        for i in 0..count {
            let input = TwoChannelTensor::from_channels(d, c.f32s(2 * d * d)?)?;
            let m = c.u16()? as usize;
            let mut entries = Vec::with_capacity(m);
            for _ in 0..m {
                let mask = c.u32()?;
                let label =
                    SubsystemLabel::new(mask, n).map_err(|e| PipelineError::Format(format!("sample {i}: {e}")))?;
                if label.len() != k {
                    return Err(PipelineError::Format(format!("sample {i}: label {label} is not {k}-body")));
                }
                let v = c.f32s(2 * dk * dk)?;
                let data = v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
                entries.push(Marginal { label, state: CMatrix::from_vec(dk, data)? });
            }
            let targets = MarginalSet::with_tolerance(n, entries, FILE_TOL)
                .map_err(|e| PipelineError::Format(format!("sample {i}: {e}")))?;
            examples.push(Example { input, targets });
        }
        if c.pos != bytes.len() {
            return Err(PipelineError::Format(format!("{} trailing bytes", bytes.len() - c.pos)));
        }
        Ok(Self { num_qubits: n, k, examples, digest: hex::encode(Sha256::digest(bytes)) })
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }
}

impl TrainingData for Dataset {
    fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn len(&self) -> usize {
        self.examples.len()
    }

    fn input(&self, i: usize) -> &TwoChannelTensor {
        &self.examples[i].input
    }

    fn targets(&self, i: usize) -> &MarginalSet {
        &self.examples[i].targets
    }

    fn digest(&self) -> Option<String> {
        Some(self.digest.clone())
    }
}

/// Worst deviations found by [`validate_dataset`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub max_hermiticity_residual: f64,
    pub max_trace_error: f64,
    pub max_marginal_error: f64,
    /// `(sample index, reason)` for every failing sample.
    pub failures: Vec<(usize, String)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks every sample at single-precision tolerance: Hermitian unit-trace
/// input, all `C(N, k)` marginals present in order, and marginals of the
/// input matching the stored targets.
pub fn validate_dataset(ds: &Dataset) -> Result<ValidationReport> {
    let labels = k_subsets(ds.num_qubits, ds.k)?;
    let rows: Vec<(f64, f64, f64, Option<String>)> = ds
        .examples
        .par_iter()
        .map(|e| -> Result<_> {
            let x = e.input.to_matrix();
            let h = x.hermiticity_residual();
            let t = (x.trace() - Complex64::new(1.0, 0.0)).norm();
            let mut worst = 0.0f64;
            for m in e.targets.entries() {
                worst = worst.max(partial_trace(&x, &m.label)?.frobenius_distance(&m.state));
            }
            let got: Vec<&SubsystemLabel> = e.targets.labels().collect();
            let reason = if got.len() != labels.len() || got.iter().zip(&labels).any(|(a, b)| *a != b) {
                Some("marginal labels are not the full lexicographic k-subset list".to_string())
            } else if h > FILE_TOL {
                Some(format!("Hermiticity residual {h:e}"))
            } else if t > FILE_TOL {
                Some(format!("trace error {t:e}"))
            } else if worst > FILE_TOL {
                Some(format!("marginal mismatch {worst:e}"))
            } else {
                None
            };
            Ok((h, t, worst, reason))
        })
        .collect::<Result<_>>()?;
    let mut report = ValidationReport { samples: rows.len(), ..Default::default() };
    for (i, (h, t, m, reason)) in rows.into_iter().enumerate() {
        report.max_hermiticity_residual = report.max_hermiticity_residual.max(h);
        report.max_trace_error = report.max_trace_error.max(t);
        report.max_marginal_error = report.max_marginal_error.max(m);
        if let Some(r) = reason {
            report.failures.push((i, r));
        }
    }
    Ok(report)
}
