//! Binary checkpoint format:
//!
//! ```text
//! "QMCK" | version u16 LE | header length u32 LE | JSON header | f32 LE blobs
//! ```
//!
//! Blobs follow the parameterized-layer order, weights before biases.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CdaeError, Result};
use crate::loss::LossVariant;
use crate::network::{Network, ParamLayer};
use crate::spec::NetworkSpec;

pub const MAGIC: &[u8; 4] = b"QMCK";
pub const FORMAT_VERSION: u16 = 1;

/// What produced the weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub samples: usize,
    pub dataset_digest: Option<String>,
    /// Per parameterized layer; `true` means the layer was not updated.
    pub frozen: Vec<bool>,
    /// Register size of the checkpoint these weights were transferred from.
    pub transferred_from: Option<usize>,
    pub final_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    pub weight_len: usize,
    pub bias_len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u16,
    pub num_qubits: usize,
    pub scale: usize,
    pub variant: LossVariant,
    pub training: Option<TrainingMeta>,
    pub layers: Vec<LayerEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub network: Network<f32>,
}

impl Checkpoint {
    pub fn new(network: Network<f32>, variant: LossVariant, training: Option<TrainingMeta>) -> Self {
        let spec = *network.spec();
        let layers = spec
            .param_layers()
            .iter()
            .map(|l| LayerEntry {
                name: l.name.to_string(),
                weight_len: l.conv.weight_len(),
                bias_len: l.conv.out_channels,
            })
            .collect();
        Self {
            header: CheckpointHeader {
                format_version: FORMAT_VERSION,
                num_qubits: spec.num_qubits,
                scale: spec.scale,
                variant,
                training,
                layers,
            },
            network,
        }
    }

    pub fn spec(&self) -> &NetworkSpec {
        self.network.spec()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header).map_err(|e| CdaeError::Format(e.to_string()))?;
        let header_len = u32::try_from(header.len()).map_err(|_| CdaeError::Format("header too large".into()))?;
        let n_params = self.spec().param_count();
        let mut out = Vec::with_capacity(10 + header.len() + 4 * n_params);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&header_len.to_le_bytes());
        out.extend_from_slice(&header);
        for p in self.network.params() {
            for v in p.weight.iter().chain(&p.bias) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 10 || &bytes[..4] != MAGIC {
            return Err(CdaeError::Format("missing QMCK magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(CdaeError::Format(format!("unsupported version {version}")));
        }
        let header_len = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
        let body = &bytes[10..];
        if body.len() < header_len {
            return Err(CdaeError::Format("truncated header".into()));
        }
        let header: CheckpointHeader =
            serde_json::from_slice(&body[..header_len]).map_err(|e| CdaeError::Format(e.to_string()))?;
        if header.format_version != version {
            return Err(CdaeError::Format("header and preamble versions differ".into()));
        }
        let spec = NetworkSpec::new(header.num_qubits, header.scale)?;
        let layers = spec.param_layers();
        if header.layers.len() != layers.len() {
            return Err(CdaeError::Format(format!(
                "{} layers declared, expected {}",
                header.layers.len(),
                layers.len()
            )));
        }
        let mut blobs = &body[header_len..];
        let mut take = |n: usize| -> Result<Vec<f32>> {
            if blobs.len() < 4 * n {
                return Err(CdaeError::Format("truncated parameter blob".into()));
            }
            let (head, rest) = blobs.split_at(4 * n);
            blobs = rest;
            Ok(head.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
        };
        let mut params = Vec::with_capacity(layers.len());
        for (entry, l) in header.layers.iter().zip(&layers) {
            if entry.weight_len != l.conv.weight_len() || entry.bias_len != l.conv.out_channels || entry.name != l.name
            {
                return Err(CdaeError::Format(format!("layer {} does not match the architecture", entry.name)));
            }
            let weight = take(entry.weight_len)?;
            let bias = take(entry.bias_len)?;
            params.push(ParamLayer { weight, bias });
        }
        if !blobs.is_empty() {
            return Err(CdaeError::Format(format!("{} trailing bytes", blobs.len())));
        }
        Ok(Self { header, network: Network::from_params(spec, params)? })
    }

    /// Writes to a temporary sibling and renames, so a failed save never
    /// leaves a partial file at `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("qmck.partial");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
