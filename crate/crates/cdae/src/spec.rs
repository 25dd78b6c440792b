//! Layer tables of the autoencoder for `N` qubits and width scale `S`.
//!
//! Every hidden layer has `10·S` channels. The encoder is three
//! `Conv(3,1,1) → Tanh → MaxPool(2,2,0)` blocks taking the side from `2^N` to
//! `2^{N−3}`. The decoder is `TConv(3,2,1)`, `TConv(5,2,1)`, `TConv(6,2,0)`
//! (each followed by Tanh) and a final `Conv(3,1,0)` to two channels, giving
//! sides `2^{N−2}−1`, `2^{N−1}−1`, `2^N+2` and finally `2^N`.

use serde::{Deserialize, Serialize};

use qmf_nn::{chain_sizes, ConvSpec, PoolSpec, Stage};

use crate::error::{CdaeError, Result};

/// Smallest register the encoder can shrink without running out of pixels.
pub const MIN_QUBITS: usize = 3;
/// Largest register accepted; beyond this a single sample no longer fits in
/// a `u32`-indexed tensor comfortably.
pub const MAX_QUBITS: usize = 12;
/// Parameterized layers: three encoder convolutions, three transposed
/// convolutions and the output convolution.
pub const NUM_PARAM_LAYERS: usize = 7;
/// Index of the first decoder layer in the parameterized-layer list.
pub const FIRST_DECODER_LAYER: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    Conv,
    TConv,
}

/// One step of the forward stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    /// Index into the parameterized-layer list.
    Param(usize),
    Tanh,
    Pool(PoolSpec),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamLayerSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub conv: ConvSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub num_qubits: usize,
    pub scale: usize,
}

const POOL: PoolSpec = PoolSpec { kernel: 2, stride: 2, padding: 0 };

impl NetworkSpec {
    /// Validates `S ≥ 1` and that the size chain closes for `N`.
    pub fn new(num_qubits: usize, scale: usize) -> Result<Self> {
        let spec = Self { num_qubits, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale == 0 {
            return Err(CdaeError::InvalidArchitecture("scale S must be at least 1".into()));
        }
        if self.num_qubits > MAX_QUBITS {
            return Err(CdaeError::InvalidArchitecture(format!(
                "{} qubits exceeds the supported maximum of {MAX_QUBITS}",
                self.num_qubits
            )));
        }
        let sizes = self
            .size_chain()
            .map_err(|e| CdaeError::InvalidArchitecture(format!("{} qubits: {e}", self.num_qubits)))?;
        if *sizes.last().expect("non-empty chain") != self.side() {
            return Err(CdaeError::InvalidArchitecture(format!(
                "{} qubits: output side {} differs from input side {}",
                self.num_qubits,
                sizes.last().unwrap(),
                self.side()
            )));
        }
        Ok(())
    }

    /// Hidden channel count `10·S`.
    pub fn channels(&self) -> usize {
        10 * self.scale
    }

    /// Matrix side `2^N`.
    pub fn side(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn param_layers(&self) -> Vec<ParamLayerSpec> {
        let c = self.channels();
        vec![
            ParamLayerSpec { name: "encoder.conv0", kind: ParamKind::Conv, conv: ConvSpec::new(2, c, 3, 1, 1) },
            ParamLayerSpec { name: "encoder.conv1", kind: ParamKind::Conv, conv: ConvSpec::new(c, c, 3, 1, 1) },
            ParamLayerSpec { name: "encoder.conv2", kind: ParamKind::Conv, conv: ConvSpec::new(c, c, 3, 1, 1) },
            ParamLayerSpec { name: "decoder.tconv0", kind: ParamKind::TConv, conv: ConvSpec::new(c, c, 3, 2, 1) },
            ParamLayerSpec { name: "decoder.tconv1", kind: ParamKind::TConv, conv: ConvSpec::new(c, c, 5, 2, 1) },
            ParamLayerSpec { name: "decoder.tconv2", kind: ParamKind::TConv, conv: ConvSpec::new(c, c, 6, 2, 0) },
            ParamLayerSpec { name: "decoder.conv_out", kind: ParamKind::Conv, conv: ConvSpec::new(c, 2, 3, 1, 0) },
        ]
    }

    /// Full forward stack, encoder then decoder.
    pub fn layers(&self) -> Vec<Layer> {
        let mut out = Vec::new();
        for p in 0..3 {
            out.extend([Layer::Param(p), Layer::Tanh, Layer::Pool(POOL)]);
        }
        for p in 3..6 {
            out.extend([Layer::Param(p), Layer::Tanh]);
        }
        out.push(Layer::Param(6));
        out
    }

    /// Number of entries of [`NetworkSpec::layers`] that belong to the encoder.
    pub fn encoder_len(&self) -> usize {
        9
    }

    pub fn stages(&self) -> Vec<Stage> {
        let params = self.param_layers();
        self.layers()
            .into_iter()
            .filter_map(|l| match l {
                Layer::Param(i) => Some(match params[i].kind {
                    ParamKind::Conv => Stage::Conv(params[i].conv),
                    ParamKind::TConv => Stage::TConv(params[i].conv),
                }),
                Layer::Pool(p) => Some(Stage::Pool(p)),
                Layer::Tanh => None,
            })
            .collect()
    }

    /// Spatial side after every size-changing stage, starting at `2^N`.
    pub fn size_chain(&self) -> qmf_nn::Result<Vec<usize>> {
        chain_sizes(self.side(), &self.stages())
    }

    /// Side of the latent representation, `2^{N−3}`.
    pub fn latent_side(&self) -> usize {
        self.side() >> 3
    }

    pub fn param_count(&self) -> usize {
        self.param_layers().iter().map(|l| l.conv.weight_len() + l.conv.out_channels).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_qubits_scale_ten() {
        let s = NetworkSpec::new(3, 10).unwrap();
        assert_eq!(s.channels(), 100);
        assert_eq!(s.latent_side(), 1);
        assert_eq!(s.size_chain().unwrap(), vec![8, 8, 4, 4, 2, 2, 1, 1, 3, 10, 8]);
    }

    #[test]
    fn chain_closes_for_three_to_ten_qubits() {
        for n in 3..=10 {
            let s = NetworkSpec::new(n, 1).unwrap();
            let sizes = s.size_chain().unwrap();
            assert_eq!(sizes[6], 1 << (n - 3));
            assert_eq!(sizes[7], (1 << (n - 2)) - 1);
            assert_eq!(sizes[8], (1 << (n - 1)) - 1);
            assert_eq!(sizes[9], (1 << n) + 2);
            assert_eq!(sizes[10], 1 << n);
        }
    }

    #[test]
    fn too_few_qubits_or_zero_scale() {
        assert!(matches!(NetworkSpec::new(2, 10), Err(CdaeError::InvalidArchitecture(_))));
        assert!(NetworkSpec::new(1, 10).is_err());
        assert!(NetworkSpec::new(3, 0).is_err());
    }

    #[test]
    fn layer_table() {
        let s = NetworkSpec::new(4, 2).unwrap();
        let p = s.param_layers();
        assert_eq!(p.len(), NUM_PARAM_LAYERS);
        let kernels: Vec<usize> = p.iter().map(|l| l.conv.kernel).collect();
        assert_eq!(kernels, vec![3, 3, 3, 3, 5, 6, 3]);
        let strides: Vec<usize> = p.iter().map(|l| l.conv.stride).collect();
        assert_eq!(strides, vec![1, 1, 1, 2, 2, 2, 1]);
        let pads: Vec<usize> = p.iter().map(|l| l.conv.padding).collect();
        assert_eq!(pads, vec![1, 1, 1, 1, 1, 0, 0]);
        assert!(p.iter().all(|l| l.conv.dilation == 1 && l.conv.output_padding == 0));
        assert_eq!(p[0].conv.in_channels, 2);
        assert_eq!(p[6].conv.out_channels, 2);
        assert_eq!(s.layers().len(), 16);
        assert_eq!(s.encoder_len(), 9);
    }
}
