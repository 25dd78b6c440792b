use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::error::{CdaeError, Result};
use crate::network::Network;
use crate::spec::{FIRST_DECODER_LAYER, NUM_PARAM_LAYERS};

/// Which layers stay trainable after loading a smaller model's weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferPolicy {
    /// Encoder frozen, whole decoder trainable.
    Decoder,
    /// Only the output convolution trainable.
    LastLayer,
    /// Everything trainable.
    Full,
}

impl TransferPolicy {
    /// `true` marks a frozen layer.
    pub fn frozen_mask(self) -> Vec<bool> {
        (0..NUM_PARAM_LAYERS)
            .map(|i| match self {
                TransferPolicy::Decoder => i < FIRST_DECODER_LAYER,
                TransferPolicy::LastLayer => i + 1 < NUM_PARAM_LAYERS,
                TransferPolicy::Full => false,
            })
            .collect()
    }
}

impl fmt::Display for TransferPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransferPolicy::Decoder => "decoder",
            TransferPolicy::LastLayer => "last-layer",
            TransferPolicy::Full => "full",
        })
    }
}

impl FromStr for TransferPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "decoder" => Ok(TransferPolicy::Decoder),
            "last-layer" => Ok(TransferPolicy::LastLayer),
            "full" => Ok(TransferPolicy::Full),
            other => Err(format!("unknown transfer policy {other:?} (expected full, decoder or last-layer)")),
        }
    }
}

/// Loads `parent`'s weights into a network for `num_qubits` qubits. Layer
/// shapes depend only on the scale, so the weights carry over unchanged.
pub fn transfer(
    parent: &Checkpoint,
    num_qubits: usize,
    scale: usize,
    policy: TransferPolicy,
) -> Result<(Network<f32>, Vec<bool>)> {
    if parent.header.scale != scale {
        return Err(CdaeError::Mismatch(format!(
            "parent checkpoint has scale {}, target model wants {scale}",
            parent.header.scale
        )));
    }
    let net = parent.network.clone().with_num_qubits(num_qubits)?;
    Ok((net, policy.frozen_mask()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks() {
        assert_eq!(TransferPolicy::LastLayer.frozen_mask().iter().filter(|f| !**f).count(), 1);
        assert!(!TransferPolicy::LastLayer.frozen_mask()[6]);
        assert_eq!(TransferPolicy::Decoder.frozen_mask(), vec![true, true, true, false, false, false, false]);
        assert!(TransferPolicy::Full.frozen_mask().iter().all(|f| !f));
        assert_eq!("last-layer".parse::<TransferPolicy>().unwrap(), TransferPolicy::LastLayer);
        assert!("encoder".parse::<TransferPolicy>().is_err());
    }
}
