use qmf_core::{hermitize, renormalize, CMatrix, TwoChannelTensor};
use qmf_nn::Real;

use crate::error::Result;
use crate::loss::matrix_from_channels;
use crate::network::Network;
use crate::train::stack_inputs;

/// Network output before and after clean-up.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub raw: CMatrix,
    /// `(Z + Z†)/2` divided by its trace.
    pub clean: CMatrix,
}

pub fn clean_output(raw: &CMatrix) -> Result<CMatrix> {
    Ok(renormalize(&hermitize(raw))?)
}

pub fn infer<T: Real>(net: &Network<T>, x: &TwoChannelTensor) -> Result<Reconstruction> {
    Ok(infer_batch(net, &[x])?.pop().expect("one output per input"))
}

/// One forward pass over all inputs.
pub fn infer_batch<T: Real>(net: &Network<T>, xs: &[&TwoChannelTensor]) -> Result<Vec<Reconstruction>> {
    if xs.is_empty() {
        return Ok(Vec::new());
    }
    let out = net.forward(&stack_inputs::<T>(xs)?)?;
    let d = net.spec().side();
    (0..xs.len())
        .map(|b| {
            let raw = matrix_from_channels(out.item(b), d);
            let clean = clean_output(&raw)?;
            Ok(Reconstruction { raw, clean })
        })
        .collect()
}
