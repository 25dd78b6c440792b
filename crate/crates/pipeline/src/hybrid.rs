use qmf_cdae::{infer_batch, Network};
use qmf_core::{
    mio_compose, negative_eigenvalue_profile, CMatrix, ConsistencyMode, DensityMatrix, MarginalSet,
    NegativeEigenProfile, TwoChannelTensor,
};

use crate::baseline::marginal_residual;
use crate::error::{PipelineError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct HybridDiagnostics {
    /// MIO composition on the maximally mixed state (the network input).
    pub first_pass: NegativeEigenProfile,
    /// Cleaned network output.
    pub network: NegativeEigenProfile,
    /// MIO composition on the network output (the final state).
    pub second_pass: NegativeEigenProfile,
    pub marginal_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridResult {
    /// Exact-marginal output; a valid state when `second_pass` has no
    /// negative eigenvalues.
    pub state: CMatrix,
    pub network_output: CMatrix,
    pub diagnostics: HybridDiagnostics,
}

/// Network output fed back through the MIO composition.
pub fn model1_plus_mio(net: &Network<f32>, targets: &MarginalSet) -> Result<HybridResult> {
    Ok(model1_plus_mio_batch(net, &[targets])?.pop().expect("one result per target set"))
}

pub fn model1_plus_mio_batch(net: &Network<f32>, targets: &[&MarginalSet]) -> Result<Vec<HybridResult>> {
    let n = net.spec().num_qubits;
    if let Some(t) = targets.iter().find(|t| t.num_qubits() != n) {
        return Err(PipelineError::Mismatch(format!("{}-qubit marginals for a {n}-qubit model", t.num_qubits())));
    }
    let seed = DensityMatrix::maximally_mixed(n);
    let first: Vec<_> = targets
        .iter()
        .map(|t| mio_compose(seed.matrix(), t, ConsistencyMode::default()))
        .collect::<std::result::Result<_, _>>()?;
    let inputs: Vec<TwoChannelTensor> = first.iter().map(|c| TwoChannelTensor::from_matrix(&c.mat)).collect();
    let refs: Vec<&TwoChannelTensor> = inputs.iter().collect();
    let recon = infer_batch(net, &refs)?;
    first
        .into_iter()
        .zip(recon)
        .zip(targets)
        .map(|((pass1, r), t)| {
            let pass2 = mio_compose(&r.clean, t, ConsistencyMode::default())?;
            Ok(HybridResult {
                diagnostics: HybridDiagnostics {
                    first_pass: pass1.negative_eigs,
                    network: negative_eigenvalue_profile(&r.clean)?,
                    second_pass: pass2.negative_eigs,
                    marginal_residual: marginal_residual(&pass2.mat, t)?,
                },
                state: pass2.mat,
                network_output: r.clean,
            })
        })
        .collect()
}
