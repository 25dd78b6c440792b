use serde::{Deserialize, Serialize};

use qmf_core::{
    eigvalsh, mio_compose, partial_trace, psd_project, renormalize, CMatrix, ConsistencyMode, DensityMatrix,
    MarginalSet,
};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { max_iters: 10_000, tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineOutcome {
    /// The last iterate; a feasible state when `converged`.
    pub state: CMatrix,
    pub converged: bool,
    pub iterations: usize,
    /// Largest Frobenius distance between a marginal of `state` and its target.
    pub marginal_residual: f64,
    pub min_eigenvalue: f64,
}

/// Largest Frobenius distance between the marginals of `z` and `targets`.
pub fn marginal_residual(z: &CMatrix, targets: &MarginalSet) -> Result<f64> {
    let mut worst = 0.0f64;
    for m in targets.entries() {
        worst = worst.max(partial_trace(z, &m.label)?.frobenius_distance(&m.state));
    }
    Ok(worst)
}

/// Alternates between the affine set with the prescribed marginals (MIO
/// composition) and the PSD cone, starting from the maximally mixed state.
/// Stops once an iterate is within `tol` of both sets. A state returned from
/// the PSD side is rescaled to unit trace.
pub fn alternating_projection_baseline(targets: &MarginalSet, cfg: &BaselineConfig) -> Result<BaselineOutcome> {
    let n = targets.num_qubits();
    let mut x = DensityMatrix::maximally_mixed(n).matrix().clone();
    let mut last = BaselineOutcome {
        state: x.clone(),
        converged: false,
        iterations: 0,
        marginal_residual: marginal_residual(&x, targets)?,
        min_eigenvalue: eigvalsh(&x)?[0],
    };
    for it in 1..=cfg.max_iters {
        let m = mio_compose(&x, targets, ConsistencyMode::default())?.mat;
        let min = eigvalsh(&m)?[0];
        if min >= -cfg.tol {
            return Ok(BaselineOutcome {
                marginal_residual: marginal_residual(&m, targets)?,
                state: m,
                converged: true,
                iterations: it,
                min_eigenvalue: min,
            });
        }
        // No renormalization inside the loop: clipping followed by rescaling
        // is not a Euclidean projection and can stall short of the
        // intersection. The next MIO pass restores unit trace anyway.
        x = psd_project(&m)?;
        let state = renormalize(&x)?;
        let res = marginal_residual(&state, targets)?;
        let min_x = eigvalsh(&state)?[0];
        last = BaselineOutcome {
            state,
            converged: res < cfg.tol,
            iterations: it,
            marginal_residual: res,
            min_eigenvalue: min_x,
        };
        if last.converged {
            return Ok(last);
        }
    }
    Ok(last)
}
