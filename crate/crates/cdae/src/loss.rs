//! Training loss on the raw network output `Z`:
//!
//! ```text
//! L = mse(Re U, 𝟙) + mse(Im U, 0) + Σ_J mse(σ_J, tr_{J^c} Z)
//! ```
//!
//! where `Z = U P` is the polar decomposition and each mse is a mean over
//! matrix entries (real and imaginary parts of the marginal residual both
//! counted). `Model2` drops the marginal sum.
//!
//! The gradient with respect to `Z` is returned as a complex matrix `G` with
//! `δL = Re tr(G† δZ)`, so `Re G` and `Im G` are the gradients for the two
//! input channels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use qmf_core::{add_embedded, partial_trace, svd, CMatrix, Complex64, MarginalSet};
use qmf_nn::Real;

use crate::error::{CdaeError, Result};

/// Floor on `σ_i + σ_j` in the polar-factor backward pass.
pub const POLAR_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossVariant {
    /// Unitary terms plus marginal matching.
    Model1,
    /// Unitary terms only.
    Model2,
}

impl LossVariant {
    pub fn has_marginal_term(self) -> bool {
        self == LossVariant::Model1
    }
}

impl fmt::Display for LossVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossVariant::Model1 => "model1",
            LossVariant::Model2 => "model2",
        })
    }
}

impl FromStr for LossVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "model1" => Ok(LossVariant::Model1),
            "model2" => Ok(LossVariant::Model2),
            other => Err(format!("unknown loss variant {other:?} (expected model1 or model2)")),
        }
    }
}

/// The three loss terms; `marginal` is zero for `Model2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub unitary_real: f64,
    pub unitary_imag: f64,
    pub marginal: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.unitary_real + self.unitary_imag + self.marginal
    }

    pub fn add(&mut self, other: &LossTerms) {
        self.unitary_real += other.unitary_real;
        self.unitary_imag += other.unitary_imag;
        self.marginal += other.marginal;
    }

    pub fn scaled(&self, c: f64) -> LossTerms {
        LossTerms {
            unitary_real: self.unitary_real * c,
            unitary_imag: self.unitary_imag * c,
            marginal: self.marginal * c,
        }
    }
}

/// Loss terms and `∂L/∂Z` for one output matrix.
pub fn reconstruction_loss(z: &CMatrix, targets: &MarginalSet, variant: LossVariant) -> Result<(LossTerms, CMatrix)> {
    let d = z.dim();
    if d != 1 << targets.num_qubits() {
        return Err(CdaeError::Mismatch(format!(
            "output of side {d} against marginals of a {}-qubit register",
            targets.num_qubits()
        )));
    }
    let dd = (d * d) as f64;
    let dec = svd(z)?;
    let w = &dec.left;
    let v = &dec.right;
    let u = w.matmul(&v.adjoint());

    let mut terms = LossTerms::default();
    for i in 0..d {
        for j in 0..d {
            let e = u[(i, j)] - if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            terms.unitary_real += e.re * e.re;
            terms.unitary_imag += e.im * e.im;
        }
    }
    terms.unitary_real /= dd;
    terms.unitary_imag /= dd;

    // ∂L/∂U = 2(U − 𝟙)/d², pulled back through U = W V†:
    // H = W† G V, K = (H − H†) ⊘ (σ_i + σ_j), ∂L/∂Z = W K V†.
    let mut gu = u.clone();
    for i in 0..d {
        gu[(i, i)] -= Complex64::new(1.0, 0.0);
    }
    let gu = gu.scale(2.0 / dd);
    let h = w.adjoint().matmul(&gu).matmul(v);
    let s = &dec.singular_values;
    let k = CMatrix::from_fn(d, |i, j| (h[(i, j)] - h[(j, i)].conj()) / (s[i] + s[j]).max(POLAR_EPS));
    let mut grad = w.matmul(&k).matmul(&v.adjoint());

    if variant.has_marginal_term() {
        for m in targets.entries() {
            let zj = partial_trace(z, &m.label)?;
            let diff = &zj - &m.state;
            let dj = (diff.dim() * diff.dim()) as f64;
            terms.marginal += diff.as_slice().iter().map(|c| c.norm_sqr()).sum::<f64>() / dj;
            add_embedded(&mut grad, &diff, &m.label, 2.0 / dj)?;
        }
    }
    Ok((terms, grad))
}

/// Reads one `(2, d, d)` sample (real channel then imaginary channel).
pub fn matrix_from_channels<T: Real>(data: &[T], d: usize) -> CMatrix {
    assert_eq!(data.len(), 2 * d * d, "two-channel length");
    let (re, im) = data.split_at(d * d);
    CMatrix::from_fn(d, |i, j| Complex64::new(re[i * d + j].to_f64(), im[i * d + j].to_f64()))
}

/// Writes `scale · m` as two channels into `out`.
pub fn channels_from_matrix<T: Real>(m: &CMatrix, scale: f64, out: &mut [T]) {
    let d = m.dim();
    assert_eq!(out.len(), 2 * d * d, "two-channel length");
    let (re, im) = out.split_at_mut(d * d);
    for (k, c) in m.as_slice().iter().enumerate() {
        re[k] = T::of(c.re * scale);
        im[k] = T::of(c.im * scale);
    }
}
