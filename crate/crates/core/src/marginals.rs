//! Marginal sets, the marginal imposition operator (MIO) and its composition.
//!
//! For a target `σ_𝒥` the MIO maps
//!
//! ```text
//! Q_𝒥(ρ̃) = ρ̃ − tr_{𝒥^c}[ρ̃] ⊗ 𝟙/d_c + σ_𝒥 ⊗ 𝟙/d_c,   d_c = 2^{N−|𝒥|}
//! ```
//!
//! which is the Frobenius-orthogonal projection of `ρ̃` onto the affine set of
//! matrices whose `𝒥` marginal is `σ_𝒥`. It preserves Hermiticity and trace but
//! not positivity.

use std::fmt;

use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::eigvalsh;
use crate::matrix::{qubits_for_dim, CMatrix};
use crate::state::DensityMatrix;
use crate::subsystem::{add_embedded, k_subsets, partial_trace, SubsystemLabel};

/// Tolerance used when validating marginal states.
pub const MARGINAL_TOL: f64 = 1e-10;
/// Eigenvalues below `-NEGATIVE_EIG_TOL` count as negative.
pub const NEGATIVE_EIG_TOL: f64 = 1e-10;
/// Default tolerance for overlap consistency in strict mode.
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-8;

/// One prescribed reduced state `σ_𝒥`.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginal {
    pub label: SubsystemLabel,
    pub state: CMatrix,
}

/// Ordered list of marginals on a common `N`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalSet {
    num_qubits: usize,
    entries: Vec<Marginal>,
}

impl MarginalSet {
    /// Validates each entry (dimension, Hermiticity, unit trace, PSD) at
    /// [`MARGINAL_TOL`].
    pub fn new(num_qubits: usize, entries: Vec<Marginal>) -> Result<Self> {
        Self::with_tolerance(num_qubits, entries, MARGINAL_TOL)
    }

    /// As [`MarginalSet::new`] with a caller-chosen tolerance; used for
    /// marginals read back from single-precision files.
    pub fn with_tolerance(num_qubits: usize, entries: Vec<Marginal>, tol: f64) -> Result<Self> {
        for m in &entries {
            if m.label.num_qubits() != num_qubits {
                return Err(Error::InvalidSubsystem(format!(
                    "label {} belongs to a {}-qubit register, expected {num_qubits}",
                    m.label,
                    m.label.num_qubits()
                )));
            }
            if m.state.dim() != m.label.dim() {
                return Err(Error::DimensionMismatch { expected: m.label.dim(), found: m.state.dim() });
            }
            let h = m.state.hermiticity_residual();
            if h > tol {
                return Err(Error::NotHermitian(h));
            }
            let t = m.state.trace();
            if (t - Complex64::new(1.0, 0.0)).norm() > tol {
                return Err(Error::InvalidTrace(t.re));
            }
            let min = eigvalsh(&m.state)?[0];
            if min < -tol {
                return Err(Error::NotPsd(min));
            }
        }
        Ok(Self { num_qubits, entries })
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[inline]
    pub fn entries(&self) -> &[Marginal] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &SubsystemLabel> {
        self.entries.iter().map(|m| &m.label)
    }

    /// Same marginals in a different order; `order` must be a permutation.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.entries.len()];
        if order.len() != self.entries.len() {
            return Err(Error::InvalidArgument("permutation length mismatch".into()));
        }
        for &i in order {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
        }
        Ok(Self { num_qubits: self.num_qubits, entries: order.iter().map(|&i| self.entries[i].clone()).collect() })
    }
}

/// Marginals of `mat` on each of `labels`.
pub fn marginals_of<'a>(mat: &CMatrix, labels: impl IntoIterator<Item = &'a SubsystemLabel>) -> Result<Vec<CMatrix>> {
    labels.into_iter().map(|l| partial_trace(mat, l)).collect()
}

/// All `C(N, k)` marginals of `rho` on `k`-qubit subsets, lexicographic order.
pub fn all_k_marginals(rho: &DensityMatrix, k: usize) -> Result<MarginalSet> {
    let n = rho.num_qubits();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "marginal size k = {k} must satisfy 1 <= k <= N - 1 = {}",
            n.saturating_sub(1)
        )));
    }
    let entries = k_subsets(n, k)?
        .into_iter()
        .map(|label| {
            let state = partial_trace(rho.matrix(), &label)?;
            Ok(Marginal { label, state })
        })
        .collect::<Result<Vec<_>>>()?;
    MarginalSet::new(n, entries)
}

/// One application of the marginal imposition operator.
pub fn mio_apply(current: &CMatrix, target: &Marginal) -> Result<CMatrix> {
    let label = &target.label;
    if current.dim() != label.full_dim() {
        return Err(Error::DimensionMismatch { expected: label.full_dim(), found: current.dim() });
    }
    if target.state.dim() != label.dim() {
        return Err(Error::DimensionMismatch { expected: label.dim(), found: target.state.dim() });
    }
    let own = partial_trace(current, label)?;
    let delta = &target.state - &own;
    let mut out = current.clone();
    add_embedded(&mut out, &delta, label, 1.0 / label.complement_dim() as f64)?;
    Ok(out)
}

/// How [`mio_compose`] treats targets that disagree on their overlaps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConsistencyMode {
    /// Reject inconsistent targets.
    Strict { tol: f64 },
    /// Log a warning and impose anyway.
    Lenient { tol: f64 },
}

impl Default for ConsistencyMode {
    fn default() -> Self {
        Self::Strict { tol: DEFAULT_CONSISTENCY_TOL }
    }
}

/// Summary of negative eigenvalues of a Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct NegativeEigenProfile {
    pub count: usize,
    /// `count / dim`.
    pub proportion: f64,
    pub min_eigenvalue: f64,
    /// `|λ|` for each eigenvalue below the tolerance, largest first.
    pub magnitudes: Vec<f64>,
}

impl NegativeEigenProfile {
    pub fn is_psd(&self) -> bool {
        self.count == 0
    }

    pub fn mean_magnitude(&self) -> Option<f64> {
        if self.magnitudes.is_empty() {
            None
        } else {
            Some(self.magnitudes.iter().sum::<f64>() / self.magnitudes.len() as f64)
        }
    }
}

/// Counts eigenvalues below `-NEGATIVE_EIG_TOL`.
pub fn negative_eigenvalue_profile(x: &CMatrix) -> Result<NegativeEigenProfile> {
    let eig = eigvalsh(x)?;
    let magnitudes: Vec<f64> = eig.iter().take_while(|&&l| l < -NEGATIVE_EIG_TOL).map(|l| -l).collect();
    Ok(NegativeEigenProfile {
        count: magnitudes.len(),
        proportion: magnitudes.len() as f64 / x.dim() as f64,
        min_eigenvalue: eig.first().copied().unwrap_or(0.0),
        magnitudes,
    })
}

/// Output of an MIO composition: Hermitian, unit trace, possibly not PSD.
#[derive(Clone, Debug)]
pub struct CorruptedState {
    pub mat: CMatrix,
    pub negative_eigs: NegativeEigenProfile,
}

/// Result of [`check_overlap_consistency`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub consistent: bool,
    /// Largest Frobenius deviation over all overlapping pairs.
    pub worst_deviation: f64,
    pub worst_pair: Option<(SubsystemLabel, SubsystemLabel)>,
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.worst_pair {
            Some((a, b)) => write!(
                f,
                "consistent={} worst deviation {:e} between {a} and {b}",
                self.consistent, self.worst_deviation
            ),
            None => write!(f, "consistent={} (no overlapping pairs)", self.consistent),
        }
    }
}

/// Compares every overlapping pair of marginals on their common qubits.
pub fn check_overlap_consistency(targets: &MarginalSet, tol: f64) -> Result<ConsistencyReport> {
    let e = targets.entries();
    let mut worst = 0.0f64;
    let mut worst_pair = None;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let Some(common) = e[i].label.intersection(&e[j].label) else {
                continue;
            };
            let a = partial_trace(&e[i].state, &common.relative_to(&e[i].label)?)?;
            let b = partial_trace(&e[j].state, &common.relative_to(&e[j].label)?)?;
            let dev = a.frobenius_distance(&b);
            if worst_pair.is_none() || dev > worst {
                worst = dev;
                worst_pair = Some((e[i].label.clone(), e[j].label.clone()));
            }
        }
    }
    Ok(ConsistencyReport { consistent: worst <= tol, worst_deviation: worst, worst_pair })
}

/// Imposes every target on `seed` in list order: `Q_{𝒥_M} ∘ … ∘ Q_{𝒥_1}(seed)`.
pub fn mio_compose(seed: &CMatrix, targets: &MarginalSet, mode: ConsistencyMode) -> Result<CorruptedState> {
    let n = qubits_for_dim(seed.dim())?;
    if n != targets.num_qubits() {
        return Err(Error::DimensionMismatch { expected: 1 << targets.num_qubits(), found: seed.dim() });
    }
    let h = seed.hermiticity_residual();
    if h > MARGINAL_TOL {
        return Err(Error::NotHermitian(h));
    }
    let (ConsistencyMode::Strict { tol } | ConsistencyMode::Lenient { tol }) = mode;
    let report = check_overlap_consistency(targets, tol)?;
    if !report.consistent {
        let (a, b) = report.worst_pair.clone().expect("inconsistency implies a pair");
        match mode {
            ConsistencyMode::Strict { .. } => {
                return Err(Error::InconsistentMarginals {
                    first: a.to_string(),
                    second: b.to_string(),
                    deviation: report.worst_deviation,
                })
            }
            ConsistencyMode::Lenient { .. } => warn!("imposing inconsistent marginals: {report}"),
        }
    }
    let mut cur = seed.clone();
    for t in targets.entries() {
        cur = mio_apply(&cur, t)?;
    }
    let negative_eigs = negative_eigenvalue_profile(&cur)?;
    Ok(CorruptedState { mat: cur, negative_eigs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::random_density_matrix_with_rank;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn k_marginal_count_and_order() {
        let rho = DensityMatrix::maximally_mixed(3);
        let m = all_k_marginals(&rho, 2).unwrap();
        let labels: Vec<Vec<usize>> = m.labels().map(|l| l.qubits()).collect();
        assert_eq!(labels, vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        for e in m.entries() {
            assert!(e.state.max_abs_diff(&CMatrix::identity(4).scale(0.25)) < 1e-15);
        }
        assert!(all_k_marginals(&rho, 0).is_err());
        assert!(all_k_marginals(&rho, 3).is_err());
    }

    #[test]
    fn mio_with_own_marginal_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let rho = random_density_matrix_with_rank(3, 3, &mut rng).unwrap();
        let label = SubsystemLabel::from_qubits(&[1, 3], 3).unwrap();
        let own = partial_trace(rho.matrix(), &label).unwrap();
        let out = mio_apply(rho.matrix(), &Marginal { label, state: own }).unwrap();
        assert!(out.max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn mio_on_maximally_mixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let sigma = random_density_matrix_with_rank(2, 4, &mut rng).unwrap();
        let label = SubsystemLabel::from_qubits(&[1, 2], 3).unwrap();
        let seed = DensityMatrix::maximally_mixed(3);
        let out = mio_apply(seed.matrix(), &Marginal { label, state: sigma.matrix().clone() }).unwrap();
        let expected = sigma.matrix().kron(&CMatrix::identity(2).scale(0.5));
        assert!(out.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn mio_rejects_dimension_mismatch() {
        let label = SubsystemLabel::from_qubits(&[1], 2).unwrap();
        let t = Marginal { label, state: CMatrix::identity(2).scale(0.5) };
        assert!(mio_apply(&CMatrix::identity(8), &t).is_err());
    }

    #[test]
    fn composing_own_marginals_returns_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let rho = random_density_matrix_with_rank(3, 5, &mut rng).unwrap();
        let targets = all_k_marginals(&rho, 2).unwrap();
        let out = mio_compose(rho.matrix(), &targets, ConsistencyMode::default()).unwrap();
        assert!(out.mat.max_abs_diff(rho.matrix()) < 1e-14);
    }

    #[test]
    fn disjoint_marginals_are_vacuously_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let a = random_density_matrix_with_rank(1, 2, &mut rng).unwrap();
        let b = random_density_matrix_with_rank(1, 2, &mut rng).unwrap();
        let set = MarginalSet::new(
            2,
            vec![
                Marginal { label: SubsystemLabel::from_qubits(&[1], 2).unwrap(), state: a.into_matrix() },
                Marginal { label: SubsystemLabel::from_qubits(&[2], 2).unwrap(), state: b.into_matrix() },
            ],
        )
        .unwrap();
        let r = check_overlap_consistency(&set, 1e-12).unwrap();
        assert!(r.consistent);
        assert!(r.worst_pair.is_none());
    }

    #[test]
    fn perturbed_overlap_is_flagged_in_strict_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let rho = random_density_matrix_with_rank(3, 8, &mut rng).unwrap();
        let good = all_k_marginals(&rho, 2).unwrap();
        let r = check_overlap_consistency(&good, 1e-12).unwrap();
        assert!(r.consistent && r.worst_deviation < 1e-12);

        // Shift population between |00⟩ and |10⟩ of σ_{13}: this changes the
        // qubit-1 marginal (shared with σ_{12}) but keeps trace and positivity.
        let mut entries = good.entries().to_vec();
        entries[1].state[(0, 0)] += 1e-3;
        entries[1].state[(2, 2)] -= 1e-3;
        let bad = MarginalSet::new(3, entries).unwrap();
        let r = check_overlap_consistency(&bad, 1e-6).unwrap();
        assert!(!r.consistent);
        let (a, b) = r.worst_pair.clone().unwrap();
        assert!(a.qubits() == vec![1, 3] || b.qubits() == vec![1, 3]);

        let seed = DensityMatrix::maximally_mixed(3);
        let err = mio_compose(seed.matrix(), &bad, ConsistencyMode::Strict { tol: 1e-6 }).unwrap_err();
        assert!(matches!(err, Error::InconsistentMarginals { .. }));
        assert!(mio_compose(seed.matrix(), &bad, ConsistencyMode::Lenient { tol: 1e-6 }).is_ok());
    }

    #[test]
    fn negative_profile_of_diagonal() {
        let p = negative_eigenvalue_profile(&CMatrix::from_diagonal(&[0.6, 0.6, -0.1, -0.1])).unwrap();
        assert_eq!(p.count, 2);
        assert!((p.proportion - 0.5).abs() < 1e-15);
        assert!((p.min_eigenvalue + 0.1).abs() < 1e-12);
        assert!((p.mean_magnitude().unwrap() - 0.1).abs() < 1e-12);

        let psd = negative_eigenvalue_profile(DensityMatrix::maximally_mixed(2).matrix()).unwrap();
        assert!(psd.is_psd());
        assert_eq!(psd.proportion, 0.0);
    }

    #[test]
    fn permutation_must_be_valid() {
        let m = all_k_marginals(&DensityMatrix::maximally_mixed(3), 2).unwrap();
        assert!(m.permuted(&[2, 0, 1]).is_ok());
        assert!(m.permuted(&[0, 0, 1]).is_err());
        assert!(m.permuted(&[0, 1]).is_err());
    }
}
