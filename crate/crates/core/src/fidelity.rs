use crate::error::{Error, Result};
use crate::linalg::{sqrt_psd, svd};
use crate::matrix::CMatrix;

/// Uhlmann fidelity `F(a, b) = (tr √(√a b √a))²`.
///
/// Both inputs are Hermitized and clipped to PSD (negative eigenvalues set to
/// zero) before any square root is taken, so slightly unphysical marginals of
/// a network output can be compared against their targets.
///
/// Evaluated as `‖√a √b‖_1²` (sum of singular values); unlike taking the
/// square roots of the eigenvalues of `√a b √a`, this does not amplify
/// round-off in the null space of rank-deficient inputs.
pub fn fidelity(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let prod = sqrt_psd(a)?.matmul(&sqrt_psd(b)?);
    let trace_norm: f64 = svd(&prod)?.singular_values.iter().sum();
    Ok(trace_norm * trace_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{haar_pure_state, random_density_matrix_with_rank};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Closed form for 2×2 states: `tr(ab) + 2√(det a · det b)`.
    fn fidelity_2x2(a: &CMatrix, b: &CMatrix) -> f64 {
        let det = |m: &CMatrix| (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
        a.matmul(b).trace().re + 2.0 * (det(a) * det(b)).max(0.0).sqrt()
    }

    #[test]
    fn self_fidelity_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for r in 1..=4 {
            let rho = random_density_matrix_with_rank(2, r, &mut rng).unwrap();
            let f = fidelity(rho.matrix(), rho.matrix()).unwrap();
            assert!((f - 1.0).abs() < 1e-9, "rank {r}: {f}");
        }
    }

    #[test]
    fn orthogonal_pure_states() {
        let a = CMatrix::outer(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let b = CMatrix::outer(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!(fidelity(&a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn matches_closed_form_for_qubits() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let a = random_density_matrix_with_rank(1, 2, &mut rng).unwrap();
            let b = random_density_matrix_with_rank(1, 2, &mut rng).unwrap();
            let f = fidelity(a.matrix(), b.matrix()).unwrap();
            assert!((f - fidelity_2x2(a.matrix(), b.matrix())).abs() < 1e-10);
        }
    }

    #[test]
    fn pure_state_fidelity_is_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let psi = haar_pure_state(2, &mut rng).unwrap();
        let phi = haar_pure_state(2, &mut rng).unwrap();
        let overlap: Complex64 = psi.iter().zip(&phi).map(|(a, b)| a.conj() * b).sum();
        let f = fidelity(&CMatrix::outer(&psi), &CMatrix::outer(&phi)).unwrap();
        assert!((f - overlap.norm_sqr()).abs() < 1e-9);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        assert!(fidelity(&CMatrix::identity(2), &CMatrix::identity(4)).is_err());
    }
}
