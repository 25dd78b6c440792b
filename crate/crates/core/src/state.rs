//! Validated density matrices and random-state sampling.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::eigvalsh;
use crate::matrix::{qubits_for_dim, CMatrix};

/// Hermiticity tolerance for [`DensityMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance for [`DensityMatrix`].
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue for [`DensityMatrix`].
pub const PSD_TOL: f64 = 1e-10;

/// Hermitian, unit-trace, PSD matrix on `N` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
    num_qubits: usize,
}

impl DensityMatrix {
    /// Validates `mat` against the density-matrix invariants.
    pub fn new(mat: CMatrix) -> Result<Self> {
        let num_qubits = qubits_for_dim(mat.dim())?;
        if num_qubits == 0 {
            return Err(Error::InvalidArgument("a density matrix needs at least one qubit".into()));
        }
        let h = mat.hermiticity_residual();
        if h > HERMITIAN_TOL {
            return Err(Error::NotHermitian(h));
        }
        let t = mat.trace();
        if (t - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidTrace(t.re));
        }
        let min = eigvalsh(&mat)?[0];
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { mat, num_qubits })
    }

    /// `𝟙 / 2^N`.
    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let d = 1usize << num_qubits;
        Self { mat: CMatrix::identity(d).scale(1.0 / d as f64), num_qubits }
    }

    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        Self::new(CMatrix::outer(psi))
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        // ρ is Hermitian, so tr(ρ²) = Σ |ρ_ij|².
        self.mat.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Number of eigenvalues above `tol`.
    pub fn numerical_rank(&self, tol: f64) -> Result<usize> {
        Ok(eigvalsh(&self.mat)?.iter().filter(|&&l| l > tol).count())
    }
}

/// Haar-random pure state on `N` qubits: a normalized complex standard
/// Gaussian vector.
pub fn haar_pure_state<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Vec<Complex64>> {
    if num_qubits == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    let d = 1usize << num_qubits;
    let mut psi: Vec<Complex64> = (0..d)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut psi {
        *z /= norm;
    }
    Ok(psi)
}

/// Flat-Dirichlet probability vector of length `r`.
pub fn random_probabilities<R: Rng + ?Sized>(r: usize, rng: &mut R) -> Vec<f64> {
    let mut p: Vec<f64> = (0..r).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = p.iter().sum();
    for x in &mut p {
        *x /= s;
    }
    p
}

/// `Σ_{i=1}^r p_i |ψ_i⟩⟨ψ_i|` with a flat-Dirichlet `p` and Haar `ψ_i`.
pub fn random_density_matrix_with_rank<R: Rng + ?Sized>(
    num_qubits: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    if num_qubits == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    let d = 1usize << num_qubits;
    if rank == 0 || rank > d {
        return Err(Error::InvalidArgument(format!("rank {rank} out of range 1..={d}")));
    }
    let p = random_probabilities(rank, rng);
    let mut rho = CMatrix::zeros(d);
    for &pi in &p {
        let psi = haar_pure_state(num_qubits, rng)?;
        for i in 0..d {
            let a = psi[i] * pi;
            for j in 0..d {
                rho[(i, j)] += a * psi[j].conj();
            }
        }
    }
    let tr = rho.trace().re;
    DensityMatrix::new(rho.scale(1.0 / tr))
}

/// Random density matrix whose rank is drawn uniformly from `r_min..=2^N`.
/// Returns the state together with that rank.
pub fn random_density_matrix<R: Rng + ?Sized>(
    num_qubits: usize,
    r_min: usize,
    rng: &mut R,
) -> Result<(DensityMatrix, usize)> {
    if num_qubits == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    let d = 1usize << num_qubits;
    if r_min == 0 || r_min > d {
        return Err(Error::InvalidArgument(format!("r_min {r_min} out of range 1..={d}")));
    }
    let r = rng.random_range(r_min..=d);
    Ok((random_density_matrix_with_rank(num_qubits, r, rng)?, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_state_is_normalized_and_deterministic() {
        let a = haar_pure_state(3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = haar_pure_state(3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(haar_pure_state(0, &mut ChaCha8Rng::seed_from_u64(9)).is_err());
    }

    #[test]
    fn haar_bloch_vectors_average_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut mean = [0.0f64; 3];
        let n = 10_000;
        for _ in 0..n {
            let psi = haar_pure_state(1, &mut rng).unwrap();
            let (a, b) = (psi[0], psi[1]);
            let cross = a.conj() * b;
            mean[0] += 2.0 * cross.re;
            mean[1] += 2.0 * cross.im;
            mean[2] += a.norm_sqr() - b.norm_sqr();
        }
        let norm = mean.iter().map(|m| (m / n as f64).powi(2)).sum::<f64>().sqrt();
        assert!(norm <= 0.05, "mean Bloch vector norm {norm}");
    }

    #[test]
    fn rank_one_state_is_pure() {
        let rho = random_density_matrix_with_rank(3, 1, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn construction_invariants_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let (rho, r) = random_density_matrix(3, 1, &mut rng).unwrap();
            assert!((1..=8).contains(&r));
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
            assert!(eigvalsh(rho.matrix()).unwrap()[0] >= -1e-12);
        }
    }

    #[test]
    fn numerical_rank_bounded_by_generator_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = random_density_matrix_with_rank(3, 4, &mut rng).unwrap();
        assert!(rho.numerical_rank(1e-10).unwrap() <= 4);
    }

    #[test]
    fn rank_arguments_validated() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        assert!(random_density_matrix(2, 0, &mut rng).is_err());
        assert!(random_density_matrix(2, 5, &mut rng).is_err());
        assert!(random_density_matrix_with_rank(2, 5, &mut rng).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(matches!(DensityMatrix::new(CMatrix::from_diagonal(&[1.2, -0.2])), Err(Error::NotPsd(_))));
        assert!(matches!(DensityMatrix::new(CMatrix::from_diagonal(&[0.6, 0.6])), Err(Error::InvalidTrace(_))));
        assert!(DensityMatrix::new(CMatrix::identity(3).scale(1.0 / 3.0)).is_err());
        let mm = DensityMatrix::maximally_mixed(2);
        assert!(DensityMatrix::new(mm.matrix().clone()).is_ok());
    }
}
