//! Eigendecomposition, SVD and the matrix maps built on them.
//!
//! Hermitian eigenproblems go through `nalgebra`. The SVD is a one-sided
//! (Hestenes) Jacobi iteration: it is accurate for rank-deficient inputs,
//! which the polar factor of a network output routinely is.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;

/// Relative convergence tolerance for the eigen and singular value solvers.
pub const DECOMP_TOL: f64 = f64::EPSILON;
const JACOBI_TOL: f64 = 1e-15;
const MAX_JACOBI_SWEEPS: usize = 100;
const MAX_SWEEPS: usize = 10_000;

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: CMatrix,
}

impl Eigh {
    /// Reassembles `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        CMatrix::from_fn(n, |i, j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                if fv[k] != 0.0 {
                    acc += v[(i, k)] * v[(j, k)].conj() * fv[k];
                }
            }
            acc
        })
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian matrix. Only the lower triangle is read,
/// so callers should hermitize first when the input may be slightly off.
pub fn eigh(m: &CMatrix) -> Result<Eigh> {
    let dec = SymmetricEigen::try_new(m.to_nalgebra(), DECOMP_TOL, MAX_SWEEPS)
        .ok_or(Error::NoConvergence("Hermitian eigensolver"))?;
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
    let values = order.iter().map(|&k| dec.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, |i, j| dec.eigenvectors[(i, order[j])]);
    Ok(Eigh { values, vectors })
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &CMatrix) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = SymmetricEigen::try_new(m.to_nalgebra(), DECOMP_TOL, MAX_SWEEPS)
        .ok_or(Error::NoConvergence("Hermitian eigensolver"))?
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Thin SVD `Z = W Σ V†` of a square matrix.
#[derive(Clone, Debug)]
pub struct Svd {
    pub left: CMatrix,
    pub singular_values: Vec<f64>,
    /// `V`, not `V†`.
    pub right: CMatrix,
}

/// SVD by one-sided Jacobi rotations, singular values descending.
pub fn svd(z: &CMatrix) -> Result<Svd> {
    let n = z.dim();
    let zero = Complex64::new(0.0, 0.0);
    // Work column-wise: cols[j] is column j of Z, rotated towards W Σ.
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| (0..n).map(|i| z[(i, j)]).collect()).collect();
    let mut v: Vec<Vec<Complex64>> =
        (0..n).map(|j| (0..n).map(|i| if i == j { Complex64::new(1.0, 0.0) } else { zero }).collect()).collect();

    let mut converged = n < 2;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|x| x.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|x| x.norm_sqr()).sum();
                let gamma: Complex64 = cols[p].iter().zip(&cols[q]).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ph = phase.conj();
                rotate(&mut cols, p, q, c, s, ph);
                rotate(&mut v, p, q, c, s, ph);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("singular value decomposition"));
    }

    let mut sigma: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    sigma = order.iter().map(|&k| sigma[k]).collect();

    let mut w: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for (rank, &k) in order.iter().enumerate() {
        let s = sigma[rank];
        if s > f64::MIN_POSITIVE * 1e4 {
            w.push(cols[k].iter().map(|x| x / s).collect());
        } else {
            w.push(complete_orthonormal(&w, n));
        }
    }
    let left = CMatrix::from_fn(n, |i, j| w[j][i]);
    let right = CMatrix::from_fn(n, |i, j| v[order[j]][i]);
    Ok(Svd { left, singular_values: sigma, right })
}

/// `[x_p, x_q] ← [c x_p − s ph x_q, s x_p + c ph x_q]`.
fn rotate(cols: &mut [Vec<Complex64>], p: usize, q: usize, c: f64, s: f64, ph: Complex64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let a = *xp;
        let b = *xq * ph;
        *xp = a * c - b * s;
        *xq = a * s + b * c;
    }
}

/// A unit vector orthogonal to every vector in `basis`.
fn complete_orthonormal(basis: &[Vec<Complex64>], n: usize) -> Vec<Complex64> {
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for e in 0..n {
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        x[e] = Complex64::new(1.0, 0.0);
        // Two Gram-Schmidt passes for numerical orthogonality.
        for _ in 0..2 {
            for b in basis {
                let proj: Complex64 = b.iter().zip(&x).map(|(bi, xi)| bi.conj() * xi).sum();
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= proj * bi;
                }
            }
        }
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
            best = Some((norm, x));
        }
    }
    let (norm, x) = best.expect("n >= 1");
    x.into_iter().map(|v| v / norm).collect()
}

/// Polar decomposition `Z = U P` with `U` unitary and `P` Hermitian PSD.
#[derive(Clone, Debug)]
pub struct Polar {
    pub unitary: CMatrix,
    pub positive: CMatrix,
}

/// Polar factors from the SVD: `U = W V†`, `P = V Σ V†`.
pub fn polar_decompose(z: &CMatrix) -> Result<Polar> {
    let s = svd(z)?;
    Ok(polar_from_svd(&s))
}

pub fn polar_from_svd(s: &Svd) -> Polar {
    let v_adj = s.right.adjoint();
    let unitary = s.left.matmul(&v_adj);
    let n = s.singular_values.len();
    let v = &s.right;
    let positive = CMatrix::from_fn(n, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            acc += v[(i, k)] * v[(j, k)].conj() * s.singular_values[k];
        }
        acc
    });
    Polar { unitary, positive }
}

/// `(Z + Z†)/2`.
pub fn hermitize(z: &CMatrix) -> CMatrix {
    let n = z.dim();
    CMatrix::from_fn(n, |i, j| (z[(i, j)] + z[(j, i)].conj()) * 0.5)
}

/// Minimum |tr Z| accepted by [`renormalize`].
pub const MIN_TRACE: f64 = 1e-12;

/// `Z / tr(Z)`.
pub fn renormalize(z: &CMatrix) -> Result<CMatrix> {
    let t = z.trace();
    if t.norm() <= MIN_TRACE {
        return Err(Error::DegenerateTrace(t.norm()));
    }
    Ok(z.scale_complex(t.inv()))
}

/// Frobenius-nearest PSD matrix: eigenvalues clipped at zero.
pub fn psd_project(z: &CMatrix) -> Result<CMatrix> {
    let e = eigh(&hermitize(z))?;
    Ok(e.map(|l| l.max(0.0)))
}

/// Principal square root of a Hermitian matrix after clipping to PSD.
pub fn sqrt_psd(z: &CMatrix) -> Result<CMatrix> {
    let e = eigh(&hermitize(z))?;
    Ok(e.map(|l| l.max(0.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
    }

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMatrix {
        hermitize(&random_matrix(n, rng))
    }

    #[test]
    fn eigh_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_hermitian(8, &mut rng);
        let e = eigh(&h).unwrap();
        assert!(e.map(|l| l).max_abs_diff(&h) < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn polar_of_psd_is_identity_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(6, &mut rng);
        let psd = &a.adjoint().matmul(&a) + &CMatrix::identity(6).scale(0.1);
        let p = polar_decompose(&psd).unwrap();
        assert!(p.unitary.max_abs_diff(&CMatrix::identity(6)) < 1e-9);
        assert!(p.positive.max_abs_diff(&psd) < 1e-9);
    }

    #[test]
    fn polar_of_scaled_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(5, &mut rng);
        let u0 = polar_decompose(&a).unwrap().unitary;
        let z = u0.scale(2.5);
        let p = polar_decompose(&z).unwrap();
        assert!(p.unitary.max_abs_diff(&u0) < 1e-9);
        assert!(p.positive.max_abs_diff(&CMatrix::identity(5).scale(2.5)) < 1e-9);
    }

    #[test]
    fn polar_reconstructs_random_8x8() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = random_matrix(8, &mut rng);
        let p = polar_decompose(&z).unwrap();
        assert!(p.unitary.matmul(&p.positive).max_abs_diff(&z) < 1e-9);
        let uu = p.unitary.adjoint().matmul(&p.unitary);
        assert!(uu.max_abs_diff(&CMatrix::identity(8)) < 1e-9);
        assert!(p.positive.hermiticity_residual() < 1e-9);
        assert!(eigvalsh(&p.positive).unwrap()[0] > -1e-9);
    }

    #[test]
    fn svd_handles_rank_deficient_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [1usize, 2, 4, 8, 16] {
            for rank in [0usize, 1, 2, n / 2, n] {
                let a = random_matrix(n, &mut rng);
                let mut low = CMatrix::zeros(n);
                for _ in 0..rank.min(n) {
                    let psi: Vec<Complex64> =
                        (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
                    low += &CMatrix::outer(&psi);
                }
                let z = a.matmul(&low);
                let s = svd(&z).unwrap();
                let recon = s.left.matmul(&CMatrix::from_diagonal(&s.singular_values)).matmul(&s.right.adjoint());
                assert!(recon.max_abs_diff(&z) < 1e-12 * (1.0 + z.frobenius_norm()), "n={n} rank={rank}");
                let id = CMatrix::identity(n);
                assert!(s.left.adjoint().matmul(&s.left).max_abs_diff(&id) < 1e-12);
                assert!(s.right.adjoint().matmul(&s.right).max_abs_diff(&id) < 1e-12);
                assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn hermitize_is_identity_on_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(4, &mut rng);
        assert_eq!(hermitize(&h), h);
    }

    #[test]
    fn hermitized_matrix_has_real_spectrum() {
        // Independent check through the general (non-Hermitian) Schur solver.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = hermitize(&random_matrix(8, &mut rng));
        let schur = nalgebra::Schur::new(h.to_nalgebra());
        let (_, t) = schur.unpack();
        for i in 0..8 {
            assert!(t[(i, i)].im.abs() < 1e-12, "eigenvalue {} not real", t[(i, i)]);
        }
    }

    #[test]
    fn renormalize_halves_trace_two() {
        let z = CMatrix::identity(2);
        let r = renormalize(&z).unwrap();
        assert_eq!(r, CMatrix::identity(2).scale(0.5));
        assert!((r.trace() - Complex64::new(1.0, 0.0)).norm() <= 1e-14);
    }

    #[test]
    fn renormalize_rejects_zero_trace() {
        let z = CMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(renormalize(&z), Err(Error::DegenerateTrace(_))));
    }

    #[test]
    fn psd_project_clips_diagonal() {
        let z = CMatrix::from_diagonal(&[0.8, 0.4, -0.2]);
        let p = psd_project(&z).unwrap();
        assert!(p.max_abs_diff(&CMatrix::from_diagonal(&[0.8, 0.4, 0.0])) < 1e-12);
    }

    #[test]
    fn psd_project_keeps_psd_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(6, &mut rng);
        let psd = a.adjoint().matmul(&a);
        assert!(psd_project(&psd).unwrap().max_abs_diff(&psd) < 1e-12);
    }

    #[test]
    fn psd_project_beats_random_psd_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_hermitian(4, &mut rng);
        let p = psd_project(&h).unwrap();
        let best = h.frobenius_distance(&p);
        for _ in 0..1000 {
            let g = random_matrix(4, &mut rng).scale(0.05);
            // PSD perturbation of the projection, then re-projected onto the cone.
            let cand =
                psd_project(&(&p + &g.adjoint().matmul(&g).scale(if rng.random() { 1.0 } else { -1.0 }))).unwrap();
            assert!(h.frobenius_distance(&cand) >= best - 1e-12);
        }
    }
}
