use qmf_core::{
    all_k_marginals, eigvalsh, haar_pure_state, mio_apply, mio_compose, negative_eigenvalue_profile, partial_trace,
    random_density_matrix, random_density_matrix_with_rank, CMatrix, Complex64, ConsistencyMode, DensityMatrix,
    Marginal, MarginalSet, SubsystemLabel,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian_trace_one(n: usize, rng: &mut impl Rng) -> CMatrix {
    let d = 1 << n;
    let m = CMatrix::from_fn(d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let h = CMatrix::from_fn(d, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mut h = h;
    let shift = (Complex64::new(1.0, 0.0) - h.trace()) / d as f64;
    for i in 0..d {
        h[(i, i)] += shift;
    }
    h
}

#[test]
fn mio_apply_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    for _ in 0..200 {
        let n = rng.random_range(2..=4);
        let rho = random_density_matrix_with_rank(n, 1 << n, &mut rng).unwrap();
        let mask = rng.random_range(1..(1u32 << n));
        let label = SubsystemLabel::new(mask, n).unwrap();
        let target = Marginal { state: partial_trace(rho.matrix(), &label).unwrap(), label };
        let seed = random_hermitian_trace_one(n, &mut rng);
        let once = mio_apply(&seed, &target).unwrap();
        let twice = mio_apply(&once, &target).unwrap();
        assert!(once.max_abs_diff(&twice) < 1e-12);
    }
}

#[test]
fn mio_apply_preserves_hermiticity_and_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    for _ in 0..1000 {
        let n = rng.random_range(2..=4);
        let seed = random_hermitian_trace_one(n, &mut rng);
        let mask = rng.random_range(1..(1u32 << n));
        let label = SubsystemLabel::new(mask, n).unwrap();
        let sigma = random_density_matrix_with_rank(label.len(), 1 << label.len(), &mut rng).unwrap();
        let out = mio_apply(&seed, &Marginal { label: label.clone(), state: sigma.matrix().clone() }).unwrap();
        assert!(out.hermiticity_residual() < 1e-12);
        assert!((out.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(partial_trace(&out, &label).unwrap().max_abs_diff(sigma.matrix()) < 1e-10);
    }
}

#[test]
fn random_seed_with_consistent_pair_reaches_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(302);
    let label = SubsystemLabel::from_qubits(&[1, 2], 3).unwrap();
    for _ in 0..100 {
        let rho = random_density_matrix_with_rank(3, 8, &mut rng).unwrap();
        let sigma = partial_trace(rho.matrix(), &label).unwrap();
        let seed = random_hermitian_trace_one(3, &mut rng);
        let out = mio_apply(&seed, &Marginal { label: label.clone(), state: sigma.clone() }).unwrap();
        assert!(partial_trace(&out, &label).unwrap().max_abs_diff(&sigma) < 1e-10);
    }
}

/// Every target is reproduced for any imposition order.
#[test]
fn composition_is_exact_under_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for n in 3..=5 {
        for k in 1..n {
            for _ in 0..10 {
                let (rho, _) = random_density_matrix(n, 1, &mut rng).unwrap();
                let targets = all_k_marginals(&rho, k).unwrap();
                let mut order: Vec<usize> = (0..targets.len()).collect();
                order.shuffle(&mut rng);
                let shuffled = targets.permuted(&order).unwrap();
                let seed = DensityMatrix::maximally_mixed(n);
                let out = mio_compose(seed.matrix(), &shuffled, ConsistencyMode::default()).unwrap();
                assert!(out.mat.hermiticity_residual() < 1e-12);
                assert!((out.mat.trace().re - 1.0).abs() < 1e-12);
                for t in targets.entries() {
                    let got = partial_trace(&out.mat, &t.label).unwrap();
                    assert!(got.frobenius_distance(&t.state) < 1e-9, "N={n} k={k} label {}", t.label);
                }
                // Re-extracting every k-marginal gives back the targets.
                let dm = CMatrix::from_fn(1 << n, |i, j| out.mat[(i, j)]);
                for (t, label) in targets.entries().iter().zip(targets.labels()) {
                    assert!(partial_trace(&dm, label).unwrap().max_abs_diff(&t.state) < 1e-9);
                }
            }
        }
    }
}

#[test]
fn pure_seed_usually_leaves_negative_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(304);
    let trials = 1000;
    let mut negative = 0;
    for _ in 0..trials {
        let (rho, _) = random_density_matrix(3, 1, &mut rng).unwrap();
        let targets = all_k_marginals(&rho, 2).unwrap();
        let psi = haar_pure_state(3, &mut rng).unwrap();
        let seed = CMatrix::outer(&psi);
        let out = mio_compose(&seed, &targets, ConsistencyMode::default()).unwrap();
        for t in targets.entries() {
            assert!(partial_trace(&out.mat, &t.label).unwrap().frobenius_distance(&t.state) < 1e-9);
        }
        if !out.negative_eigs.is_psd() {
            negative += 1;
        }
    }
    assert!(negative * 2 > trials, "only {negative}/{trials} outputs had negative eigenvalues");
}

#[test]
fn four_qubit_three_body_marginals_match_direct_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(305);
    let rho = random_density_matrix_with_rank(4, 16, &mut rng).unwrap();
    let set = all_k_marginals(&rho, 3).unwrap();
    let expected = [[1, 2, 3], [1, 2, 4], [1, 3, 4], [2, 3, 4]];
    assert_eq!(set.len(), 4);
    for (m, q) in set.entries().iter().zip(expected) {
        assert_eq!(m.label.qubits(), q.to_vec());
        let direct = partial_trace(rho.matrix(), &SubsystemLabel::from_qubits(&q, 4).unwrap()).unwrap();
        assert_eq!(m.state, direct);
    }
}

#[test]
fn negative_profile_matches_eigensolver_on_mio_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(306);
    for _ in 0..50 {
        let (rho, _) = random_density_matrix(4, 1, &mut rng).unwrap();
        let targets = all_k_marginals(&rho, 2).unwrap();
        let out =
            mio_compose(DensityMatrix::maximally_mixed(4).matrix(), &targets, ConsistencyMode::default()).unwrap();
        let ev = eigvalsh(&out.mat).unwrap();
        let count = ev.iter().filter(|&&l| l < -1e-10).count();
        let profile = negative_eigenvalue_profile(&out.mat).unwrap();
        assert_eq!(profile.count, count);
        assert_eq!(profile, out.negative_eigs);
        assert!((profile.proportion - count as f64 / 16.0).abs() < 1e-15);
        assert!((profile.min_eigenvalue - ev[0]).abs() < 1e-15);
    }
}

#[test]
fn lenient_mode_imposes_inconsistent_targets() {
    let mut rng = ChaCha8Rng::seed_from_u64(307);
    let a = random_density_matrix_with_rank(2, 4, &mut rng).unwrap();
    let b = random_density_matrix_with_rank(2, 4, &mut rng).unwrap();
    let set = MarginalSet::new(
        3,
        vec![
            Marginal { label: SubsystemLabel::from_qubits(&[1, 2], 3).unwrap(), state: a.matrix().clone() },
            Marginal { label: SubsystemLabel::from_qubits(&[2, 3], 3).unwrap(), state: b.matrix().clone() },
        ],
    )
    .unwrap();
    let seed = DensityMatrix::maximally_mixed(3);
    assert!(mio_compose(seed.matrix(), &set, ConsistencyMode::default()).is_err());
    let out = mio_compose(seed.matrix(), &set, ConsistencyMode::Lenient { tol: 1e-8 }).unwrap();
    // The last imposed target always holds.
    let last = SubsystemLabel::from_qubits(&[2, 3], 3).unwrap();
    assert!(partial_trace(&out.mat, &last).unwrap().max_abs_diff(b.matrix()) < 1e-12);
}
