use nalgebra::{dmatrix, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use singvec::{
    full_basis, licq_check, orthonormalize, refine_smallest_triplet, select_space, singular_values, solve, svd,
    symmetric_basis, toeplitz_basis, Algorithm, Basis32, Instance, Instance32, SingularSpace, SolverConfig,
    StopReason, Strategy,
};

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn sigma_min(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m).unwrap();
    s[s.len() - 1]
}

fn random_toeplitz(n: usize, rng: &mut ChaCha8Rng) -> Instance {
    let d: Vec<f64> = (0..2 * n - 1).map(|_| StandardNormal.sample(rng)).collect();
    Instance::new(DMatrix::from_fn(n, n, |i, j| d[n - 1 + j - i]), toeplitz_basis(n)).unwrap()
}

fn tikhonov() -> SolverConfig {
    SolverConfig::default()
}

fn lagrangian() -> SolverConfig {
    SolverConfig::default().with_algorithm(Algorithm::AugmentedLagrangian)
}

#[test]
fn strategies_pick_the_documented_space() {
    let c = gaussian(4, 4, &mut ChaCha8Rng::seed_from_u64(1));
    assert!(matches!(select_space(&c, Strategy::RightKernel, 0).unwrap(), SingularSpace::RightKernel { .. }));
    assert!(matches!(select_space(&c, Strategy::LeftKernel, 1).unwrap(), SingularSpace::LeftKernel { .. }));
    assert!(matches!(select_space(&c, Strategy::AlternateKernels, 0).unwrap(), SingularSpace::RightKernel { .. }));
    assert!(matches!(select_space(&c, Strategy::AlternateKernels, 1).unwrap(), SingularSpace::LeftKernel { .. }));
    assert!(matches!(select_space(&c, Strategy::AlternateRightBlock, 0).unwrap(), SingularSpace::RightKernel { .. }));
    match select_space(&c, Strategy::AlternateRightBlock, 1).unwrap() {
        SingularSpace::Block { rows, cols, .. } => {
            assert_eq!(rows.len(), 3);
            assert_eq!(cols.len(), 2);
        }
        other => panic!("expected a block space, got {}", other.variant_name()),
    }
}

#[test]
fn two_by_two_toeplitz() {
    let inst = Instance::new(dmatrix![2.0, 1.0; 1.0, 2.0], toeplitz_basis(2)).unwrap();
    let target = dmatrix![1.5, 1.5; 1.5, 1.5];
    for cfg in [tikhonov(), lagrangian(), SolverConfig::default().with_algorithm(Algorithm::Unregularized)] {
        let r = solve(&inst, &cfg).unwrap();
        assert!(r.converged, "{:?}", r.stop);
        assert!((r.distance - 1.0).abs() < 1e-6, "{:?}: {}", cfg.algorithm, r.distance);
        assert!((inst.matrix() + &r.perturbation - &target).abs().max() < 1e-6);
    }
}

#[test]
fn zero_matrix_short_circuits() {
    let inst = Instance::new(DMatrix::zeros(3, 3), toeplitz_basis(3)).unwrap();
    for cfg in [tikhonov(), lagrangian(), SolverConfig::default().with_algorithm(Algorithm::Unregularized)] {
        let r = solve(&inst, &cfg).unwrap();
        assert_eq!(r.stop, StopReason::AlreadySingular);
        assert!(r.converged);
        assert_eq!(r.distance, 0.0);
        let (full_rank, _) = licq_check(&inst, &r).unwrap();
        assert!(!full_rank);
    }
}

#[test]
fn singular_structured_input_needs_no_perturbation() {
    let inst = Instance::new(dmatrix![1.0, 1.0; 1.0, 1.0], toeplitz_basis(2)).unwrap();
    for cfg in [tikhonov(), lagrangian(), SolverConfig::default().with_algorithm(Algorithm::Unregularized)] {
        let r = solve(&inst, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.distance < 1e-8, "{:?}: {}", cfg.algorithm, r.distance);
    }
}

#[test]
fn unstructured_distance_is_the_smallest_singular_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [2, 3, 5, 8] {
        let a = gaussian(n, n, &mut rng);
        let inst = Instance::new(a.clone(), full_basis(n)).unwrap();
        let expected = sigma_min(&a);
        for cfg in [tikhonov(), lagrangian()] {
            let r = solve(&inst, &cfg).unwrap();
            assert!(r.converged);
            assert!((r.distance - expected).abs() <= 1e-6 * expected, "n={n} {:?}", cfg.algorithm);
            assert!(r.constraint_violation <= 10.0 * r.tol1);
        }
    }
}

#[test]
fn traces_are_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let inst = random_toeplitz(6, &mut rng);
        for strategy in [Strategy::RightKernel, Strategy::LeftKernel, Strategy::AlternateKernels, Strategy::AlternateRightBlock] {
            let mut configs = vec![tikhonov().with_strategy(strategy)];
            if matches!(strategy, Strategy::RightKernel | Strategy::LeftKernel) {
                configs.push(lagrangian().with_strategy(strategy));
            }
            configs.push(SolverConfig::default().with_algorithm(Algorithm::Unregularized).with_strategy(strategy));
            for cfg in configs {
                let r = solve(&inst, &cfg).unwrap();
                for run in &r.g_trace {
                    for w in run.windows(2) {
                        assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{:?} {:?}: {run:?}", cfg.algorithm, strategy);
                    }
                }
            }
        }
    }
}

#[test]
fn perturbation_stays_in_the_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = random_toeplitz(7, &mut rng);
    let r = solve(&inst, &tikhonov()).unwrap();
    let (_, residual) = inst.basis().coefficients_of(&r.perturbation).unwrap();
    assert!(residual < 1e-12);
    assert!((r.perturbation.norm() - r.distance).abs() < 1e-12);
}

#[test]
fn rotated_basis_gives_the_same_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inst = random_toeplitz(5, &mut rng);
    let toeplitz = toeplitz_basis::<f64>(5);
    let p = toeplitz.dim();
    let q = gaussian(p, p, &mut rng).qr().q();
    let mixed: Vec<DMatrix<f64>> = (0..p)
        .map(|k| (0..p).fold(DMatrix::zeros(5, 5), |acc, l| acc + toeplitz.element(l) * q[(l, k)]))
        .collect();
    let rotated = orthonormalize(&mixed).unwrap();
    assert!(rotated.discarded.is_empty());
    let other = Instance::new(inst.matrix().clone(), rotated.basis).unwrap();
    for cfg in [tikhonov(), lagrangian()] {
        let a = solve(&inst, &cfg).unwrap().distance;
        let b = solve(&other, &cfg).unwrap().distance;
        assert!((a - b).abs() <= 1e-8 * a, "{:?}: {a} vs {b}", cfg.algorithm);
    }
}

#[test]
fn symmetric_structure_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = gaussian(5, 5, &mut rng);
    let a = (&g + g.transpose()) * 0.5;
    let inst = Instance::new(a.clone(), symmetric_basis(5)).unwrap();
    let r = solve(&inst, &tikhonov()).unwrap();
    assert!(r.converged);
    // Symmetric nearness is solved by dropping the eigenvalue of least modulus.
    let eig = a.symmetric_eigen();
    let smallest = eig.eigenvalues.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
    assert!(r.distance <= smallest + 1e-8);
}

#[test]
fn licq_holds_for_generic_unstructured_solutions_and_ignores_sign() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let inst = Instance::new(gaussian(2, 2, &mut rng), full_basis(2)).unwrap();
    let r = solve(&inst, &tikhonov()).unwrap();
    let (full_rank, smallest) = licq_check(&inst, &r).unwrap();
    assert!(full_rank);
    let mut flipped = r.clone();
    if let SingularSpace::RightKernel { v } = &mut flipped.final_space {
        *v = -v.clone();
    } else {
        panic!("final space should be a right kernel");
    }
    let (again, smallest_flipped) = licq_check(&inst, &flipped).unwrap();
    assert!(again);
    assert!((smallest - smallest_flipped).abs() <= 1e-14 * smallest.max(1.0));
}

#[test]
fn licq_rejects_non_kernel_spaces() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let inst = random_toeplitz(4, &mut rng);
    let mut r = solve(&inst, &tikhonov()).unwrap();
    r.final_space = select_space(inst.matrix(), Strategy::AlternateRightBlock, 1).unwrap();
    assert!(licq_check(&inst, &r).is_err());
}

#[test]
fn block_strategy_reaches_a_singular_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let inst = random_toeplitz(6, &mut rng);
    let r = solve(&inst, &tikhonov().with_strategy(Strategy::AlternateRightBlock)).unwrap();
    assert!(r.converged, "{:?}", r.stop);
    assert!(sigma_min(&(inst.matrix() + &r.perturbation)) <= 10.0 * r.tol1);
}

#[test]
fn lagrangian_rejects_block_strategy() {
    let inst = Instance::new(dmatrix![2.0, 1.0; 1.0, 2.0], toeplitz_basis(2)).unwrap();
    assert!(solve(&inst, &lagrangian().with_strategy(Strategy::AlternateRightBlock)).is_err());
}

#[test]
fn caps_return_flagged_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let inst = random_toeplitz(8, &mut rng);
    let cfg = SolverConfig { max_outer: 1, ..tikhonov() };
    let r = solve(&inst, &cfg).unwrap();
    assert!(!r.converged);
    assert_eq!(r.stop, StopReason::OuterCap);
    assert_eq!(r.outer_iterations, 1);
}

#[test]
fn refined_triplet_matches_the_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in [3, 10, 30] {
        // Shrink the smallest singular value so inverse iteration converges fast.
        let g = gaussian(n, n, &mut rng);
        let t0 = svd(&g).unwrap().smallest_triplet();
        let c = &g + &t0.u * t0.v.transpose() * (1e-4 - t0.sigma);
        let s = svd(&c).unwrap();
        let exact = s.smallest_triplet();
        let start = &exact.v + DVector::from_fn(n, |_, _| 1e-3 * { let x: f64 = StandardNormal.sample(&mut rng); x });
        let t = refine_smallest_triplet(&c, &start, 12).expect("well separated triplet converges");
        assert!((t.sigma - exact.sigma).abs() <= 1e-10 * s.sigma_max());
        assert!((t.v.dot(&exact.v).abs() - 1.0).abs() < 1e-8);
        assert!((&c * &t.v - &t.u * t.sigma).norm() <= 1e-12 * c.norm());
    }
}

#[test]
fn single_precision_smoke() {
    let a = dmatrix![2.0f32, 1.0; 1.0, 2.0];
    let basis: Basis32 = toeplitz_basis(2);
    let inst = Instance32::new(a, basis).unwrap();
    let r = solve(&inst, &SolverConfig::default()).unwrap();
    assert!((r.distance - 1.0).abs() < 1e-3, "{}", r.distance);
}

#[test]
fn unregularized_descent_on_singular_sparse_input() {
    let a = dmatrix![-0.444, 0.0, 1.511; -1.238, 0.0, 0.0; 1.907, 0.0, 0.0];
    let pattern = [(0, 0), (0, 2), (1, 0), (2, 0)];
    let inst = Instance::new(a, singvec::sparse_pattern_basis(3, &pattern).unwrap()).unwrap();
    for strategy in Strategy::ALL {
        let cfg = SolverConfig::default().with_algorithm(Algorithm::Unregularized).with_strategy(strategy);
        let r = solve(&inst, &cfg).unwrap();
        assert!(r.converged, "{strategy:?}: {:?}", r.stop);
        assert!(r.distance < 1e-12, "{strategy:?}: {}", r.distance);
        for w in r.g_trace[0].windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{strategy:?}: {:?}", r.g_trace[0]);
        }
    }
}
