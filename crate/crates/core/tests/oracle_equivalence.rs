use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svmqp_core::cmu::{solve_cmu, CmuOptions};
use svmqp_core::oracle::{enumerate_patterns, projected_gradient, reference_solution};
use svmqp_core::smo::{solve_gsmo, solve_rsmo, SmoOptions};
use svmqp_core::{Matrix, QpProblem};

/// `H = MᵀM + I` with `M` uniform in `[−1, 1]`, labels with both classes.
fn random_problem(rng: &mut ChaCha8Rng, n: usize, upper: f64) -> QpProblem {
    let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut h = m.transpose().matmul(&m).unwrap();
    h.add_diagonal(1.0);
    let mut z: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    z[0] = 1.0;
    z[1] = -1.0;
    QpProblem::svm(h, z, upper).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn cmu_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..30 {
        let n = 2 + case % 9;
        let upper = [1.0, 10.0, f64::INFINITY][case % 3];
        let p = random_problem(&mut rng, n, upper);
        let oracle = enumerate_patterns(&p, 1e-9).unwrap();
        let sol = solve_cmu(&p, &CmuOptions::default()).unwrap();
        assert!(sol.converged(), "case {case}: {:?}", sol.status);
        assert!(rel(sol.objective, oracle.objective) <= 1e-8, "case {case}: {} vs {}", sol.objective, oracle.objective);
        assert!(sol.kkt.rel_residual <= 1e-8);
    }
}

#[test]
fn enumeration_and_projected_gradient_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..10 {
        let upper = [1.0, f64::INFINITY][case % 2];
        let p = random_problem(&mut rng, 8, upper);
        let a = enumerate_patterns(&p, 1e-9).unwrap();
        let b = projected_gradient(&p, 1e-12, 1_000_000).unwrap();
        assert!(rel(a.objective, b.objective) <= 1e-10, "{} vs {}", a.objective, b.objective);
    }
}

#[test]
fn larger_instances_match_projected_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..6 {
        let upper = [1.0, 10.0, f64::INFINITY][case % 3];
        let p = random_problem(&mut rng, 20, upper);
        let oracle = reference_solution(&p).unwrap();
        let sol = solve_cmu(&p, &CmuOptions::default()).unwrap();
        assert!(rel(sol.objective, oracle.objective) <= 1e-8, "{} vs {}", sol.objective, oracle.objective);
    }
}

#[test]
fn smo_reaches_oracle_on_small_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..10 {
        let upper = [1.0, 10.0][case % 2];
        let p = random_problem(&mut rng, 6, upper);
        let oracle = enumerate_patterns(&p, 1e-9).unwrap();
        let opts = SmoOptions { max_iters: Some(200_000), ..SmoOptions::default() };
        let g = solve_gsmo(&p, &opts).unwrap();
        assert!(rel(g.objective, oracle.objective) <= 1e-6, "gsmo {} vs {}", g.objective, oracle.objective);
        let r = solve_rsmo(&p, &SmoOptions { seed: case as u64, ..opts }).unwrap();
        assert!(rel(r.objective, oracle.objective) <= 1e-6, "rsmo {} vs {}", r.objective, oracle.objective);
    }
}
