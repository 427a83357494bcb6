mod common;

use common::*;
use dlqr_core::analysis::{autonomous_performance, certify_gamma, consensus_check, evaluate_cost};
use dlqr_core::graph::{disagreement_projector, spectrum, UndirectedGraph};
use dlqr_core::matops::{care_residual, is_hurwitz, psd_check, solve_care, solve_lyapunov, symmetric_eigen};
use dlqr_core::sim::{closed_loop_matrix, consensus_error, quadrature_cost, simulate};
use dlqr_core::synthesis::{admissibility, c_interval, design_gain, Method, SpectralInputs, SynthesisBudget};
use dlqr_core::{Matrix, Tolerances, Vector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lyapunov_matches_vectorized_oracle(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = rng(seed);
        let a = random_hurwitz(&mut r, n);
        let q = random_psd(&mut r, n);
        let y = solve_lyapunov(&a, &q, &tol()).unwrap();
        prop_assert!(rel_err(&y, &kron_lyapunov(&a, &q)) <= 1e-8);
        prop_assert!(psd_check(&y, &tol()).unwrap().0);
    }

    #[test]
    fn care_agrees_with_closed_loop_lyapunov(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=2) {
        let mut r = rng(seed);
        let dynamics = random_dynamics(&mut r, n, m);
        let rbar = random_pd(&mut r, m);
        let qbar = random_psd(&mut r, n) + Matrix::identity(n, n) * 0.1;
        let p = solve_care(&dynamics.a, &dynamics.b, &rbar, &qbar, &tol()).unwrap();
        let res = care_residual(&dynamics.a, &dynamics.b, &rbar, &qbar, &p).unwrap().norm();
        prop_assert!(res <= 1e-8 * p.norm_squared().max(1.0));
        let g = &dynamics.b * rbar.clone().try_inverse().unwrap() * dynamics.b.transpose();
        let closed = &dynamics.a - &g * &p;
        prop_assert!(is_hurwitz(&closed, &tol()).unwrap());
        let y = solve_lyapunov(&closed, &(&qbar + &p * &g * &p), &tol()).unwrap();
        prop_assert!(rel_err(&y, &p) <= 1e-6);
    }

    #[test]
    fn symmetric_eigen_is_orthogonal_and_sorted(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let m = uniform_matrix(&mut r, n, n, 2.0);
        let s = &m + m.transpose();
        let e = symmetric_eigen(&s, &tol()).unwrap();
        prop_assert!((e.vectors.transpose() * &e.vectors - Matrix::identity(n, n)).norm() <= 1e-10);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((e.reconstruct() - &s).norm() <= 1e-10 * s.norm().max(1.0));
    }

    #[test]
    fn laplacian_spectrum_invariants(seed in any::<u64>(), nodes in 2usize..=10) {
        let mut r = rng(seed);
        let spec = spectrum(&random_connected_graph(&mut r, nodes), &tol()).unwrap();
        let ones = Vector::from_element(nodes, 1.0);
        prop_assert!((&spec.laplacian * &ones).norm() == 0.0);
        prop_assert!(spec.lambdas[0].abs() <= 1e-10);
        prop_assert!(spec.lambda2 > 0.0);
        prop_assert!((spec.u.transpose() * &spec.u - Matrix::identity(nodes, nodes)).norm() <= 1e-10);
        let u2 = spec.u2();
        prop_assert!((&u2 * u2.transpose() - disagreement_projector(nodes)).norm() <= 1e-10);
    }

    #[test]
    fn admissibility_forms_agree_and_ignore_common_shift(seed in any::<u64>(), n in 1usize..=3, agents in 2usize..=7) {
        let mut r = rng(seed);
        let p = random_psd(&mut r, n);
        let x0 = uniform_vector(&mut r, n * agents, 1.0);
        let budget = SynthesisBudget::new(1.0).unwrap();
        let a = admissibility(&p, &x0, budget).unwrap();
        prop_assert!((a.bound_value - a.pairwise_value).abs() <= 1e-10 * a.bound_value.abs().max(1e-300));
        let shift = uniform_vector(&mut r, n, 5.0);
        let shifted = Vector::from_iterator(n * agents, (0..n * agents).map(|i| x0[i] + shift[i % n]));
        let b = admissibility(&p, &shifted, budget).unwrap();
        prop_assert!((a.bound_value - b.bound_value).abs() <= 1e-9 * a.bound_value.abs().max(1.0));
    }

    #[test]
    fn every_method_stabilizes_every_mode(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r);
        for method in NETWORK_METHODS {
            let inputs = spectral_inputs(&mut r, method, &inst.spec);
            let d = design_gain(&inst.dynamics, &inst.weights, method, inputs, None, 1e-3, &tol()).unwrap();
            prop_assert!(psd_check(&d.p, &tol()).unwrap().0);
            prop_assert!(consensus_check(&inst.dynamics, &d.k, &inst.spec, &tol()).unwrap(), "{method}");
        }
    }

    #[test]
    fn gamma_certificate_is_exact(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let a = random_hurwitz(&mut r, n);
        let q = random_psd(&mut r, n);
        let x0 = uniform_vector(&mut r, n, 1.0);
        let j = x0.dot(&(kron_lyapunov(&a, &q) * &x0));
        let factor = if r.gen_bool(0.5) { 1.0 + r.gen_range(0.01..0.5) } else { 1.0 - r.gen_range(0.01..0.5) };
        let gamma = (j * factor).max(1e-6);
        let cert = certify_gamma(&a, &q, &x0, gamma, &tol()).unwrap();
        prop_assert_eq!(cert.certified, gamma > j);
        if let Some(w) = cert.witness {
            prop_assert!(max_eig(&(a.transpose() * &w + &w * &a + &q)) < 0.0);
            prop_assert!(x0.dot(&(&w * &x0)) < gamma);
        }
    }

    #[test]
    fn witness_converges_linearly_in_epsilon(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let a = random_hurwitz(&mut r, n);
        let q = random_psd(&mut r, n);
        let x0 = uniform_vector(&mut r, n, 1.0);
        let j = autonomous_performance(&a, &q, &x0, &tol()).unwrap();
        let c = max_eig(&solve_lyapunov(&a, &Matrix::identity(n, n), &tol()).unwrap());
        let mut previous = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4, 1e-5] {
            let pe = solve_lyapunov(&a, &(&q + Matrix::identity(n, n) * eps), &tol()).unwrap();
            let gap = x0.dot(&(&pe * &x0)) - j;
            prop_assert!(gap >= -1e-12 && gap <= eps * x0.norm_squared() * c * (1.0 + 1e-8) + 1e-14);
            prop_assert!(gap <= previous);
            previous = gap;
        }
    }

    #[test]
    fn cost_ignores_common_shift(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r);
        let inputs = SpectralInputs::new(inst.spec.lambda2, inst.spec.lambda_n).unwrap();
        let d = design_gain(&inst.dynamics, &inst.weights, Method::ExactSpectrumUpper, inputs, None, 1e-3, &tol()).unwrap();
        let n = inst.dynamics.state_dim();
        let shift = uniform_vector(&mut r, n, 3.0);
        let shifted = Vector::from_iterator(inst.x0.len(), (0..inst.x0.len()).map(|i| inst.x0[i] + shift[i % n]));
        let a = evaluate_cost(&inst.dynamics, &inst.weights, &inst.spec, &d.k, &inst.x0, 1.0, None, &tol()).unwrap();
        let b = evaluate_cost(&inst.dynamics, &inst.weights, &inst.spec, &d.k, &shifted, 1.0, None, &tol()).unwrap();
        prop_assert!((a.j - b.j).abs() <= 1e-8 * a.j.max(1e-12));
    }
}

#[test]
fn path_spectrum_matches_cosine_formula() {
    for nodes in 2..=12 {
        let spec = spectrum(&UndirectedGraph::path(nodes).unwrap(), &tol()).unwrap();
        for (k, lambda) in spec.lambdas.iter().enumerate() {
            let exact = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / nodes as f64).cos();
            assert!((lambda - exact).abs() <= 1e-8, "N = {nodes}, k = {k}");
        }
    }
}

#[test]
fn riccati_solution_grows_with_c_and_epsilon() {
    let mut r = rng(7);
    for _ in 0..10 {
        let inst = random_instance(&mut r);
        let inputs = SpectralInputs::new(inst.spec.lambda2, inst.spec.lambda_n).unwrap();
        let interval = c_interval(Method::ExactSpectrumUpper, inputs.lower, inputs.upper).unwrap();
        let design = |c: f64, eps: f64| {
            design_gain(&inst.dynamics, &inst.weights, Method::ExactSpectrumUpper, inputs, Some(c), eps, &tol())
                .unwrap()
                .p
        };
        let cs: Vec<f64> = [0.0, 0.3, 0.6, 0.9]
            .iter()
            .map(|t| interval.lower + t * (interval.upper - interval.lower))
            .collect();
        for pair in cs.windows(2) {
            assert!(min_eig(&(design(pair[1], 1e-3) - design(pair[0], 1e-3))) >= -1e-8);
        }
        assert!(min_eig(&(design(cs[1], 1e-2) - design(cs[1], 1e-4))) >= -1e-8);
    }
}

#[test]
fn rk4_matches_matrix_exponential() {
    let mut r = rng(11);
    for _ in 0..4 {
        let inst = random_instance(&mut r);
        if inst.x0.len() > 16 {
            continue;
        }
        let inputs = SpectralInputs::new(inst.spec.lambda2, inst.spec.lambda_n).unwrap();
        let d = design_gain(&inst.dynamics, &inst.weights, Method::ExactSpectrumUpper, inputs, None, 1e-3, &tol()).unwrap();
        let acl = closed_loop_matrix(&inst.dynamics, &inst.spec.laplacian, &d.k).unwrap();
        let dt = 1e-3f64.min(0.1 / acl.clone().singular_values().max());
        let traj = simulate(&inst.dynamics, &inst.spec.laplacian, &d.k, &inst.x0, 10.0, dt).unwrap();
        let t = *traj.times.last().unwrap();
        let exact = (acl * t).exp() * &inst.x0;
        assert!((traj.last_state().unwrap() - &exact).norm() <= 1e-6 * exact.norm().max(1.0));
    }
}

#[test]
fn network_average_follows_open_loop_agent() {
    let mut r = rng(3);
    let inst = random_instance(&mut r);
    let n = inst.dynamics.state_dim();
    let agents = inst.spec.node_count();
    let inputs = SpectralInputs::new(inst.spec.lambda2, inst.spec.lambda_n).unwrap();
    let d = design_gain(&inst.dynamics, &inst.weights, Method::ExactSpectrumLower, inputs, None, 1e-3, &tol()).unwrap();
    let acl = closed_loop_matrix(&inst.dynamics, &inst.spec.laplacian, &d.k).unwrap();
    let dt = 1e-3f64.min(0.1 / acl.singular_values().max());
    let traj = simulate(&inst.dynamics, &inst.spec.laplacian, &d.k, &inst.x0, 3.0, dt).unwrap();
    let average = |x: &Vector| (0..agents).map(|i| x.rows(i * n, n).into_owned()).sum::<Vector>() / agents as f64;
    let start = average(&inst.x0);
    for (t, x) in traj.times.iter().zip(&traj.states).step_by(500) {
        let expected = (&inst.dynamics.a * *t).exp() * &start;
        assert!((average(x) - expected).norm() <= 1e-8 * start.norm().max(1.0));
    }
}

#[test]
fn consensus_start_stays_in_consensus() {
    let tol = tol();
    let dynamics = dlqr_core::example::dynamics(&tol).unwrap();
    let spec = spectrum(&UndirectedGraph::path(5).unwrap(), &tol).unwrap();
    let k = Matrix::from_row_slice(1, 2, &[-0.7, -1.3]);
    let x0 = Vector::from_vec([0.4, -0.9].repeat(5));
    let traj = simulate(&dynamics, &spec.laplacian, &k, &x0, 5.0, 1e-3).unwrap();
    assert!(consensus_error(&traj).iter().all(|&e| e <= 1e-12));
    let weights = dlqr_core::example::weights(&tol).unwrap();
    assert!(quadrature_cost(&traj, &weights, &spec.laplacian, &k).value <= 1e-12);
}

#[test]
fn halving_the_step_reduces_quadrature_error() {
    let tol = tol();
    let dynamics = dlqr_core::example::dynamics(&tol).unwrap();
    let weights = dlqr_core::example::weights(&tol).unwrap();
    let spec = spectrum(&dlqr_core::example::graph().unwrap(), &tol).unwrap();
    let inputs = SpectralInputs::new(spec.lambda2, spec.lambda_n).unwrap();
    let d = design_gain(&dynamics, &weights, Method::ExactSpectrumUpper, inputs, Some(0.5), 1e-3, &tol).unwrap();
    let x0 = dlqr_core::example::initial_state();
    let exact = evaluate_cost(&dynamics, &weights, &spec, &d.k, &x0, 3.0, None, &tol).unwrap().j;
    let err = |dt: f64| {
        let traj = simulate(&dynamics, &spec.laplacian, &d.k, &x0, 60.0, dt).unwrap();
        (quadrature_cost(&traj, &weights, &spec.laplacian, &d.k).value - exact).abs()
    };
    assert!(err(2e-3) < err(4e-3));
}
