#![allow(dead_code)]

use dlqr_core::graph::UndirectedGraph;
use dlqr_core::{Matrix, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

pub fn uniform_vector(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vector {
    Vector::from_fn(len, |_, _| rng.gen_range(-scale..scale))
}

/// `MᵀM` with `M` of random rank `1..=n`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let rank = rng.gen_range(1..=n);
    let m = uniform_matrix(rng, rank, n, 1.0);
    m.transpose() * m
}

pub fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let m = uniform_matrix(rng, n, n, 1.0);
    m.transpose() * m + Matrix::identity(n, n) * 0.5
}

/// Random spanning tree plus extra edges with probability 0.3.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, nodes: usize) -> UndirectedGraph {
    let mut edges = Vec::new();
    for i in 2..=nodes {
        edges.push((rng.gen_range(1..i), i));
    }
    for i in 1..=nodes {
        for j in (i + 1)..=nodes {
            if !edges.contains(&(i, j)) && rng.gen_bool(0.3) {
                edges.push((i, j));
            }
        }
    }
    UndirectedGraph::new(nodes, &edges).unwrap()
}

/// Hurwitz matrix with spectral abscissa in `[-1, -0.1]`.
pub fn random_hurwitz(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let m = uniform_matrix(rng, n, n, 1.0);
    let abscissa = dlqr_core::matops::spectral_abscissa(&m).unwrap();
    let shift = abscissa + rng.gen_range(0.1..1.0);
    m - Matrix::identity(n, n) * shift
}

/// Independent Lyapunov oracle: dense solve of the vectorized equation
/// `(I ⊗ Āᵀ + Āᵀ ⊗ I) vec(Y) = -vec(Q̄)`.
pub fn kron_lyapunov(a: &Matrix, q: &Matrix) -> Matrix {
    let n = a.nrows();
    let i = Matrix::identity(n, n);
    let sys = i.kronecker(&a.transpose()) + a.transpose().kronecker(&i);
    let rhs = -Vector::from_column_slice(q.as_slice());
    let y = sys.lu().solve(&rhs).expect("vectorized Lyapunov system is singular");
    Matrix::from_column_slice(n, n, y.as_slice())
}

pub fn min_eig(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

pub fn max_eig(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().max()
}

pub fn rel_err(got: &Matrix, want: &Matrix) -> f64 {
    (got - want).norm() / want.norm().max(f64::MIN_POSITIVE)
}

use dlqr_core::graph::{spectrum, LaplacianSpectrum};
use dlqr_core::synthesis::{AgentDynamics, CostWeights, Method, SpectralInputs};
use dlqr_core::Tolerances;

pub struct Instance {
    pub dynamics: AgentDynamics,
    pub weights: CostWeights,
    pub spec: LaplacianSpectrum,
    pub x0: Vector,
}

pub fn random_dynamics(rng: &mut ChaCha8Rng, n: usize, m: usize) -> AgentDynamics {
    loop {
        let a = uniform_matrix(rng, n, n, 1.0);
        let b = uniform_matrix(rng, n, m, 1.0);
        if let Ok(d) = AgentDynamics::new(a, b, &Tolerances::default()) {
            return d;
        }
    }
}

/// `n ≤ 3`, `m ≤ 2`, `2 ≤ N ≤ 6`, random connected graph, PSD `Q`, PD `R`.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let tol = Tolerances::default();
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=2);
    let agents = rng.gen_range(2..=6);
    let dynamics = random_dynamics(rng, n, m);
    let weights = CostWeights::new(random_psd(rng, n), random_pd(rng, m), &tol).unwrap();
    let spec = spectrum(&random_connected_graph(rng, agents), &tol).unwrap();
    let x0 = uniform_vector(rng, n * agents, 1.0);
    Instance { dynamics, weights, spec, x0 }
}

pub const NETWORK_METHODS: [Method; 4] = [
    Method::ExactSpectrumUpper,
    Method::ExactSpectrumLower,
    Method::BoundsUpper,
    Method::BoundsLower,
];

/// Exact `(λ₂, λ_N)` or random bounds `l₂ ∈ [0.5λ₂, λ₂]`, `L_N ∈ [λ_N, 1.5λ_N]`.
pub fn spectral_inputs(rng: &mut ChaCha8Rng, method: Method, spec: &LaplacianSpectrum) -> SpectralInputs {
    if method.uses_bounds() {
        SpectralInputs::new(spec.lambda2 * rng.gen_range(0.5..=1.0), spec.lambda_n * rng.gen_range(1.0..=1.5)).unwrap()
    } else {
        SpectralInputs::new(spec.lambda2, spec.lambda_n).unwrap()
    }
}
