//! Eight undamped oscillators on a path graph, coupled through the second
//! state. Used by the demo command and by the regression tests.

use crate::error::Result;
use crate::graph::UndirectedGraph;
use crate::matops::{Matrix, Vector};
use crate::synthesis::{AgentDynamics, CostWeights};
use crate::tolerance::Tolerances;

pub const AGENTS: usize = 8;
pub const GAMMA: f64 = 3.0;
pub const EPSILON: f64 = 1e-3;
pub const C: f64 = 0.5;

/// Reference Riccati solution, row-major.
pub const REFERENCE_P: [f64; 4] = [12.1168, 3.1303, 3.1303, 8.3081];
/// Reference local gain.
pub const REFERENCE_K: [f64; 2] = [-1.5652, -4.1541];
/// Reference largest Laplacian eigenvalue.
pub const REFERENCE_LAMBDA_N: f64 = 3.8478;

/// Per-agent initial states.
pub const INITIAL_STATES: [[f64; 2]; AGENTS] = [
    [-0.08, 0.11],
    [0.12, -0.08],
    [-0.09, -0.14],
    [-0.12, 0.04],
    [0.07, -0.16],
    [-0.21, 0.12],
    [0.15, -0.22],
    [-0.17, -0.14],
];

pub fn dynamics(tol: &Tolerances) -> Result<AgentDynamics> {
    AgentDynamics::new(
        Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
        Matrix::from_row_slice(2, 1, &[0.0, 1.0]),
        tol,
    )
}

pub fn weights(tol: &Tolerances) -> Result<CostWeights> {
    CostWeights::new(
        Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
        Matrix::from_element(1, 1, 1.0),
        tol,
    )
}

pub fn graph() -> Result<UndirectedGraph> {
    UndirectedGraph::path(AGENTS)
}

/// Stacked initial state `(x₁₀, …, x₈₀)`.
pub fn initial_state() -> Vector {
    Vector::from_iterator(2 * AGENTS, INITIAL_STATES.iter().flatten().copied())
}
