//! Fixed-step RK4 simulation of `ẋ = (I_N ⊗ A + L ⊗ BK) x` and the
//! trajectory metrics derived from it.

use crate::error::{Error, Result};
use crate::matops::{ensure_shape, ensure_square, Matrix, Vector};
use crate::synthesis::{AgentDynamics, CostWeights};

/// Default integration step for the demo.
pub const DEFAULT_DT: f64 = 1e-3;
/// Default horizon for the demo.
pub const DEFAULT_HORIZON: f64 = 30.0;
/// `dt` must not exceed this over the spectral norm of the closed loop.
pub const STEP_SAFETY: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Stacked `n·N` states, one per entry of `times`.
    pub states: Vec<Vector>,
    pub dt: f64,
    /// Per-agent state dimension `n`.
    pub agent_dim: usize,
}

impl Trajectory {
    pub fn agent_count(&self) -> usize {
        self.states.first().map_or(0, |x| x.len() / self.agent_dim.max(1))
    }

    pub fn last_state(&self) -> Option<&Vector> {
        self.states.last()
    }
}

/// `I_N ⊗ A + L ⊗ BK`.
pub fn closed_loop_matrix(dynamics: &AgentDynamics, laplacian: &Matrix, k: &Matrix) -> Result<Matrix> {
    let agents = ensure_square(laplacian, "L")?;
    ensure_shape(k, dynamics.input_dim(), dynamics.state_dim(), "K")?;
    Ok(Matrix::identity(agents, agents).kronecker(&dynamics.a) + laplacian.kronecker(&(&dynamics.b * k)))
}

/// Integrates the closed loop from `x0` over `[0, horizon]` with step `dt`.
///
/// The step count is `round(horizon / dt)`, so the last time may differ from
/// `horizon` by less than `dt / 2`.
pub fn simulate(
    dynamics: &AgentDynamics,
    laplacian: &Matrix,
    k: &Matrix,
    x0: &Vector,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory> {
    let acl = closed_loop_matrix(dynamics, laplacian, k)?;
    if x0.len() != acl.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "x0 has length {}, expected {}",
            x0.len(),
            acl.nrows()
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::StepTooLarge(format!("dt must be positive, got {dt}")));
    }
    if !(horizon.is_finite() && horizon >= dt) {
        return Err(Error::StepTooLarge(format!("horizon {horizon} is shorter than dt = {dt}")));
    }
    let norm = acl.clone().singular_values().max();
    if dt * norm > STEP_SAFETY {
        return Err(Error::StepTooLarge(format!(
            "dt = {dt} exceeds {STEP_SAFETY}/‖A_cl‖ = {}",
            STEP_SAFETY / norm
        )));
    }

    let steps = (horizon / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    times.push(0.0);
    states.push(x.clone());
    for step in 1..=steps {
        let k1 = &acl * &x;
        let k2 = &acl * (&x + &k1 * (0.5 * dt));
        let k3 = &acl * (&x + &k2 * (0.5 * dt));
        let k4 = &acl * (&x + &k3 * dt);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { what: "state" });
        }
        times.push(step as f64 * dt);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states, dt, agent_dim: dynamics.state_dim() })
}

/// Largest pairwise distance `‖xᵢ - xⱼ‖` at each time point.
pub fn consensus_error(traj: &Trajectory) -> Vec<f64> {
    let n = traj.agent_dim;
    traj.states
        .iter()
        .map(|x| {
            let agents = x.len() / n.max(1);
            let mut worst: f64 = 0.0;
            for i in 0..agents {
                for j in (i + 1)..agents {
                    worst = worst.max((x.rows(i * n, n) - x.rows(j * n, n)).norm());
                }
            }
            worst
        })
        .collect()
}

/// Finite-horizon cost plus an estimate of what lies beyond the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureCost {
    /// Trapezoidal `∫₀ᵀ xᵀ(L⊗Q + L²⊗KᵀRK)x dt`.
    pub value: f64,
    /// `f_max/r`, with `f_max` the integrand envelope over the final
    /// stretch and `r` its exponential decay rate; `∞` if it is not decaying.
    pub tail_estimate: f64,
}

/// Trapezoidal approximation of the network cost along a trajectory.
///
/// The integrand is assembled from pairwise differences `xⱼ - xᵢ` so it
/// stays accurate when the common mode of the agents grows large.
pub fn quadrature_cost(traj: &Trajectory, weights: &CostWeights, laplacian: &Matrix, k: &Matrix) -> QuadratureCost {
    let n = traj.agent_dim.max(1);
    let agents = laplacian.nrows();
    let effort = k.transpose() * &weights.r * k;
    let integrand: Vec<f64> = traj
        .states
        .iter()
        .map(|x| {
            let mut state_part = 0.0;
            let mut input_part = 0.0;
            for i in 0..agents {
                // (L⊗I)x at agent i, as Σⱼ Lᵢⱼ(xⱼ - xᵢ).
                let mut y = Vector::zeros(n);
                for j in 0..agents {
                    if i != j && laplacian[(i, j)] != 0.0 {
                        let diff = x.rows(j * n, n) - x.rows(i * n, n);
                        y += &diff * laplacian[(i, j)];
                        if j > i {
                            state_part -= laplacian[(i, j)] * diff.dot(&(&weights.q * &diff));
                        }
                    }
                }
                input_part += y.dot(&(&effort * &y));
            }
            (state_part + input_part).max(0.0)
        })
        .collect();
    let value = integrand
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]) * traj.dt)
        .sum::<f64>();

    // Envelope decay between the last two windows of 5% of the horizon each;
    // window maxima are insensitive to oscillation of the integrand.
    let width = (integrand.len() / 20).max(1);
    let tail_estimate = if integrand.len() < 2 * width + 1 {
        f64::INFINITY
    } else {
        let envelope = |w: &[f64]| w.iter().cloned().fold(0.0, f64::max);
        let end = integrand.len();
        let last = envelope(&integrand[end - width..]);
        let before = envelope(&integrand[end - 2 * width..end - width]);
        if last == 0.0 {
            0.0
        } else if before > last {
            let rate = (before / last).ln() / (width as f64 * traj.dt);
            last / rate
        } else {
            f64::INFINITY
        }
    };
    QuadratureCost { value, tail_estimate }
}
