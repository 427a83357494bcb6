//! Exact cost evaluation through Lyapunov equations.
//!
//! With `x̄ = (Uᵀ ⊗ I_n) x` the closed loop `ẋ = (I⊗A + L⊗BK)x` splits into
//! `x̄̇₁ = A x̄₁` and `x̄̇ᵢ = (A + λᵢBK) x̄ᵢ` for `i ≥ 2`, and the global cost
//! into `Σ_{i≥2} Jᵢ` with `Jᵢ = x̄ᵢ₀ᵀ Yᵢ x̄ᵢ₀`, `Yᵢ` solving the Lyapunov
//! equation of mode `i` with weight `λᵢQ + λᵢ²KᵀRK`. The consensus mode
//! `i = 1` carries no cost.

use crate::error::{Error, Result};
use crate::graph::LaplacianSpectrum;
use crate::matops::{
    ensure_shape, ensure_square, max_eigenvalue, solve_lyapunov, spectral_abscissa, Matrix, Vector,
};
use crate::synthesis::{admissibility, AgentDynamics, CostWeights, SynthesisBudget};
use crate::tolerance::Tolerances;

/// Initial witness shift; halved until the witness conditions hold.
pub const WITNESS_EPSILON_START: f64 = 1e-3;
/// The witness search stops below this shift.
pub const WITNESS_EPSILON_MIN: f64 = 1e-12;

/// Network state in modal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub xbar: Vec<Vector>,
}

impl ModalState {
    /// `x = (U ⊗ I_n) x̄`.
    pub fn to_physical(&self, spec: &LaplacianSpectrum) -> Vector {
        let n = self.xbar.first().map_or(0, |v| v.len());
        let stacked = Vector::from_iterator(
            n * self.xbar.len(),
            self.xbar.iter().flat_map(|v| v.iter().copied()),
        );
        spec.u.kronecker(&Matrix::identity(n, n)) * stacked
    }
}

fn agent_dim(spec: &LaplacianSpectrum, x0: &Vector) -> Result<usize> {
    let agents = spec.node_count();
    if agents == 0 || x0.is_empty() || !x0.len().is_multiple_of(agents) {
        return Err(Error::DimensionMismatch(format!(
            "stacked state of length {} does not split over {agents} agents",
            x0.len()
        )));
    }
    Ok(x0.len() / agents)
}

/// `x̄ = (Uᵀ ⊗ I_n) x₀`, split per mode.
pub fn modal_transform(spec: &LaplacianSpectrum, x0: &Vector) -> Result<ModalState> {
    let n = agent_dim(spec, x0)?;
    let stacked = spec.u.transpose().kronecker(&Matrix::identity(n, n)) * x0;
    let xbar = (0..spec.node_count())
        .map(|i| stacked.rows(i * n, n).into_owned())
        .collect();
    Ok(ModalState { xbar })
}

/// `J = x₀ᵀ Y x₀` with `ĀᵀY + YĀ + Q̄ = 0`.
pub fn autonomous_performance(abar: &Matrix, qbar: &Matrix, x0: &Vector, tol: &Tolerances) -> Result<f64> {
    let n = ensure_square(abar, "Abar")?;
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!("x0 has length {}, expected {n}", x0.len())));
    }
    let y = solve_lyapunov(abar, qbar, tol)?;
    Ok(x0.dot(&(y * x0)))
}

/// Outcome of the `J < γ` test for an autonomous system.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaCertificate {
    pub certified: bool,
    /// Exact performance; `+∞` when `Ā` is not Hurwitz.
    pub j: f64,
    /// `P_ε` with `ĀᵀP_ε + P_εĀ + Q̄ < 0` and `x₀ᵀP_εx₀ < γ`.
    pub witness: Option<Matrix>,
    /// The shift that produced `witness`.
    pub witness_epsilon: Option<f64>,
}

/// Decides `Ā Hurwitz ∧ x₀ᵀYx₀ < γ` and, when it holds, constructs the
/// witness `P_ε = lyap(Ā, Q̄ + εI)` by halving `ε` from
/// [`WITNESS_EPSILON_START`].
pub fn certify_gamma(
    abar: &Matrix,
    qbar: &Matrix,
    x0: &Vector,
    gamma: f64,
    tol: &Tolerances,
) -> Result<GammaCertificate> {
    let n = ensure_square(abar, "Abar")?;
    ensure_shape(qbar, n, n, "Qbar")?;
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!("x0 has length {}, expected {n}", x0.len())));
    }
    let not_certified = GammaCertificate { certified: false, j: f64::INFINITY, witness: None, witness_epsilon: None };
    let j = match autonomous_performance(abar, qbar, x0, tol) {
        Ok(j) => j,
        Err(Error::NotHurwitz { .. }) => return Ok(not_certified),
        Err(e) => return Err(e),
    };
    if !(j < gamma) {
        return Ok(GammaCertificate { j, ..not_certified });
    }

    let mut epsilon = WITNESS_EPSILON_START;
    while epsilon >= WITNESS_EPSILON_MIN {
        let shifted = qbar + Matrix::identity(n, n) * epsilon;
        let p = solve_lyapunov(abar, &shifted, tol)?;
        let lhs = abar.transpose() * &p + &p * abar + qbar;
        let scale = (lhs.norm() + qbar.norm()).max(1.0);
        let strict = max_eigenvalue(&((&lhs + lhs.transpose()) * 0.5), tol)? <= -tol.strict * scale;
        if strict && x0.dot(&(&p * x0)) < gamma {
            return Ok(GammaCertificate { certified: true, j, witness: Some(p), witness_epsilon: Some(epsilon) });
        }
        epsilon *= 0.5;
    }
    Ok(GammaCertificate { certified: true, j, witness: None, witness_epsilon: None })
}

fn check_gain(dynamics: &AgentDynamics, k: &Matrix) -> Result<()> {
    ensure_shape(k, dynamics.input_dim(), dynamics.state_dim(), "K")
}

/// `A + λ BK`.
pub fn mode_matrix(dynamics: &AgentDynamics, k: &Matrix, lambda: f64) -> Matrix {
    &dynamics.a + (&dynamics.b * k) * lambda
}

/// True iff every mode `A + λᵢBK`, `i ≥ 2`, is Hurwitz.
pub fn consensus_check(dynamics: &AgentDynamics, k: &Matrix, spec: &LaplacianSpectrum, tol: &Tolerances) -> Result<bool> {
    check_gain(dynamics, k)?;
    for &lambda in &spec.lambdas[1..] {
        if spectral_abscissa(&mode_matrix(dynamics, k, lambda))? >= -tol.hurwitz {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCost {
    /// 1-based mode index, `2..=N`.
    pub index: usize,
    pub lambda: f64,
    pub j: f64,
    /// `-max Re eig(A + λBK)`.
    pub hurwitz_margin: f64,
}

/// Cost of the closed loop against a budget.
#[derive(Debug, Clone, PartialEq)]
pub struct CostCertificate {
    pub j: f64,
    pub per_mode: Vec<ModeCost>,
    /// `x₀ᵀ(Π ⊗ P)x₀` when `P` was supplied.
    pub bound_value: Option<f64>,
    pub gamma: f64,
    pub margin: f64,
}

impl CostCertificate {
    pub fn certified(&self) -> bool {
        self.margin > 0.0
    }

    /// `J ≤ x₀ᵀ(Π⊗P)x₀`, up to rounding; `None` without `P`.
    pub fn chain_holds(&self) -> Option<bool> {
        self.bound_value
            .map(|b| self.j <= b + 1e-10 * b.abs().max(1.0))
    }
}

/// Exact cost `J(K) = Σ_{i≥2} Jᵢ` of `u = (L⊗K)x` from `x₀`.
///
/// Modes are summed in index order. A non-Hurwitz mode yields
/// [`Error::CostInfinite`].
#[allow(clippy::too_many_arguments)]
pub fn evaluate_cost(
    dynamics: &AgentDynamics,
    weights: &CostWeights,
    spec: &LaplacianSpectrum,
    k: &Matrix,
    x0: &Vector,
    gamma: f64,
    p: Option<&Matrix>,
    tol: &Tolerances,
) -> Result<CostCertificate> {
    check_gain(dynamics, k)?;
    let budget = SynthesisBudget::new(gamma)?;
    let n = dynamics.state_dim();
    if agent_dim(spec, x0)? != n {
        return Err(Error::DimensionMismatch(format!(
            "x0 has length {}, expected {}",
            x0.len(),
            n * spec.node_count()
        )));
    }
    let modal = modal_transform(spec, x0)?;
    let gain_weight = k.transpose() * &weights.r * k;

    let mut per_mode = Vec::with_capacity(spec.node_count() - 1);
    for (i, (&lambda, xbar)) in spec.lambdas.iter().zip(&modal.xbar).enumerate().skip(1) {
        let abar = mode_matrix(dynamics, k, lambda);
        let abscissa = spectral_abscissa(&abar)?;
        if abscissa >= -tol.hurwitz {
            return Err(Error::CostInfinite { mode: i + 1, lambda });
        }
        let qbar = &weights.q * lambda + &gain_weight * (lambda * lambda);
        let qbar = (&qbar + qbar.transpose()) * 0.5;
        let j = autonomous_performance(&abar, &qbar, xbar, tol)?;
        per_mode.push(ModeCost { index: i + 1, lambda, j, hurwitz_margin: -abscissa });
    }
    let j: f64 = per_mode.iter().map(|m| m.j).sum();

    let bound_value = match p {
        Some(p) => {
            ensure_shape(p, n, n, "P")?;
            Some(admissibility(p, x0, budget)?.bound_value)
        }
        None => None,
    };
    Ok(CostCertificate { j, per_mode, bound_value, gamma, margin: gamma - j })
}
