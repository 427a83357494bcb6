//! Suboptimal gain design.
//!
//! Every network design reduces to one `n`-dimensional Riccati equation
//!
//! ```text
//! AᵀP + PA - P B R̄⁻¹ Bᵀ P + Q̄ = 0,   R̄ = R / (2cμ - c²μ²),   Q̄ = νQ + εI,
//! ```
//!
//! whose stabilizing solution satisfies the strict Riccati inequality
//! `AᵀP + PA + (c²μ² - 2cμ) P B R⁻¹ Bᵀ P + νQ < 0` with margin `ε`. The
//! pair `(μ, ν)` depends on the method and on which spectral data is
//! available (exact eigenvalues or bounds on them). The local gain is
//! `K = -c R⁻¹ Bᵀ P` and the network law is `u = (L ⊗ K) x`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::disagreement_projector;
use crate::matops::{
    ensure_finite, ensure_shape, ensure_square, ensure_symmetric, is_stabilizable, max_eigenvalue,
    psd_check, solve_care, symmetrize, Matrix, Vector,
};
use crate::tolerance::Tolerances;

/// Relative offset used to pick an interior point of an open interval.
pub const OPEN_ENDPOINT_OFFSET: f64 = 1e-6;

/// Default `ε` for the shifted Riccati equation.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Relative slack on the closed endpoint `2/(λ₂+λ_N)`, so that a value
/// equal to it up to rounding is accepted.
const CLOSED_ENDPOINT_SLACK: f64 = 1e-12;

/// Linear agent `ẋ = Ax + Bu`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentDynamics {
    pub a: Matrix,
    pub b: Matrix,
}

impl AgentDynamics {
    /// Validates dimensions, finiteness and PBH stabilizability.
    pub fn new(a: Matrix, b: Matrix, tol: &Tolerances) -> Result<Self> {
        ensure_finite(&a, "A")?;
        ensure_finite(&b, "B")?;
        let n = ensure_square(&a, "A")?;
        if n == 0 || b.nrows() != n || b.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "A is {n}x{n} but B is {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        if !is_stabilizable(&a, &b, tol)? {
            return Err(Error::NotStabilizable);
        }
        Ok(Self { a, b })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// Weights of `∫ xᵀ(L⊗Q)x + uᵀ(I⊗R)u dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    pub q: Matrix,
    pub r: Matrix,
}

impl CostWeights {
    /// `Q` must be symmetric PSD and `R` symmetric PD.
    pub fn new(q: Matrix, r: Matrix, tol: &Tolerances) -> Result<Self> {
        ensure_finite(&q, "Q")?;
        ensure_finite(&r, "R")?;
        ensure_square(&q, "Q")?;
        ensure_square(&r, "R")?;
        ensure_symmetric(&q, "Q", tol)?;
        ensure_symmetric(&r, "R", tol)?;
        let (psd, min_eig) = psd_check(&q, tol)?;
        if !psd {
            return Err(Error::NotPsd { what: "Q", min_eig });
        }
        if r.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite { what: "R" });
        }
        Ok(Self { q: symmetrize(&q), r: symmetrize(&r) })
    }

    fn check_against(&self, dynamics: &AgentDynamics) -> Result<()> {
        ensure_shape(&self.q, dynamics.state_dim(), dynamics.state_dim(), "Q")?;
        ensure_shape(&self.r, dynamics.input_dim(), dynamics.input_dim(), "R")
    }
}

/// Gain design method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Single system, `K = -R⁻¹BᵀP`.
    SingleSystem,
    /// Exact `λ₂, λ_N`; `c ∈ [2/(λ₂+λ_N), 2/λ_N)`.
    ExactSpectrumUpper,
    /// Exact `λ₂, λ_N`; `c ∈ (0, 2/(λ₂+λ_N))`.
    ExactSpectrumLower,
    /// Bounds `l₂ ≤ λ₂`, `L_N ≥ λ_N`; `c ∈ [2/(l₂+L_N), 2/L_N)`.
    BoundsUpper,
    /// Bounds `l₂ ≤ λ₂`, `L_N ≥ λ_N`; `c ∈ (0, 2/(l₂+L_N))`.
    BoundsLower,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::SingleSystem,
        Method::ExactSpectrumUpper,
        Method::ExactSpectrumLower,
        Method::BoundsUpper,
        Method::BoundsLower,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::SingleSystem => "single",
            Method::ExactSpectrumUpper => "thm3",
            Method::ExactSpectrumLower => "thm4",
            Method::BoundsUpper => "thm5-upper",
            Method::BoundsLower => "thm5-lower",
        }
    }

    pub fn uses_bounds(self) -> bool {
        matches!(self, Method::BoundsUpper | Method::BoundsLower)
    }

    fn is_upper(self) -> bool {
        matches!(self, Method::ExactSpectrumUpper | Method::BoundsUpper)
    }

    /// `(μ, ν)`: the eigenvalue in the Riccati coefficient and the one
    /// scaling `Q`.
    fn riccati_pair(self, s: SpectralInputs) -> Result<(f64, f64)> {
        match self {
            Method::SingleSystem => Err(Error::InvalidInput {
                field: "method",
                reason: "single-system design has no spectral data; use design_gain_single".into(),
            }),
            Method::ExactSpectrumUpper | Method::BoundsUpper => Ok((s.upper, s.upper)),
            Method::ExactSpectrumLower | Method::BoundsLower => Ok((s.lower, s.upper)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::InvalidInput {
                field: "method",
                reason: format!("unknown method `{s}` (expected thm3, thm4, thm5-upper, thm5-lower or single)"),
            })
    }
}

/// The spectral pair a design is based on: `(λ₂, λ_N)` for exact methods,
/// `(l₂, L_N)` for bound-based ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralInputs {
    pub lower: f64,
    pub upper: f64,
}

impl SpectralInputs {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_finite() && upper.is_finite() && 0.0 < lower && lower <= upper {
            Ok(Self { lower, upper })
        } else {
            Err(Error::InvalidSpectralData { lower, upper })
        }
    }
}

/// Admissible range for the coupling scalar `c`. The upper end is always
/// open; the lower end is closed for upper-style methods and `0` (open)
/// for lower-style ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CInterval {
    pub lower: f64,
    pub upper: f64,
    pub closed_lower: bool,
}

impl CInterval {
    pub fn contains(&self, c: f64) -> bool {
        let above = if self.closed_lower {
            c >= self.lower * (1.0 - CLOSED_ENDPOINT_SLACK)
        } else {
            c > self.lower
        };
        c.is_finite() && above && c < self.upper
    }

    /// Left endpoint for closed intervals, `(1-δ)` times the right
    /// endpoint for open ones.
    pub fn default_c(&self) -> f64 {
        if self.closed_lower {
            self.lower
        } else {
            (1.0 - OPEN_ENDPOINT_OFFSET) * self.upper
        }
    }
}

impl fmt::Display for CInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.closed_lower { '[' } else { '(' };
        write!(f, "{open}{}, {})", self.lower, self.upper)
    }
}

pub fn c_interval(method: Method, lower: f64, upper: f64) -> Result<CInterval> {
    let s = SpectralInputs::new(lower, upper)?;
    let split = 2.0 / (s.lower + s.upper);
    match method {
        Method::SingleSystem => Err(Error::InvalidInput {
            field: "method",
            reason: "single-system design has a fixed c = 1".into(),
        }),
        m if m.is_upper() => Ok(CInterval { lower: split, upper: 2.0 / s.upper, closed_lower: true }),
        _ => Ok(CInterval { lower: 0.0, upper: split, closed_lower: false }),
    }
}

/// Result of a gain design.
#[derive(Debug, Clone, PartialEq)]
pub struct GainDesign {
    pub method: Method,
    pub c: f64,
    pub epsilon: f64,
    pub p: Matrix,
    pub k: Matrix,
    /// `None` for single-system designs.
    pub spectral_inputs: Option<SpectralInputs>,
}

/// Budget `γ` on the global cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisBudget {
    gamma: f64,
}

impl SynthesisBudget {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 0.0 {
            Ok(Self { gamma })
        } else {
            Err(Error::InvalidInput { field: "gamma", reason: format!("must be positive, got {gamma}") })
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// `K = -c R⁻¹ Bᵀ P`.
pub fn local_gain(b: &Matrix, r: &Matrix, p: &Matrix, c: f64) -> Result<Matrix> {
    let chol = r.clone().cholesky().ok_or(Error::NotPositiveDefinite { what: "R" })?;
    Ok(chol.solve(&(b.transpose() * p)) * -c)
}

/// `AᵀP + PA + κ P B R⁻¹ Bᵀ P + νQ` together with a scale for the
/// strictness margin.
pub fn riccati_inequality_lhs(
    dynamics: &AgentDynamics,
    weights: &CostWeights,
    p: &Matrix,
    kappa: f64,
    nu: f64,
) -> Result<(Matrix, f64)> {
    let a = &dynamics.a;
    let lyap_part = a.transpose() * p + p * a;
    let gain_part = p * &dynamics.b * local_gain(&dynamics.b, &weights.r, p, -1.0)?;
    let q_part = &weights.q * nu;
    let scale = (lyap_part.norm() + kappa.abs() * gain_part.norm() + q_part.norm()).max(1.0);
    Ok((symmetrize(&(lyap_part + gain_part * kappa + q_part)), scale))
}

fn verify_strict(lhs: &Matrix, scale: f64, tol: &Tolerances) -> Result<()> {
    let max_eig = max_eigenvalue(lhs, tol)?;
    let required = -tol.strict * scale;
    if max_eig <= required {
        Ok(())
    } else {
        Err(Error::InequalityNotStrict { max_eig, required })
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput { field: "epsilon", reason: format!("must be positive, got {epsilon}") })
    }
}

/// Network gain design for the exact-spectrum and bound-based methods.
///
/// `c = None` selects the default coupling of [`CInterval::default_c`].
pub fn design_gain(
    dynamics: &AgentDynamics,
    weights: &CostWeights,
    method: Method,
    spectral: SpectralInputs,
    c: Option<f64>,
    epsilon: f64,
    tol: &Tolerances,
) -> Result<GainDesign> {
    weights.check_against(dynamics)?;
    check_epsilon(epsilon)?;
    let (mu, nu) = method.riccati_pair(spectral)?;
    let interval = c_interval(method, spectral.lower, spectral.upper)?;
    let c = c.unwrap_or_else(|| interval.default_c());
    if !interval.contains(c) {
        return Err(Error::COutOfRange { c, interval: interval.to_string() });
    }

    let n = dynamics.state_dim();
    let kappa = c * c * mu * mu - 2.0 * c * mu;
    let rbar = &weights.r / (-kappa);
    let qbar = &weights.q * nu + Matrix::identity(n, n) * epsilon;
    let p = solve_care(&dynamics.a, &dynamics.b, &rbar, &qbar, tol)?;
    let k = local_gain(&dynamics.b, &weights.r, &p, c)?;

    let (lhs, scale) = riccati_inequality_lhs(dynamics, weights, &p, kappa, nu)?;
    verify_strict(&lhs, scale, tol)?;

    Ok(GainDesign { method, c, epsilon, p, k, spectral_inputs: Some(spectral) })
}

/// Single-system design: `P` solves the CARE with `Q + εI`, `K = -R⁻¹BᵀP`,
/// and the design is returned only if `x₀ᵀPx₀ < γ`.
pub fn design_gain_single(
    dynamics: &AgentDynamics,
    weights: &CostWeights,
    x0: &Vector,
    budget: SynthesisBudget,
    epsilon: f64,
    tol: &Tolerances,
) -> Result<GainDesign> {
    weights.check_against(dynamics)?;
    check_epsilon(epsilon)?;
    let n = dynamics.state_dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!("x0 has length {}, expected {n}", x0.len())));
    }
    let qbar = &weights.q + Matrix::identity(n, n) * epsilon;
    let p = solve_care(&dynamics.a, &dynamics.b, &weights.r, &qbar, tol)?;
    let k = local_gain(&dynamics.b, &weights.r, &p, 1.0)?;

    let (lhs, scale) = riccati_inequality_lhs(dynamics, weights, &p, -1.0, 1.0)?;
    verify_strict(&lhs, scale, tol)?;

    let value = x0.dot(&(&p * x0));
    if value >= budget.gamma() {
        return Err(Error::BudgetInfeasible { value, gamma: budget.gamma() });
    }
    Ok(GainDesign { method: Method::SingleSystem, c: 1.0, epsilon, p, k, spectral_inputs: None })
}

/// Initial-state admissibility `x₀ᵀ(Π ⊗ P)x₀ < γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    /// Kronecker form `x₀ᵀ(Π ⊗ P)x₀`.
    pub bound_value: f64,
    /// Pairwise form `(1/N) Σ_{i<j} (xᵢ-xⱼ)ᵀP(xᵢ-xⱼ)`.
    pub pairwise_value: f64,
}

/// Evaluates both forms of the admissibility quadratic; `x0` is the stacked
/// network state of length `n·N`.
pub fn admissibility(p: &Matrix, x0: &Vector, budget: SynthesisBudget) -> Result<Admissibility> {
    let n = ensure_square(p, "P")?;
    if n == 0 || x0.is_empty() || !x0.len().is_multiple_of(n) {
        return Err(Error::DimensionMismatch(format!(
            "x0 has length {}, not a multiple of the agent dimension {n}",
            x0.len()
        )));
    }
    let agents = x0.len() / n;
    let projector = disagreement_projector(agents).kronecker(p);
    let bound_value = x0.dot(&(projector * x0));

    let mut pairwise = 0.0;
    for i in 0..agents {
        for j in (i + 1)..agents {
            let d = x0.rows(i * n, n) - x0.rows(j * n, n);
            pairwise += d.dot(&(p * &d));
        }
    }
    let pairwise_value = pairwise / agents as f64;

    Ok(Admissibility { admissible: bound_value < budget.gamma(), bound_value, pairwise_value })
}
