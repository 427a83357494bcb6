//! Problem and gain files.
//!
//! A problem file looks like
//!
//! ```toml
//! gamma = 3.0
//! method = "thm3"        # thm3 | thm4 | thm5-upper | thm5-lower | single
//! epsilon = 1e-3         # optional
//! c = 0.5                # optional
//! x0 = [[0.2, 0.1], [-0.3, 0.4]]   # one row per agent
//!
//! [dynamics]
//! a = [[0.0, 1.0], [-1.0, 0.0]]
//! b = [[0.0], [1.0]]
//!
//! [weights]
//! q = [[2.0, 0.0], [0.0, 1.0]]
//! r = [[1.0]]
//!
//! [graph]                # required unless method = "single"
//! nodes = 2
//! edges = [[1, 2]]
//!
//! [bounds]               # required for thm5-*
//! l2 = 1.0
//! ln = 3.0
//!
//! [simulation]           # optional
//! dt = 1e-3
//! horizon = 30.0
//!
//! [gain]                 # optional, used by analyze/simulate
//! k = [[-1.0, -2.0]]
//! ```

use std::ops::Range;
use std::path::Path;

use dlqr_core::graph::{spectrum, LaplacianSpectrum, UndirectedGraph};
use dlqr_core::sim::{DEFAULT_DT, DEFAULT_HORIZON};
use dlqr_core::synthesis::{
    AgentDynamics, CostWeights, GainDesign, Method, SpectralInputs, SynthesisBudget, DEFAULT_EPSILON,
};
use dlqr_core::{Error, Matrix, Tolerances, Vector};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{CliError, CliResult};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    gamma: Spanned<f64>,
    method: Option<Spanned<String>>,
    c: Option<Spanned<f64>>,
    epsilon: Option<Spanned<f64>>,
    x0: Spanned<Rows>,
    dynamics: RawDynamics,
    weights: RawWeights,
    graph: Option<RawGraph>,
    bounds: Option<RawBounds>,
    simulation: Option<RawSimulation>,
    gain: Option<RawGain>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDynamics {
    a: Spanned<Rows>,
    b: Spanned<Rows>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    q: Spanned<Rows>,
    r: Spanned<Rows>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    nodes: Spanned<usize>,
    edges: Spanned<Vec<[usize; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    l2: Spanned<f64>,
    ln: Spanned<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    dt: Option<Spanned<f64>>,
    horizon: Option<Spanned<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGain {
    k: Spanned<Rows>,
}

/// Values given on the command line; they replace the file's.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub method: Option<Method>,
    pub c: Option<f64>,
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
}

/// A validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub dynamics: AgentDynamics,
    pub weights: CostWeights,
    pub method: Method,
    pub gamma: f64,
    pub c: Option<f64>,
    pub epsilon: f64,
    /// `None` for single-system problems.
    pub spectrum: Option<LaplacianSpectrum>,
    pub bounds: Option<SpectralInputs>,
    /// Stacked initial state, agent by agent.
    pub x0: Vector,
    pub dt: f64,
    pub horizon: f64,
    pub gain: Option<Matrix>,
}

impl Problem {
    /// The spectral pair the configured method designs against.
    pub fn spectral_inputs(&self) -> Option<SpectralInputs> {
        if self.method.uses_bounds() {
            self.bounds
        } else {
            self.spectrum.as_ref().map(|s| SpectralInputs { lower: s.lambda2, upper: s.lambda_n })
        }
    }
}

/// Maps byte offsets to `file:line:column` prefixes.
struct Locator<'a> {
    file: String,
    source: &'a str,
}

impl Locator<'_> {
    fn at(&self, span: Range<usize>, key: &str) -> String {
        let before = &self.source[..span.start.min(self.source.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        format!("{}:{line}:{column}: `{key}`", self.file)
    }

    fn fail(&self, span: Range<usize>, key: &str, reason: impl std::fmt::Display) -> CliError {
        CliError::validation(format!("{}: {reason}", self.at(span, key)))
    }

    fn core(&self, span: Range<usize>, key: &str, err: Error) -> CliError {
        CliError::from_core(&self.at(span, key), err)
    }

    fn matrix(&self, rows: &Spanned<Rows>, key: &str) -> CliResult<Matrix> {
        let span = rows.span();
        let rows = rows.get_ref();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || ncols == 0 {
            return Err(self.fail(span, key, "matrix must have at least one row and one column"));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
            return Err(self.fail(
                span,
                key,
                format!("row {} has {} entries, expected {ncols}", i + 1, rows[i].len()),
            ));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(self.fail(span, key, "entries must be finite"));
        }
        Ok(Matrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().cloned()))
    }
}

fn positive(value: f64, what: &str) -> Result<f64, String> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(format!("{what} must be positive, got {value}"))
    }
}

pub fn load_problem(path: &Path, overrides: &Overrides, tol: &Tolerances) -> CliResult<Problem> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: cannot read config: {e}", path.display())))?;
    parse_problem(&path.display().to_string(), &source, overrides, tol)
}

pub fn parse_problem(file: &str, source: &str, overrides: &Overrides, tol: &Tolerances) -> CliResult<Problem> {
    let loc = Locator { file: file.to_string(), source };
    let raw: RawConfig = toml::from_str(source).map_err(|e| {
        let prefix = match e.span() {
            Some(span) => {
                let before = &source[..span.start.min(source.len())];
                format!("{file}:{}", before.matches('\n').count() + 1)
            }
            None => file.to_string(),
        };
        CliError::validation(format!("{prefix}: {}", e.message()))
    })?;

    let a = loc.matrix(&raw.dynamics.a, "dynamics.a")?;
    let b = loc.matrix(&raw.dynamics.b, "dynamics.b")?;
    let dynamics = AgentDynamics::new(a, b, tol).map_err(|e| loc.core(raw.dynamics.a.span(), "dynamics", e))?;
    let q = loc.matrix(&raw.weights.q, "weights.q")?;
    let r = loc.matrix(&raw.weights.r, "weights.r")?;
    let weights = CostWeights::new(q, r, tol).map_err(|e| loc.core(raw.weights.q.span(), "weights", e))?;
    if weights.q.nrows() != dynamics.state_dim() || weights.r.nrows() != dynamics.input_dim() {
        return Err(loc.fail(
            raw.weights.q.span(),
            "weights",
            format!(
                "Q must be {n}x{n} and R {m}x{m} to match the dynamics",
                n = dynamics.state_dim(),
                m = dynamics.input_dim()
            ),
        ));
    }

    let method = match (&overrides.method, &raw.method) {
        (Some(m), _) => *m,
        (None, Some(m)) => m.get_ref().parse().map_err(|e| loc.core(m.span(), "method", e))?,
        (None, None) => Method::ExactSpectrumUpper,
    };

    let gamma = match overrides.gamma {
        Some(g) => SynthesisBudget::new(g).map_err(|e| CliError::from_core("--gamma", e))?,
        None => SynthesisBudget::new(*raw.gamma.get_ref()).map_err(|e| loc.core(raw.gamma.span(), "gamma", e))?,
    }
    .gamma();

    let epsilon = match (overrides.epsilon, &raw.epsilon) {
        (Some(e), _) => positive(e, "epsilon").map_err(|m| CliError::validation(format!("--epsilon: {m}")))?,
        (None, Some(e)) => positive(*e.get_ref(), "epsilon").map_err(|m| loc.fail(e.span(), "epsilon", m))?,
        (None, None) => DEFAULT_EPSILON,
    };
    let c = match (overrides.c, &raw.c) {
        (Some(c), _) => Some(positive(c, "c").map_err(|m| CliError::validation(format!("--c: {m}")))?),
        (None, Some(c)) => Some(positive(*c.get_ref(), "c").map_err(|m| loc.fail(c.span(), "c", m))?),
        (None, None) => None,
    };
    if c.is_some() && method == Method::SingleSystem {
        return Err(CliError::validation("`c` is fixed to 1 for method `single`"));
    }

    let spectrum = match (&raw.graph, method) {
        (None, Method::SingleSystem) => None,
        (Some(g), Method::SingleSystem) => {
            return Err(loc.fail(g.nodes.span(), "graph", "method `single` designs for one agent; remove the graph section"));
        }
        (None, m) => {
            return Err(CliError::validation(format!("{file}: `graph` section is required for method `{m}`")));
        }
        (Some(g), _) => {
            let edges: Vec<(usize, usize)> = g.edges.get_ref().iter().map(|e| (e[0], e[1])).collect();
            let graph = UndirectedGraph::new(*g.nodes.get_ref(), &edges)
                .map_err(|e| loc.core(g.edges.span(), "graph.edges", e))?;
            Some(spectrum(&graph, tol).map_err(|e| loc.core(g.edges.span(), "graph", e))?)
        }
    };

    let bounds = match &raw.bounds {
        Some(bd) => Some(
            SpectralInputs::new(*bd.l2.get_ref(), *bd.ln.get_ref()).map_err(|e| loc.core(bd.l2.span(), "bounds", e))?,
        ),
        None if method.uses_bounds() => {
            return Err(CliError::validation(format!("{file}: `bounds` section is required for method `{method}`")));
        }
        None => None,
    };
    if let (Some(bd), Some(spec), Some(raw_bounds)) = (bounds, &spectrum, &raw.bounds) {
        if bd.lower > spec.lambda2 * (1.0 + 1e-12) || bd.upper < spec.lambda_n * (1.0 - 1e-12) {
            return Err(loc.fail(
                raw_bounds.l2.span(),
                "bounds",
                format!(
                    "need l2 <= lambda_2 = {} and ln >= lambda_N = {}, got ({}, {})",
                    spec.lambda2, spec.lambda_n, bd.lower, bd.upper
                ),
            ));
        }
    }

    let n = dynamics.state_dim();
    let agents = spectrum.as_ref().map_or(1, LaplacianSpectrum::node_count);
    let x0_rows = raw.x0.get_ref();
    if x0_rows.len() != agents {
        return Err(loc.fail(raw.x0.span(), "x0", format!("expected {agents} rows (one per agent), got {}", x0_rows.len())));
    }
    let x0 = loc.matrix(&raw.x0, "x0")?;
    if x0.ncols() != n {
        return Err(loc.fail(raw.x0.span(), "x0", format!("rows must have {n} entries, got {}", x0.ncols())));
    }
    let x0 = Vector::from_iterator(agents * n, x0_rows.iter().flatten().cloned());

    let sim = raw.simulation.as_ref();
    let dt = match (overrides.dt, sim.and_then(|s| s.dt.as_ref())) {
        (Some(v), _) => positive(v, "dt").map_err(|m| CliError::validation(format!("--dt: {m}")))?,
        (None, Some(v)) => positive(*v.get_ref(), "dt").map_err(|m| loc.fail(v.span(), "simulation.dt", m))?,
        (None, None) => DEFAULT_DT,
    };
    let horizon = match (overrides.horizon, sim.and_then(|s| s.horizon.as_ref())) {
        (Some(v), _) => positive(v, "horizon").map_err(|m| CliError::validation(format!("--horizon: {m}")))?,
        (None, Some(v)) => positive(*v.get_ref(), "horizon").map_err(|m| loc.fail(v.span(), "simulation.horizon", m))?,
        (None, None) => DEFAULT_HORIZON,
    };

    let gain = match &raw.gain {
        Some(g) => {
            let k = loc.matrix(&g.k, "gain.k")?;
            if k.shape() != (dynamics.input_dim(), n) {
                return Err(loc.fail(g.k.span(), "gain.k", format!("expected {}x{n}", dynamics.input_dim())));
            }
            Some(k)
        }
        None => None,
    };

    Ok(Problem {
        dynamics,
        weights,
        method,
        gamma,
        c,
        epsilon,
        spectrum,
        bounds,
        x0,
        dt,
        horizon,
        gain,
    })
}

/// Gain file written by `synthesize --out` and read by `--gain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainFile {
    pub method: String,
    pub c: f64,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_upper: Option<f64>,
    pub k: Rows,
    pub p: Rows,
}

fn rows_of(m: &Matrix) -> Rows {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

impl GainFile {
    pub fn from_design(design: &GainDesign) -> Self {
        Self {
            method: design.method.tag().to_string(),
            c: design.c,
            epsilon: design.epsilon,
            spectral_lower: design.spectral_inputs.map(|s| s.lower),
            spectral_upper: design.spectral_inputs.map(|s| s.upper),
            k: rows_of(&design.k),
            p: rows_of(&design.p),
        }
    }

    /// Rebuilds the design, checking shapes against the problem.
    pub fn to_design(&self, file: &str, dynamics: &AgentDynamics) -> CliResult<GainDesign> {
        let bad = |what: &str| CliError::validation(format!("{file}: {what}"));
        let matrix = |rows: &Rows, r: usize, c: usize, key: &str| -> CliResult<Matrix> {
            if rows.len() != r || rows.iter().any(|row| row.len() != c) {
                return Err(bad(&format!("`{key}` must be {r}x{c}")));
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(bad(&format!("`{key}` entries must be finite")));
            }
            Ok(Matrix::from_row_iterator(r, c, rows.iter().flatten().cloned()))
        };
        let (n, m) = (dynamics.state_dim(), dynamics.input_dim());
        let spectral_inputs = match (self.spectral_lower, self.spectral_upper) {
            (Some(l), Some(u)) => Some(SpectralInputs::new(l, u).map_err(|e| CliError::from_core(file, e))?),
            (None, None) => None,
            _ => return Err(bad("`spectral_lower` and `spectral_upper` must be given together")),
        };
        Ok(GainDesign {
            method: self.method.parse().map_err(|e| CliError::from_core(file, e))?,
            c: self.c,
            epsilon: self.epsilon,
            p: matrix(&self.p, n, n, "p")?,
            k: matrix(&self.k, m, n, "k")?,
            spectral_inputs,
        })
    }
}

pub fn read_gain(path: &Path, dynamics: &AgentDynamics) -> CliResult<GainDesign> {
    let file = path.display().to_string();
    let source =
        std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("{file}: cannot read gain file: {e}")))?;
    let raw: GainFile = toml::from_str(&source).map_err(|e| {
        let line = e.span().map(|s| source[..s.start.min(source.len())].matches('\n').count() + 1);
        let prefix = line.map_or(file.clone(), |l| format!("{file}:{l}"));
        CliError::validation(format!("{prefix}: {}", e.message()))
    })?;
    raw.to_design(&file, dynamics)
}
