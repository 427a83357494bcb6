/// Numerical tolerances shared by every kernel.
///
/// All relative tolerances are scaled by Frobenius norms of the operands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative symmetry defect accepted for symmetric inputs.
    pub sym: f64,
    /// Relative reconstruction error of the symmetric eigendecomposition.
    pub eig: f64,
    /// Relative Lyapunov residual.
    pub lyap: f64,
    /// Relative CARE residual, scaled by `max(1, ‖P‖²)`.
    pub care: f64,
    /// Relative slack on the minimum eigenvalue of a PSD matrix.
    pub psd: f64,
    /// Absolute margin: Hurwitz means max real part `< -hurwitz`.
    pub hurwitz: f64,
    /// Margin factor for strict matrix inequalities.
    pub strict: f64,
    /// PBH rank tolerance factor.
    pub rank: f64,
    /// Connectedness tolerance factor, relative to `lambda_N`.
    pub conn: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sym: 1e-10,
            eig: 1e-10,
            lyap: 1e-9,
            care: 1e-8,
            psd: 1e-10,
            hurwitz: 1e-9,
            strict: 1e-9,
            rank: 1e-8,
            conn: 1e-8,
        }
    }
}

impl Tolerances {
    /// Applies overrides of the form `name=value[,name=value...]`.
    ///
    /// Recognised names are the field names of this struct.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self, String> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| format!("expected name=value, got `{item}`"))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| format!("bad value for `{}`: {e}", name.trim()))?;
            if !(value.is_finite() && value >= 0.0) {
                return Err(format!("tolerance `{}` must be finite and >= 0", name.trim()));
            }
            let slot = match name.trim() {
                "sym" => &mut self.sym,
                "eig" => &mut self.eig,
                "lyap" => &mut self.lyap,
                "care" => &mut self.care,
                "psd" => &mut self.psd,
                "hurwitz" => &mut self.hurwitz,
                "strict" => &mut self.strict,
                "rank" => &mut self.rank,
                "conn" => &mut self.conn,
                other => return Err(format!("unknown tolerance `{other}`")),
            };
            *slot = value;
        }
        Ok(self)
    }
}
