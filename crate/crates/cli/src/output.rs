use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use dlqr_core::analysis::{CostCertificate, GammaCertificate};
use dlqr_core::sim::Trajectory;
use dlqr_core::Matrix;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// `[[a, b], [c, d]]` with `digits` decimals.
pub fn matrix(m: &Matrix, digits: usize) -> String {
    let rows: Vec<String> = m
        .row_iter()
        .map(|r| format!("[{}]", r.iter().map(|v| format!("{v:.digits$}")).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::validation(format!("{}: cannot write: {e}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

/// CSV with columns `t, x_{i,j}..., consensus_error`; 17 significant digits.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory, consensus: &[f64]) -> CliResult<()> {
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        let n = traj.agent_dim;
        let mut header = vec!["t".to_string()];
        for i in 1..=traj.agent_count() {
            for j in 1..=n {
                header.push(format!("x_{i}_{j}"));
            }
        }
        header.push("consensus_error".into());
        writeln!(w, "{}", header.join(","))?;
        for ((t, x), e) in traj.times.iter().zip(&traj.states).zip(consensus) {
            write!(w, "{t:.16e}")?;
            for v in x.iter() {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w, ",{e:.16e}")?;
        }
        w.flush()
    };
    write().map_err(|e| io_error(path, e))
}

#[derive(Debug, Serialize)]
struct ModeRow {
    index: usize,
    lambda: f64,
    j: f64,
    hurwitz_margin: f64,
}

/// Serialized form of an analysis result.
#[derive(Debug, Serialize)]
pub struct CertificateFile {
    certified: bool,
    gamma: f64,
    j: f64,
    margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chain_holds: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    modes: Vec<ModeRow>,
}

impl CertificateFile {
    pub fn network(cert: &CostCertificate) -> Self {
        Self {
            certified: cert.certified(),
            gamma: cert.gamma,
            j: cert.j,
            margin: cert.margin,
            bound_value: cert.bound_value,
            chain_holds: cert.chain_holds(),
            witness_epsilon: None,
            modes: cert
                .per_mode
                .iter()
                .map(|m| ModeRow { index: m.index, lambda: m.lambda, j: m.j, hurwitz_margin: m.hurwitz_margin })
                .collect(),
        }
    }

    pub fn single(cert: &GammaCertificate, gamma: f64) -> Self {
        Self {
            certified: cert.certified,
            gamma,
            j: cert.j,
            margin: gamma - cert.j,
            bound_value: None,
            chain_holds: None,
            witness_epsilon: cert.witness_epsilon,
            modes: Vec::new(),
        }
    }

    pub fn certified(&self) -> bool {
        self.certified
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("certificate fields are plain numbers")
    }
}
