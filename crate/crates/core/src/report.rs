//! JSON-facing summaries of certificates and spectra.

use serde::{Deserialize, Serialize};

use crate::dual::{Certificate, Status};
use crate::error::{Error, Result};
use crate::graph::PoseAssignment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub id: i64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub newton_iterations: usize,
    pub outer_iterations: usize,
    pub barrier_final: f64,
    pub converged: bool,
    pub short_circuit: bool,
    pub zero_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub status: String,
    pub szep: bool,
    pub zero_count: usize,
    pub dual_value: f64,
    pub primal_value: f64,
    pub gap: f64,
    pub lambda: Vec<f64>,
    pub penalized_spectrum_head: Vec<f64>,
    pub poses: Vec<PoseRecord>,
    pub solver_stats: SolverStats,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Number of leading eigenvalues reported: `min(6, 2n − 1)`.
pub fn spectrum_head_len(node_count: usize) -> usize {
    6.min(2 * node_count - 1)
}

pub fn pose_records(poses: &PoseAssignment, ids: Option<&[i64]>) -> Vec<PoseRecord> {
    poses
        .poses()
        .iter()
        .enumerate()
        .map(|(i, p)| PoseRecord {
            id: ids.map_or(i as i64, |ids| ids[i]),
            x: p.x(),
            y: p.y(),
            theta: p.angle(),
        })
        .collect()
}

impl CertificateReport {
    /// `ids` maps node indices back to file ids; defaults to `0..n`.
    pub fn new(cert: &Certificate, ids: Option<&[i64]>) -> Result<Self> {
        let n = cert.estimate.node_count();
        if let Some(ids) = ids {
            if ids.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: ids.len(),
                });
            }
        }
        let dual = &cert.dual;
        let report = Self {
            status: match cert.status {
                Status::Optimal => "optimal",
                Status::Unknown => "unknown",
            }
            .into(),
            szep: cert.szep,
            zero_count: cert.zero_count,
            dual_value: cert.dual_value,
            primal_value: cert.primal_value,
            gap: cert.gap,
            lambda: dual.lambda.iter().copied().collect(),
            penalized_spectrum_head: dual.penalized_spectrum.head(spectrum_head_len(n)),
            poses: pose_records(&cert.estimate.realized, ids),
            solver_stats: SolverStats {
                newton_iterations: dual.iterations,
                outer_iterations: dual.outer_iterations,
                barrier_final: dual.barrier_final,
                converged: dual.converged,
                short_circuit: dual.short_circuit,
                zero_threshold: dual.penalized_spectrum.zero_threshold,
            },
            notes: cert.notes.clone(),
        };
        report.check_finite()?;
        Ok(report)
    }

    fn check_finite(&self) -> Result<()> {
        let scalars = [self.dual_value, self.primal_value, self.gap, self.solver_stats.barrier_final];
        let all = scalars
            .iter()
            .chain(&self.lambda)
            .chain(&self.penalized_spectrum_head)
            .chain(self.poses.iter().flat_map(|p| [&p.x, &p.y, &p.theta]));
        for v in all {
            if !v.is_finite() {
                return Err(Error::Numerical("certificate report contains a non-finite number".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }
}
