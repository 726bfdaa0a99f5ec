//! Dual problem `max Σλ s.t. W̃ − diag(0, λ) ⪰ 0`, SZEP classification,
//! recovery of the optimal estimate and the end-to-end certificate.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{PoseAssignment, PoseGraph};
use crate::matrices::{build_complex_matrix, ComplexPoseGraphMatrix};
use crate::nullspace::{normalize_estimate, NullSpaceProgram};
use crate::pose::Pose2D;
use crate::spectral::{classify_zeros, hermitian_eigen, SpectrumReport, DEFAULT_ZERO_THRESHOLD_SCALE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DualOptions {
    pub eps_dual: f64,
    /// `t₀ = t0_scale · trace(W̃) / n`.
    pub t0_scale: f64,
    pub max_newton: usize,
    pub max_outer: usize,
    pub zero_threshold_scale: f64,
    /// Rotate the recovered estimate so that `r̂₀ = 1`.
    pub gauge_fix: bool,
}

impl Default for DualOptions {
    fn default() -> Self {
        Self {
            eps_dual: 1e-8,
            t0_scale: 0.1,
            max_newton: 100,
            max_outer: 60,
            zero_threshold_scale: DEFAULT_ZERO_THRESHOLD_SCALE,
            gauge_fix: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub lambda: DVector<f64>,
    pub dual_value: f64,
    pub penalized: DMatrix<Complex64>,
    pub penalized_spectrum: SpectrumReport,
    /// Newton steps.
    pub iterations: usize,
    pub outer_iterations: usize,
    /// Final barrier weight `t`.
    pub barrier_final: f64,
    pub converged: bool,
    /// `λ = 0` was returned without running the barrier.
    pub short_circuit: bool,
    /// `Σλ` after each outer iteration.
    pub outer_values: Vec<f64>,
    pub node_count: usize,
}

impl DualSolution {
    pub fn mu_max(&self) -> f64 {
        self.penalized_spectrum.max_eigenvalue()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Szep {
    Single,
    Multiple(usize),
}

impl Szep {
    pub fn holds(self) -> bool {
        self == Szep::Single
    }

    pub fn zero_count(self) -> usize {
        match self {
            Szep::Single => 1,
            Szep::Multiple(q) => q,
        }
    }
}

/// Anchored positions `ρ̃`, unit-modulus rotations `r̃` and the realized poses
/// (node 0 at the origin).
#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    pub anchored_positions: DVector<Complex64>,
    pub rotations: DVector<Complex64>,
    pub realized: PoseAssignment,
}

impl PoseEstimate {
    /// Splits `x̃ = [ρ̃; r̃]`; the rotation entries must already have unit
    /// modulus.
    pub fn from_stacked(x: &DVector<Complex64>, node_count: usize) -> Result<Self> {
        if x.len() != 2 * node_count - 1 {
            return Err(Error::LengthMismatch {
                expected: 2 * node_count - 1,
                got: x.len(),
            });
        }
        let o = node_count - 1;
        let anchored_positions = x.rows(0, o).into_owned();
        let rotations = x.rows(o, node_count).into_owned();
        let realized = PoseAssignment(
            (0..node_count)
                .map(|i| {
                    let p = if i == 0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        anchored_positions[i - 1]
                    };
                    Pose2D::new(p.re, p.im, rotations[i].arg())
                })
                .collect(),
        );
        Ok(Self {
            anchored_positions,
            rotations,
            realized,
        })
    }

    pub fn node_count(&self) -> usize {
        self.rotations.len()
    }

    pub fn stacked(&self) -> DVector<Complex64> {
        let o = self.anchored_positions.len();
        DVector::from_fn(o + self.rotations.len(), |i, _| {
            if i < o {
                self.anchored_positions[i]
            } else {
                self.rotations[i - o]
            }
        })
    }

    /// Multiplies the whole estimate by the unit phase that makes `r̂₀ = 1`.
    pub fn gauge_fixed(&self) -> Self {
        let phase = self.rotations[0].conj() / self.rotations[0].norm();
        let x = self.stacked() * phase;
        Self::from_stacked(&x, self.node_count()).expect("same shape")
    }

    pub fn max_modulus_error(&self) -> f64 {
        self.rotations
            .iter()
            .map(|r| (r.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `W̃(λ)`: subtracts `λᵢ` from rotation diagonal entry `n−1+i`.
pub fn penalized_matrix(w: &ComplexPoseGraphMatrix, lambda: &[f64]) -> Result<DMatrix<Complex64>> {
    let n = w.node_count();
    if lambda.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: lambda.len(),
        });
    }
    let mut m = w.entries.clone();
    let o = w.rotation_offset();
    for (i, l) in lambda.iter().enumerate() {
        m[(o + i, o + i)] -= Complex64::new(*l, 0.0);
    }
    Ok(m)
}

/// Cholesky factorization that fails on any non-positive real pivot. The
/// generic complex version takes complex square roots of negative pivots and
/// so never reports indefiniteness.
fn hermitian_cholesky(m: &DMatrix<Complex64>) -> Option<Cholesky<Complex64, Dyn>> {
    let d = m.nrows();
    let mut l = DMatrix::<Complex64>::zeros(d, d);
    for j in 0..d {
        let pivot = m[(j, j)].re - (0..j).map(|k| l[(j, k)].norm_sqr()).sum::<f64>();
        if pivot.is_nan() || pivot <= 0.0 {
            return None;
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..d {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(Cholesky::pack_dirty(l))
}

fn log_det(chol: &Cholesky<Complex64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>()
}

fn rotation_moduli_spread(v: &DVector<Complex64>, offset: usize) -> (f64, f64) {
    let moduli: Vec<f64> = v.rows(offset, v.len() - offset).iter().map(|z| z.norm()).collect();
    let mean = moduli.iter().sum::<f64>() / moduli.len() as f64;
    let spread = moduli.iter().map(|m| (m - mean).abs()).fold(0.0, f64::max);
    (mean, if mean > 0.0 { spread / mean } else { f64::INFINITY })
}

/// Maximizes `Σλ` subject to `W̃(λ) ⪰ 0` by log-det barrier path following.
pub fn solve_dual(w: &ComplexPoseGraphMatrix, opts: &DualOptions) -> Result<DualSolution> {
    let n = w.node_count();
    let d = w.dim();
    let o = w.rotation_offset();
    let spectrum = hermitian_eigen(&w.entries)?;
    let mu_max = spectrum.max_eigenvalue();
    if spectrum.min_eigenvalue() < -1e-9 * (1.0 + mu_max) {
        return Err(Error::NotPsdInput {
            min_eigenvalue: spectrum.min_eigenvalue(),
        });
    }

    let finish = |lambda: DVector<f64>, iterations, outer_iterations, t, converged, short_circuit, outer_values| {
        let penalized = penalized_matrix(w, lambda.as_slice())?;
        let penalized_spectrum = hermitian_eigen(&penalized)?.reclassified(opts.zero_threshold_scale);
        Ok(DualSolution {
            dual_value: lambda.sum(),
            lambda,
            penalized,
            penalized_spectrum,
            iterations,
            outer_iterations,
            barrier_final: t,
            converged,
            short_circuit,
            outer_values,
            node_count: n,
        })
    };

    // A simple zero with an equal-modulus rotation part already certifies
    // λ = 0 (trees and balanced graphs).
    let z = classify_zeros(&spectrum, opts.zero_threshold_scale);
    if z.zero_count == 1 {
        let v = spectrum.eigenvectors.column(0).into_owned();
        let (mean, spread) = rotation_moduli_spread(&v, o);
        if mean > 1e-12 && spread <= 1e-6 {
            return finish(DVector::zeros(n), 0, 0, 0.0, true, true, vec![0.0]);
        }
    }

    let trace = w.trace();
    let mut lambda = DVector::from_element(n, -trace / d as f64);
    let mut t = opts.t0_scale * trace / n as f64;
    let mut iterations = 0;
    let mut outer_values = Vec::new();
    let mut converged = false;

    let barrier = |lambda: &DVector<f64>, t: f64| -> Option<(f64, Cholesky<Complex64, Dyn>)> {
        let m = penalized_matrix(w, lambda.as_slice()).ok()?;
        let chol = hermitian_cholesky(&m)?;
        Some((lambda.sum() + t * log_det(&chol), chol))
    };

    for outer in 0..opts.max_outer {
        for _ in 0..opts.max_newton {
            let (f0, chol) = barrier(&lambda, t)
                .ok_or_else(|| Error::Numerical("barrier iterate lost strict feasibility".into()))?;
            let inv = chol.inverse();
            let grad = DVector::from_fn(n, |i, _| 1.0 - t * inv[(o + i, o + i)].re);
            let hess = DMatrix::from_fn(n, n, |i, k| t * inv[(o + i, o + k)].norm_sqr());
            let step = match Cholesky::new(hess.clone()) {
                Some(h) => h.solve(&grad),
                None => hess
                    .lu()
                    .solve(&grad)
                    .ok_or_else(|| Error::Numerical("singular barrier Hessian".into()))?,
            };
            let decrement = grad.dot(&step);
            iterations += 1;
            let mut alpha = 1.0;
            loop {
                let trial = &lambda + &step * alpha;
                if let Some((f1, _)) = barrier(&trial, t) {
                    if f1 >= f0 + 0.25 * alpha * decrement {
                        lambda = trial;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-12 {
                    break;
                }
            }
            if decrement / 2.0 < 1e-12 * (1.0 + lambda.sum().abs()) || alpha < 1e-12 {
                break;
            }
        }
        outer_values.push(lambda.sum());
        if d as f64 * t < opts.eps_dual * (1.0 + lambda.sum().abs()) {
            converged = true;
            return finish(lambda, iterations, outer + 1, t, converged, false, outer_values);
        }
        t /= 10.0;
    }
    let outer = outer_values.len();
    finish(lambda, iterations, outer, t, converged, false, outer_values)
}

/// SZEP iff exactly one eigenvalue of `W̃(λ⋆)` is below the zero threshold.
pub fn classify_szep(sol: &DualSolution) -> Result<Szep> {
    match sol.penalized_spectrum.zero_count {
        0 => Err(Error::NoZeroEigenvalue {
            smallest: sol.penalized_spectrum.min_eigenvalue(),
        }),
        1 => Ok(Szep::Single),
        q => Ok(Szep::Multiple(q)),
    }
}

/// Scales the zero eigenvector of `W̃(λ⋆)` by the common modulus of its
/// rotation entries.
pub fn recover_optimal(sol: &DualSolution, gauge_fix: bool) -> Result<PoseEstimate> {
    let o = sol.node_count - 1;
    let v = sol.penalized_spectrum.eigenvectors.column(0).into_owned();
    let (gamma, spread) = rotation_moduli_spread(&v, o);
    if gamma.is_nan() || gamma <= 1e-12 {
        return Err(Error::ZeroModulus);
    }
    if spread > 1e-5 {
        return Err(Error::InconsistentModulus { spread });
    }
    let x = v / Complex64::new(gamma, 0.0);
    let estimate = normalize_estimate(&x, sol.node_count)?;
    Ok(if gauge_fix { estimate.gauge_fixed() } else { estimate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub status: Status,
    pub szep: bool,
    pub zero_count: usize,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub estimate: PoseEstimate,
    pub dual: DualSolution,
    pub notes: Vec<String>,
}

/// Builds `W̃`, solves the dual, and returns either the certified optimum
/// (SZEP) or the null-space estimate.
pub fn certify(graph: &PoseGraph, opts: &DualOptions) -> Result<Certificate> {
    let w = build_complex_matrix(graph)?;
    certify_matrix(&w, opts)
}

pub fn certify_matrix(w: &ComplexPoseGraphMatrix, opts: &DualOptions) -> Result<Certificate> {
    let n = w.node_count();
    let dual = solve_dual(w, opts)?;
    let szep = classify_szep(&dual)?;
    let mut notes = Vec::new();

    let recovered = if szep.holds() {
        match recover_optimal(&dual, false) {
            Ok(e) => Some(e),
            Err(err @ Error::InconsistentModulus { .. }) => {
                notes.push(format!("SZEP recovery failed ({err}); using the null-space estimate"));
                None
            }
            Err(err) => return Err(err),
        }
    } else {
        None
    };
    let certified = recovered.is_some();
    let estimate = match recovered {
        Some(e) => e,
        None => {
            let q = dual.penalized_spectrum.zero_count;
            let basis = dual.penalized_spectrum.eigenvectors.columns(0, q).into_owned();
            let z = NullSpaceProgram::new(basis.clone(), n)?.solve()?;
            normalize_estimate(&(basis * z.z), n)?
        }
    };
    let estimate = if opts.gauge_fix { estimate.gauge_fixed() } else { estimate };

    let primal_value = w.quadratic_form(&estimate.stacked());
    let dual_value = dual.dual_value;
    let gap = primal_value - dual_value;
    let tight = gap <= 1e-5 * (1.0 + primal_value.abs());
    if certified && !tight {
        notes.push(format!("SZEP holds but the gap {gap:e} exceeds tolerance"));
    }
    if !dual.converged {
        notes.push("dual solver hit its iteration limit".into());
    }
    let status = if certified && tight && dual.converged {
        Status::Optimal
    } else {
        Status::Unknown
    };
    Ok(Certificate {
        status,
        szep: szep.holds(),
        zero_count: szep.zero_count(),
        primal_value,
        dual_value,
        gap,
        estimate,
        dual,
        notes,
    })
}
