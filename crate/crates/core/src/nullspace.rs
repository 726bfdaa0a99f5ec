//! Fallback estimates when the zero eigenvalue of `W̃(λ⋆)` is not simple:
//! the convex program over the null space and the eigenvector heuristic.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dual::PoseEstimate;
use crate::error::{Error, Result};
use crate::spectral::SpectrumReport;

/// Which rows of `Ṽz` enter the linear objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveRows {
    #[default]
    All,
    RotationsOnly,
}

/// `max Σᵢ Re(Ṽᵢz) + Im(Ṽᵢz)  s.t. |Ṽᵢz|² ≤ 1` on the rotation rows.
#[derive(Debug, Clone)]
pub struct NullSpaceProgram {
    basis: DMatrix<Complex64>,
    node_count: usize,
    pub objective_rows: ObjectiveRows,
}

#[derive(Debug, Clone)]
pub struct NullSpaceSolution {
    pub z: DVector<Complex64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Real coefficient rows `(a, b)` with `Re(Ṽᵢz) = a·y`, `Im(Ṽᵢz) = b·y` for
/// `y = [Re z; Im z]`.
fn real_rows(row: &[Complex64]) -> (DVector<f64>, DVector<f64>) {
    let q = row.len();
    let a = DVector::from_fn(2 * q, |k, _| if k < q { row[k].re } else { -row[k - q].im });
    let b = DVector::from_fn(2 * q, |k, _| if k < q { row[k].im } else { row[k - q].re });
    (a, b)
}

impl NullSpaceProgram {
    /// Checks the shape and that the rotation rows of the basis have full
    /// column rank, without which the objective is unbounded.
    pub fn new(basis: DMatrix<Complex64>, node_count: usize) -> Result<Self> {
        let d = 2 * node_count - 1;
        if basis.nrows() != d || basis.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "null-space basis must be {d}xq with q >= 1, got {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let rot = basis.rows(node_count - 1, node_count).into_owned();
        let sv = rot.singular_values();
        let smax = sv.max();
        if sv.min() <= 1e-10 * smax.max(1e-300) || basis.ncols() > node_count {
            return Err(Error::UnboundedObjective);
        }
        Ok(Self {
            basis,
            node_count,
            objective_rows: ObjectiveRows::All,
        })
    }

    pub fn with_objective_rows(mut self, rows: ObjectiveRows) -> Self {
        self.objective_rows = rows;
        self
    }

    pub fn basis(&self) -> &DMatrix<Complex64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    fn rows(&self, i: usize) -> (DVector<f64>, DVector<f64>) {
        let row: Vec<Complex64> = self.basis.row(i).iter().copied().collect();
        real_rows(&row)
    }

    /// Objective coefficient `c` with `objective = c·y`.
    fn objective_vector(&self) -> DVector<f64> {
        let first = match self.objective_rows {
            ObjectiveRows::All => 0,
            ObjectiveRows::RotationsOnly => self.node_count - 1,
        };
        let mut c = DVector::zeros(2 * self.dim());
        for i in first..self.basis.nrows() {
            let (a, b) = self.rows(i);
            c += a + b;
        }
        c
    }

    pub fn objective(&self, z: &DVector<Complex64>) -> f64 {
        let first = match self.objective_rows {
            ObjectiveRows::All => 0,
            ObjectiveRows::RotationsOnly => self.node_count - 1,
        };
        let x = &self.basis * z;
        x.iter().skip(first).map(|v| v.re + v.im).sum()
    }

    /// Largest `|Ṽᵢz|` over the rotation rows.
    pub fn max_constraint(&self, z: &DVector<Complex64>) -> f64 {
        let x = &self.basis * z;
        x.iter().skip(self.node_count - 1).map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Log-barrier Newton method over the `2q` real coordinates, started at
    /// `z = 0`.
    pub fn solve(&self) -> Result<NullSpaceSolution> {
        let q = self.dim();
        let c = self.objective_vector();
        let constraints: Vec<_> = (self.node_count - 1..self.basis.nrows()).map(|i| self.rows(i)).collect();
        let m = constraints.len() as f64;

        let slack = |y: &DVector<f64>| -> Vec<f64> {
            constraints
                .iter()
                .map(|(a, b)| 1.0 - a.dot(y).powi(2) - b.dot(y).powi(2))
                .collect()
        };
        let barrier = |y: &DVector<f64>, t: f64| -> f64 {
            let s = slack(y);
            if s.iter().any(|&v| v <= 0.0) {
                return f64::NEG_INFINITY;
            }
            t * c.dot(y) + s.iter().map(|v| v.ln()).sum::<f64>()
        };
        let gradient = |y: &DVector<f64>, t: f64| -> (DVector<f64>, DMatrix<f64>) {
            let mut g = &c * t;
            let mut h = DMatrix::zeros(2 * q, 2 * q);
            for (a, b) in &constraints {
                let (ay, by) = (a.dot(y), b.dot(y));
                let s = 1.0 - ay * ay - by * by;
                let gs = (a * ay + b * by) * -2.0;
                g += &gs / s;
                h -= &gs * gs.transpose() / (s * s);
                h -= (a * a.transpose() + b * b.transpose()) * (2.0 / s);
            }
            (g, h)
        };

        let scale = 1.0 + c.norm();
        let mut y = DVector::zeros(2 * q);
        let mut t = 1.0 / scale;
        let mut iterations = 0;
        for _ in 0..80 {
            let mut prev_decrement = f64::INFINITY;
            for _ in 0..100 {
                let (g, h) = gradient(&y, t);
                let neg = -h;
                let step = Cholesky::new(neg.clone())
                    .map(|ch| ch.solve(&g))
                    .or_else(|| neg.lu().solve(&g))
                    .ok_or(Error::UnboundedObjective)?;
                let decrement = g.dot(&step);
                iterations += 1;
                if decrement < 1e-24 || (decrement < 0.0625 && decrement >= prev_decrement) {
                    break;
                }
                prev_decrement = decrement;
                // Inside the quadratic convergence region the full step is
                // feasible; line search values are dominated by rounding there.
                let f0 = barrier(&y, t);
                let mut alpha = 1.0;
                while decrement >= 0.0625 && barrier(&(&y + &step * alpha), t) < f0 + 0.25 * alpha * decrement {
                    alpha *= 0.5;
                    if alpha < 1e-14 {
                        break;
                    }
                }
                if alpha < 1e-14 || !barrier(&(&y + &step * alpha), t).is_finite() {
                    break;
                }
                y += &step * alpha;
            }
            let objective = c.dot(&y);
            if m / t <= 1e-9 * (1.0 + objective.abs()) {
                break;
            }
            t *= 10.0;
        }
        let z = DVector::from_fn(q, |k, _| Complex64::new(y[k], y[q + k]));
        let objective = c.dot(&y);
        // Multipliers fitted by least squares on the near-active rows; the
        // barrier estimates 1/(t·sᵢ) lose precision as sᵢ → 0.
        let s = slack(&y);
        let active: Vec<usize> = (0..constraints.len()).filter(|&i| s[i] <= 1e-6).collect();
        let mut grads = DMatrix::zeros(2 * q, active.len());
        for (col, &i) in active.iter().enumerate() {
            let (a, b) = &constraints[i];
            grads.set_column(col, &((a * a.dot(&y) + b * b.dot(&y)) * 2.0));
        }
        let stationarity = if active.is_empty() {
            c.norm()
        } else {
            let nu = grads
                .clone()
                .svd(true, true)
                .solve(&c, 1e-12)
                .map_err(|e| Error::Numerical(e.into()))?;
            let wrong_sign: f64 = nu.iter().map(|v| (-v).max(0.0)).sum();
            let comp: f64 = active.iter().zip(nu.iter()).map(|(&i, v)| (v * s[i]).abs()).sum();
            (&c - &grads * &nu).norm() + wrong_sign + comp
        };
        let kkt_residual = stationarity + m / t;
        if !objective.is_finite() {
            return Err(Error::UnboundedObjective);
        }
        Ok(NullSpaceSolution {
            z,
            objective,
            kkt_residual,
            iterations,
        })
    }
}

/// Divides every rotation entry by its modulus; positions are left as is.
pub fn normalize_estimate(x: &DVector<Complex64>, node_count: usize) -> Result<PoseEstimate> {
    if x.len() != 2 * node_count - 1 {
        return Err(Error::LengthMismatch {
            expected: 2 * node_count - 1,
            got: x.len(),
        });
    }
    let o = node_count - 1;
    let mut y = x.clone();
    for i in 0..node_count {
        let r = y[o + i].norm();
        if r.is_nan() || r < 1e-12 {
            return Err(Error::ZeroRotationEntry { index: i });
        }
        y[o + i] /= r;
    }
    PoseEstimate::from_stacked(&y, node_count)
}

/// Normalizes the first zero eigenvector of `W̃(λ⋆)` row by row.
pub fn eigenvector_heuristic(penalized: &SpectrumReport, node_count: usize) -> Result<PoseEstimate> {
    if penalized.zero_count == 0 {
        return Err(Error::EmptyNullSpace {
            threshold: penalized.zero_threshold,
        });
    }
    normalize_estimate(&penalized.eigenvectors.column(0).into_owned(), node_count)
}
