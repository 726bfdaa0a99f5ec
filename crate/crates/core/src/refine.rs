//! Local refinement of the pose graph cost by Levenberg-Marquardt damped
//! Gauss-Newton, and the rotation-first spectral initializer.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dual::PoseEstimate;
use crate::error::{Error, Result};
use crate::graph::{evaluate_cost, PoseAssignment, PoseGraph};
use crate::matrices::{build_complex_matrix, ComplexPoseGraphMatrix};
use crate::pose::Pose2D;
use crate::spectral::hermitian_eigen;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub lm_mu0_scale: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-8,
            step_tol: 1e-10,
            lm_mu0_scale: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefinementResult {
    pub poses: PoseAssignment,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub step_norm_final: f64,
    pub gradient_norm: f64,
}

/// Stacked residuals (4 per edge: translation then rotation) and their
/// Jacobian with respect to `(x, y, θ)` of nodes `1..n`. Node 0 is held fixed.
pub fn residuals_and_jacobian(graph: &PoseGraph, poses: &PoseAssignment) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = graph.node_count();
    if poses.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: poses.len(),
        });
    }
    let m = graph.edge_count();
    let mut r = DVector::zeros(4 * m);
    let mut j = DMatrix::zeros(4 * m, 3 * (n - 1));
    let p = poses.poses();
    let col = |node: usize| (node > 0).then(|| 3 * (node - 1));
    for (k, e) in graph.edges().iter().enumerate() {
        let (pi, pj) = (&p[e.tail], &p[e.head]);
        let ri = pi.rotation_vector();
        let dri = Vector2::new(-ri.y, ri.x);
        let rj = pj.rotation_vector();
        let drj = Vector2::new(-rj.y, rj.x);
        let d = e.delta_matrix();
        let rot = e.rotation();
        let et = (pj.position - pi.position) - d * ri;
        let er = rj - rot * ri;
        r.fixed_rows_mut::<2>(4 * k).copy_from(&et);
        r.fixed_rows_mut::<2>(4 * k + 2).copy_from(&er);
        if let Some(c) = col(e.head) {
            j.fixed_view_mut::<2, 2>(4 * k, c).copy_from(&Matrix2::identity());
            j.fixed_view_mut::<2, 1>(4 * k + 2, c + 2).copy_from(&drj);
        }
        if let Some(c) = col(e.tail) {
            j.fixed_view_mut::<2, 2>(4 * k, c).copy_from(&(-Matrix2::identity()));
            j.fixed_view_mut::<2, 1>(4 * k, c + 2).copy_from(&(-(d * dri)));
            j.fixed_view_mut::<2, 1>(4 * k + 2, c + 2).copy_from(&(-(rot * dri)));
        }
    }
    Ok((r, j))
}

fn apply_step(poses: &PoseAssignment, step: &DVector<f64>) -> PoseAssignment {
    let mut out = poses.0.clone();
    for (i, pose) in out.iter_mut().enumerate().skip(1) {
        let c = 3 * (i - 1);
        *pose = Pose2D::new(pose.x() + step[c], pose.y() + step[c + 1], pose.angle() + step[c + 2]);
    }
    PoseAssignment(out)
}

/// Minimizes the pose graph cost from `initial`, keeping node 0 fixed.
pub fn gauss_newton(graph: &PoseGraph, initial: &PoseAssignment, opts: &RefineOptions) -> Result<RefinementResult> {
    let initial_cost = evaluate_cost(graph, initial)?;
    let mut poses = initial.clone();
    let mut cost = initial_cost;
    let (mut r, mut j) = residuals_and_jacobian(graph, &poses)?;
    let dim = j.ncols();
    let mut jtj = j.tr_mul(&j);
    let mut g = j.tr_mul(&r);
    let mut mu = opts.lm_mu0_scale * (0..dim).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
    let mut step_norm = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    let grad_norm = |g: &DVector<f64>| 2.0 * g.norm();

    if dim == 0 || grad_norm(&g) <= opts.grad_tol * (1.0 + cost) {
        return Ok(RefinementResult {
            poses,
            initial_cost,
            final_cost: cost,
            iterations,
            converged: true,
            step_norm_final: 0.0,
            gradient_norm: grad_norm(&g),
        });
    }

    while iterations < opts.max_iter {
        iterations += 1;
        let mut a = jtj.clone();
        for i in 0..dim {
            a[(i, i)] += mu;
        }
        let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
            mu = (mu * 2.0).max(1e-12);
            continue;
        };
        step_norm = step.norm();
        let candidate = apply_step(&poses, &step);
        let new_cost = evaluate_cost(graph, &candidate)?;
        let predicted = -(2.0 * step.dot(&g) + step.dot(&(&jtj * &step)));
        let gain = if predicted > 0.0 { (cost - new_cost) / predicted } else { -1.0 };
        if gain > 0.0 && new_cost <= cost {
            poses = candidate;
            cost = new_cost;
            (r, j) = residuals_and_jacobian(graph, &poses)?;
            jtj = j.tr_mul(&j);
            g = j.tr_mul(&r);
            mu /= 3.0;
            if grad_norm(&g) <= opts.grad_tol * (1.0 + cost) {
                converged = true;
                break;
            }
        } else {
            mu *= 2.0;
        }
        if step_norm <= opts.step_tol * (1.0 + poses_norm(&poses)) {
            converged = grad_norm(&g) <= opts.grad_tol.sqrt() * (1.0 + cost);
            break;
        }
    }
    Ok(RefinementResult {
        poses,
        initial_cost,
        final_cost: cost,
        iterations,
        converged,
        step_norm_final: step_norm,
        gradient_norm: grad_norm(&g),
    })
}

fn poses_norm(poses: &PoseAssignment) -> f64 {
    poses.poses().iter().map(|p| p.position.norm_squared() + p.angle().powi(2)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
pub struct RotationInit {
    pub poses: PoseAssignment,
    /// Nodes whose eigenvector entry vanished; their angle was set to 0.
    pub flagged: Vec<usize>,
}

/// `H` with `H_ij = e^{−jθij}` for every edge `(i, j)` and `H_ji = conj`.
pub fn rotation_connection_matrix(graph: &PoseGraph) -> DMatrix<Complex64> {
    let n = graph.node_count();
    let mut h = DMatrix::zeros(n, n);
    for e in graph.edges() {
        let z = Complex64::from_polar(1.0, -e.angle());
        h[(e.tail, e.head)] += z;
        h[(e.head, e.tail)] += z.conj();
    }
    h
}

/// Least-squares anchored positions for fixed rotations: `ρ̃ = −L⁻¹S̃r̃`.
pub fn positions_given_rotations(w: &ComplexPoseGraphMatrix, rotations: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let l = w.laplacian_block();
    let rhs = -(w.coupling_block() * rotations);
    let chol = l
        .cholesky()
        .ok_or_else(|| Error::Numerical("positions block is not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// Rotations from the top eigenvector of the connection matrix, then
/// positions by linear least squares.
pub fn rotation_first_init(graph: &PoseGraph) -> Result<RotationInit> {
    let n = graph.node_count();
    let spec = hermitian_eigen(&rotation_connection_matrix(graph))?;
    let top = spec.eigenvectors.column(n - 1);
    let mut flagged = Vec::new();
    let rotations = DVector::from_fn(n, |i, _| {
        let v = top[i];
        if v.norm() < 1e-12 {
            flagged.push(i);
            Complex64::new(1.0, 0.0)
        } else {
            v / v.norm()
        }
    });
    let w = build_complex_matrix(graph)?;
    let positions = positions_given_rotations(&w, &rotations)?;
    let x = DVector::from_iterator(2 * n - 1, positions.iter().chain(rotations.iter()).copied());
    let estimate = PoseEstimate::from_stacked(&x, n)?.gauge_fixed();
    Ok(RotationInit {
        poses: estimate.realized,
        flagged,
    })
}
