//! SDP relaxation `min Tr(W̃X) s.t. X ⪰ 0, X_ii = 1 on rotation rows`, solved
//! by ADMM, and rank-1 extraction of an estimate from its solution.
//!
//! The position block is eliminated first. With `K = L⁻¹S̃` and the Schur
//! complement `C = Q̃ − S̃*K`, any feasible `X` satisfies
//! `Tr(W̃X) ≥ Tr(C R)` where `R` is its rotation block, with equality for
//!
//! ```text
//! X = [K R K*   −K R]
//!     [−R K*      R ]
//! ```
//!
//! so ADMM runs on the `n × n` problem `min Tr(CR), diag(R) = 1, R ⪰ 0`.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dual::PoseEstimate;
use crate::error::{Error, Result};
use crate::matrices::ComplexPoseGraphMatrix;
use crate::nullspace::normalize_estimate;
use crate::spectral::{hermitian_eigen, reconstruct};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelaxationOptions {
    pub rho: f64,
    pub max_iter: usize,
    /// Stop when both residuals fall below `eps_residual · n` (Frobenius, on
    /// the normalized problem).
    pub eps_residual: f64,
    pub rank_tol: f64,
    /// Iterations between penalty updates.
    pub adapt_every: usize,
}

impl Default for RelaxationOptions {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iter: 20_000,
            eps_residual: 1e-9,
            rank_tol: 1e-4,
            adapt_every: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmmResiduals {
    pub primal: f64,
    pub dual: f64,
    /// `|Tr(W̃X) − Tr(C R)|`, the lifting consistency error.
    pub lift: f64,
}

#[derive(Debug, Clone)]
pub struct RelaxationSolution {
    pub x: DMatrix<Complex64>,
    pub value: f64,
    pub rank_estimate: usize,
    pub residuals: AdmmResiduals,
    pub iterations: usize,
    pub converged: bool,
    pub node_count: usize,
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `K = L⁻¹S̃` and `C = Q̃ − S̃*K`.
pub fn schur_reduction(w: &ComplexPoseGraphMatrix) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let l = w.laplacian_block();
    let s = w.coupling_block();
    let chol = Cholesky::new(l)
        .ok_or_else(|| Error::Numerical("positions block is not positive definite".into()))?;
    let k = chol.solve(&s);
    let c = hermitian_part(&(w.rotation_block() - s.adjoint() * &k));
    Ok((k, c))
}

pub fn solve_sdp_relaxation(w: &ComplexPoseGraphMatrix, opts: &RelaxationOptions) -> Result<RelaxationSolution> {
    let n = w.node_count();
    let (k, c) = schur_reduction(w)?;
    let c_spec = hermitian_eigen(&c)?;
    let scale = c_spec
        .eigenvalues
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let cs = &c / Complex64::new(scale, 0.0);

    let mut rho = opts.rho;
    let mut z = DMatrix::<Complex64>::identity(n, n);
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    let mut x = z.clone();
    let (mut r, mut s) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;
    let tol = opts.eps_residual * n as f64;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        x = hermitian_part(&(&z - &u - &cs / Complex64::new(rho, 0.0)));
        for i in 0..n {
            x[(i, i)] = Complex64::new(1.0, 0.0);
        }
        let z_old = z;
        let spec = hermitian_eigen(&hermitian_part(&(&x + &u)))?;
        z = reconstruct(&spec, |mu| mu.max(0.0));
        u += &x - &z;
        r = (&x - &z).norm();
        s = rho * (&z - &z_old).norm();
        if r < tol && s < tol {
            converged = true;
            break;
        }
        if opts.adapt_every > 0 && iterations % opts.adapt_every == 0 {
            if r > 10.0 * s {
                rho *= 10.0;
                u /= Complex64::new(10.0, 0.0);
            } else if s > 10.0 * r {
                rho /= 10.0;
                u *= Complex64::new(10.0, 0.0);
            }
        }
    }

    let rot = x;
    let o = n - 1;
    let mut full = DMatrix::zeros(2 * n - 1, 2 * n - 1);
    let kr = &k * &rot;
    full.view_mut((0, 0), (o, o)).copy_from(&(&kr * k.adjoint()));
    full.view_mut((0, o), (o, n)).copy_from(&(-&kr));
    full.view_mut((o, 0), (n, o)).copy_from(&(-kr.adjoint()));
    full.view_mut((o, o), (n, n)).copy_from(&rot);
    let full = hermitian_part(&full);

    let value = (&w.entries * &full).trace().re;
    let reduced = (&c * &rot).trace().re;
    let spec = hermitian_eigen(&full)?;
    let top = spec.max_eigenvalue();
    let rank_estimate = spec
        .eigenvalues
        .iter()
        .filter(|&&mu| mu > opts.rank_tol * top)
        .count();
    Ok(RelaxationSolution {
        x: full,
        value,
        rank_estimate,
        residuals: AdmmResiduals {
            primal: r,
            dual: s,
            lift: (value - reduced).abs(),
        },
        iterations,
        converged,
        node_count: n,
    })
}

/// Estimate from the leading eigenpair of `X`: `x̃ = √μ_top v`, rotation
/// entries normalized. `exact` reports `μ₂ / μ_top ≤ tol`.
pub fn rank_one_extract(sol: &RelaxationSolution, tol: f64) -> Result<(PoseEstimate, bool)> {
    let spec = hermitian_eigen(&sol.x)?;
    let d = spec.dim();
    let top = spec.eigenvalues[d - 1];
    let second = if d > 1 { spec.eigenvalues[d - 2] } else { 0.0 };
    let exact = top > 0.0 && second / top <= tol;
    let v = spec.eigenvectors.column(d - 1) * Complex64::new(top.max(0.0).sqrt(), 0.0);
    Ok((normalize_estimate(&v, sol.node_count)?, exact))
}
