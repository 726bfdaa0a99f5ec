//! Dense Hermitian eigendecomposition, zero-eigenvalue classification,
//! null-space bases and PSD projection.
//!
//! The decomposition diagonalizes the real symmetric embedding
//! `[A −B; B A]` of `H = A + jB`, whose spectrum is that of `H` with every
//! eigenvalue repeated twice. Each real eigenvector `[u; w]` maps to the
//! complex eigenvector `u + jw`; within every doubled cluster a pivoted
//! complex Gram-Schmidt pass keeps half of the mapped vectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default relative zero threshold: `zero_threshold = scale · max(μ_max, 1)`.
pub const DEFAULT_ZERO_THRESHOLD_SCALE: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// Unitary; column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: DMatrix<Complex64>,
    pub zero_count: usize,
    pub zero_threshold: f64,
}

impl SpectrumReport {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The `k` smallest eigenvalues.
    pub fn head(&self, k: usize) -> Vec<f64> {
        self.eigenvalues.iter().take(k).copied().collect()
    }

    /// Recomputes `zero_count` for a new relative threshold scale.
    pub fn reclassified(mut self, threshold_scale: f64) -> Self {
        let z = classify_zeros(&self, threshold_scale);
        self.zero_count = z.zero_count;
        self.zero_threshold = z.threshold;
        self
    }
}

/// Result of [`classify_zeros`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroClassification {
    pub zero_count: usize,
    pub threshold: f64,
    /// `μ_{zero_count+1} / μ_max`; `None` when every eigenvalue is a zero.
    pub gap_ratio: Option<f64>,
}

pub fn hermitian_asymmetry(h: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..h.nrows() {
        for j in i..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_hermitian(h: &DMatrix<Complex64>) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let asymmetry = hermitian_asymmetry(h);
    if asymmetry > 1e-10 * scale.max(1.0) {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(())
}

/// `[A −B; B A]` for `H = A + jB`.
pub fn real_embedding(h: &DMatrix<Complex64>) -> DMatrix<f64> {
    let d = h.nrows();
    DMatrix::from_fn(2 * d, 2 * d, |r, c| {
        let z = h[(r % d, c % d)];
        match (r < d, c < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Full eigendecomposition of a Hermitian matrix. The report's zero count
/// uses [`DEFAULT_ZERO_THRESHOLD_SCALE`].
pub fn hermitian_eigen(h: &DMatrix<Complex64>) -> Result<SpectrumReport> {
    check_hermitian(h)?;
    let d = h.nrows();
    if d == 0 {
        return Ok(SpectrumReport {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
            zero_count: 0,
            zero_threshold: DEFAULT_ZERO_THRESHOLD_SCALE,
        });
    }
    let hs = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(real_embedding(&hs));

    let mut order: Vec<usize> = (0..2 * d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let sorted: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let scale = sorted.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let cluster_tol = 1e-9 * scale;

    let mapped = |k: usize| -> DVector<Complex64> {
        let col = eig.eigenvectors.column(k);
        DVector::from_fn(d, |i, _| Complex64::new(col[i], col[d + i]))
    };

    let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(d);
    let mut start = 0;
    while start < 2 * d {
        let mut end = start + 1;
        while end < 2 * d && sorted[end] - sorted[end - 1] <= cluster_tol {
            end += 1;
        }
        let want = (end - start).div_ceil(2);
        let mut candidates: Vec<DVector<Complex64>> = order[start..end].iter().map(|&k| mapped(k)).collect();
        for _ in 0..want {
            for c in candidates.iter_mut() {
                for b in &basis {
                    let proj = b.dotc(c);
                    *c -= b * proj;
                }
            }
            let (best, norm) = candidates
                .iter()
                .enumerate()
                .map(|(i, c)| (i, c.norm()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("cluster is non-empty");
            if norm < 1e-6 {
                break;
            }
            let v = candidates.swap_remove(best) / Complex64::new(norm, 0.0);
            basis.push(v);
        }
        start = end;
    }
    if basis.len() != d {
        return Err(Error::Numerical(format!(
            "recovered {} of {d} complex eigenvectors from the real embedding",
            basis.len()
        )));
    }

    let mut pairs: Vec<(f64, DVector<Complex64>)> = basis
        .into_iter()
        .map(|v| ((v.dotc(&(&hs * &v))).re, v))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigenvalues = DVector::from_iterator(d, pairs.iter().map(|p| p.0));
    let mut eigenvectors = DMatrix::zeros(d, d);
    for (k, (_, v)) in pairs.iter().enumerate() {
        eigenvectors.set_column(k, v);
    }
    let report = SpectrumReport {
        eigenvalues,
        eigenvectors,
        zero_count: 0,
        zero_threshold: 0.0,
    };
    Ok(report.reclassified(DEFAULT_ZERO_THRESHOLD_SCALE))
}

/// Counts eigenvalues at or below `threshold_scale · max(μ_max, 1)`.
pub fn classify_zeros(report: &SpectrumReport, threshold_scale: f64) -> ZeroClassification {
    classify_eigenvalues(report.eigenvalues.as_slice(), threshold_scale)
}

/// [`classify_zeros`] on a bare ascending eigenvalue list.
pub fn classify_eigenvalues(eigenvalues: &[f64], threshold_scale: f64) -> ZeroClassification {
    let mu_max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = threshold_scale * mu_max.max(1.0);
    let zero_count = eigenvalues.iter().filter(|&&mu| mu <= threshold).count();
    let gap_ratio = eigenvalues.get(zero_count).map(|mu| mu / mu_max);
    ZeroClassification {
        zero_count,
        threshold,
        gap_ratio,
    }
}

/// Orthonormal eigenvectors of the eigenvalues `≤ threshold`, as columns.
pub fn null_space_basis(h: &DMatrix<Complex64>, threshold: f64) -> Result<DMatrix<Complex64>> {
    let report = hermitian_eigen(h)?;
    let q = report.eigenvalues.iter().filter(|&&mu| mu <= threshold).count();
    if q == 0 {
        return Err(Error::EmptyNullSpace { threshold });
    }
    Ok(report.eigenvectors.columns(0, q).into_owned())
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clamped to 0.
pub fn psd_projection(h: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let report = hermitian_eigen(h)?;
    if report.min_eigenvalue() >= 0.0 {
        return Ok(h.clone());
    }
    Ok(reconstruct(&report, |mu| mu.max(0.0)))
}

/// `V f(Λ) V*`.
pub fn reconstruct(report: &SpectrumReport, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
    let v = &report.eigenvectors;
    let mut scaled = v.clone();
    for (k, mu) in report.eigenvalues.iter().enumerate() {
        let s = Complex64::new(f(*mu), 0.0);
        for z in scaled.column_mut(k).iter_mut() {
            *z *= s;
        }
    }
    scaled * v.adjoint()
}
