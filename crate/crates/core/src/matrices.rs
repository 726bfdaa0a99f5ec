//! Incidence matrices, the real and complex pose graph matrices, and the
//! real ↔ complex vector maps.
//!
//! Both pose graph matrices are assembled edge by edge. Every edge `(i, j)`
//! contributes two residuals that are linear in the unknowns:
//!
//! ```text
//! translation:  p_j − p_i − D_ij r_i
//! rotation:     r_j − R_ij r_i
//! ```
//!
//! and each residual adds `C_aᵀ C_b` to block `(a, b)` for every pair of its
//! coefficient blocks. In the complex domain the 2×2 coefficients become the
//! scalars `C^∨` and the contribution is `conj(c_a) c_b`.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::PoseGraph;

/// Unknown blocks of the pose graph problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    Position(usize),
    Rotation(usize),
}

/// The two residuals of an edge as `(variable, 2×2 coefficient)` lists.
fn edge_terms(graph: &PoseGraph) -> impl Iterator<Item = [Vec<(Var, Matrix2<f64>)>; 2]> + '_ {
    graph.edges().iter().map(|e| {
        let eye = Matrix2::identity();
        [
            vec![
                (Var::Position(e.head), eye),
                (Var::Position(e.tail), -eye),
                (Var::Rotation(e.tail), -e.delta_matrix()),
            ],
            vec![(Var::Rotation(e.head), eye), (Var::Rotation(e.tail), -e.rotation())],
        ]
    })
}

/// Complex representation `a + jb` of a matrix `[a −b; b a]`.
pub fn to_complex(block: &Matrix2<f64>) -> Complex64 {
    Complex64::new(block[(0, 0)], block[(1, 0)])
}

/// Real 2×2 representation `[a −b; b a]` of `a + jb`.
pub fn to_block(z: Complex64) -> Matrix2<f64> {
    Matrix2::new(z.re, -z.im, z.im, z.re)
}

/// `m × n` incidence matrix: row `k` has `−1` at the tail and `+1` at the
/// head of edge `k`.
pub fn incidence_matrix(graph: &PoseGraph) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(graph.edge_count(), graph.node_count());
    for (k, e) in graph.edges().iter().enumerate() {
        a[(k, e.tail)] = -1.0;
        a[(k, e.head)] = 1.0;
    }
    a
}

/// Incidence matrix with the column of node 0 removed.
pub fn anchored_incidence(graph: &PoseGraph) -> DMatrix<f64> {
    incidence_matrix(graph).remove_column(0)
}

/// Real pose graph matrix, full (`4n × 4n`) or anchored (`(4n−2) × (4n−2)`).
#[derive(Debug, Clone, PartialEq)]
pub struct RealPoseGraphMatrix {
    node_count: usize,
    anchored: bool,
    pub entries: DMatrix<f64>,
}

impl RealPoseGraphMatrix {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn is_anchored(&self) -> bool {
        self.anchored
    }

    /// Number of 2×2 block rows.
    pub fn block_dim(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(2 * i, 2 * j).into_owned()
    }
}

/// Full real pose graph matrix `[L̄ ĀᵀD̄; D̄ᵀĀ Q̄]` with positions first.
pub fn build_real_matrix(graph: &PoseGraph) -> RealPoseGraphMatrix {
    let n = graph.node_count();
    let index = |v: Var| match v {
        Var::Position(i) => i,
        Var::Rotation(i) => n + i,
    };
    let mut w = DMatrix::zeros(4 * n, 4 * n);
    for residuals in edge_terms(graph) {
        for terms in &residuals {
            for (va, ca) in terms {
                for (vb, cb) in terms {
                    let (a, b) = (index(*va), index(*vb));
                    let mut block = w.fixed_view_mut::<2, 2>(2 * a, 2 * b);
                    block += ca.transpose() * cb;
                }
            }
        }
    }
    RealPoseGraphMatrix {
        node_count: n,
        anchored: false,
        entries: w,
    }
}

/// Drops the rows and columns of node 0's position.
pub fn anchor(full: &RealPoseGraphMatrix) -> Result<RealPoseGraphMatrix> {
    let n = full.node_count;
    let (rows, cols) = full.entries.shape();
    if full.anchored || rows != 4 * n || cols != 4 * n {
        return Err(Error::DimensionMismatch(format!(
            "anchoring expects a full {0}x{0} matrix, got {rows}x{cols}{1}",
            4 * n,
            if full.anchored { " (already anchored)" } else { "" }
        )));
    }
    let entries = full.entries.clone().remove_rows(0, 2).remove_columns(0, 2);
    Ok(RealPoseGraphMatrix {
        node_count: n,
        anchored: true,
        entries,
    })
}

/// Anchored real pose graph matrix `W`.
pub fn build_anchored_real_matrix(graph: &PoseGraph) -> RealPoseGraphMatrix {
    anchor(&build_real_matrix(graph)).expect("freshly built full matrix has the right shape")
}

/// The complex anchored pose graph matrix `W̃`, Hermitian PSD of size
/// `2n−1`: the first `n−1` rows are node positions 1..n, the last `n` rows are
/// node rotations 0..n.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoseGraphMatrix {
    node_count: usize,
    pub entries: DMatrix<Complex64>,
}

impl ComplexPoseGraphMatrix {
    pub fn from_entries(node_count: usize, entries: DMatrix<Complex64>) -> Result<Self> {
        let d = 2 * node_count - 1;
        if entries.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "expected {d}x{d} for {node_count} nodes, got {:?}",
                entries.shape()
            )));
        }
        Ok(Self {
            node_count,
            entries,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn dim(&self) -> usize {
        2 * self.node_count - 1
    }

    /// Row of the first rotation entry (`n − 1`).
    pub fn rotation_offset(&self) -> usize {
        self.node_count - 1
    }

    /// `x* W̃ x` (real by construction).
    pub fn quadratic_form(&self, x: &DVector<Complex64>) -> f64 {
        x.dotc(&(&self.entries * x)).re
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    /// `L = AᵀA`, the positions block.
    pub fn laplacian_block(&self) -> DMatrix<Complex64> {
        let o = self.rotation_offset();
        self.entries.view((0, 0), (o, o)).into_owned()
    }

    /// `S̃`, the positions × rotations block.
    pub fn coupling_block(&self) -> DMatrix<Complex64> {
        let o = self.rotation_offset();
        self.entries.view((0, o), (o, self.node_count)).into_owned()
    }

    /// `Q̃`, the rotations block.
    pub fn rotation_block(&self) -> DMatrix<Complex64> {
        let o = self.rotation_offset();
        self.entries
            .view((o, o), (self.node_count, self.node_count))
            .into_owned()
    }
}

fn complex_by_edges(graph: &PoseGraph) -> DMatrix<Complex64> {
    let n = graph.node_count();
    let index = |v: Var| match v {
        Var::Position(0) => None,
        Var::Position(i) => Some(i - 1),
        Var::Rotation(i) => Some(n - 1 + i),
    };
    let mut w = DMatrix::zeros(2 * n - 1, 2 * n - 1);
    for residuals in edge_terms(graph) {
        for terms in &residuals {
            for (va, ca) in terms {
                for (vb, cb) in terms {
                    if let (Some(a), Some(b)) = (index(*va), index(*vb)) {
                        w[(a, b)] += to_complex(ca).conj() * to_complex(cb);
                    }
                }
            }
        }
    }
    w
}

fn complex_by_block_map(anchored: &RealPoseGraphMatrix) -> DMatrix<Complex64> {
    let d = anchored.block_dim();
    DMatrix::from_fn(d, d, |i, j| to_complex(&anchored.block(i, j)))
}

/// Builds `W̃` twice, once by mapping every 2×2 block of the anchored real
/// matrix to a complex number and once from the complex edge terms, and
/// returns an `Internal` error if the two disagree beyond `1e-12` relative.
pub fn build_complex_matrix(graph: &PoseGraph) -> Result<ComplexPoseGraphMatrix> {
    let direct = complex_by_edges(graph);
    let mapped = complex_by_block_map(&build_anchored_real_matrix(graph));
    let scale = direct.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = (&direct - &mapped)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if diff > 1e-12 * (1.0 + scale) {
        return Err(Error::Internal(format!(
            "complex pose graph matrix routes disagree by {diff:e}"
        )));
    }
    ComplexPoseGraphMatrix::from_entries(graph.node_count(), direct)
}

/// `Ũ`: row of edge `(i, j)` has `−e^{jθij}` at column `i` and `+1` at `j`.
pub fn unit_gain_incidence(graph: &PoseGraph) -> DMatrix<Complex64> {
    let mut u = DMatrix::zeros(graph.edge_count(), graph.node_count());
    for (k, e) in graph.edges().iter().enumerate() {
        u[(k, e.tail)] = -Complex64::from_polar(1.0, e.angle());
        u[(k, e.head)] = Complex64::new(1.0, 0.0);
    }
    u
}

/// `D̃`: row of edge `(i, j)` has `−(Δx + jΔy)` at column `i`.
pub fn complex_translation_block(graph: &PoseGraph) -> DMatrix<Complex64> {
    let mut d = DMatrix::zeros(graph.edge_count(), graph.node_count());
    for (k, e) in graph.edges().iter().enumerate() {
        d[(k, e.tail)] = -Complex64::new(e.delta.x, e.delta.y);
    }
    d
}

/// The factors of `W̃ = F* F` with `F = [A D̃; 0 Ũ]`.
#[derive(Debug, Clone)]
pub struct ComplexFactors {
    pub anchored_incidence: DMatrix<f64>,
    pub translation: DMatrix<Complex64>,
    pub unit_gain: DMatrix<Complex64>,
}

impl ComplexFactors {
    pub fn new(graph: &PoseGraph) -> Self {
        Self {
            anchored_incidence: anchored_incidence(graph),
            translation: complex_translation_block(graph),
            unit_gain: unit_gain_incidence(graph),
        }
    }

    /// The stacked `2m × (2n−1)` factor `F`.
    pub fn stacked(&self) -> DMatrix<Complex64> {
        let m = self.anchored_incidence.nrows();
        let o = self.anchored_incidence.ncols();
        let n = self.unit_gain.ncols();
        let mut f = DMatrix::zeros(2 * m, o + n);
        f.view_mut((0, 0), (m, o))
            .copy_from(&self.anchored_incidence.map(|a| Complex64::new(a, 0.0)));
        f.view_mut((0, o), (m, n)).copy_from(&self.translation);
        f.view_mut((m, o), (m, n)).copy_from(&self.unit_gain);
        f
    }
}

/// Pairs `(a, b) ↦ a + jb`.
pub fn complexify(v: &[f64]) -> Result<DVector<Complex64>> {
    if !v.len().is_multiple_of(2) {
        return Err(Error::OddLength(v.len()));
    }
    Ok(DVector::from_iterator(
        v.len() / 2,
        v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])),
    ))
}

/// Inverse of [`complexify`].
pub fn realify(v: &[Complex64]) -> DVector<f64> {
    DVector::from_iterator(2 * v.len(), v.iter().flat_map(|z| [z.re, z.im]))
}
