//! Planar pose graph optimization with a Lagrangian-duality certificate.
//!
//! The pipeline builds the complex anchored pose graph matrix `W̃`
//! ([`matrices`]), maximizes the dual bound ([`dual::solve_dual`]), and checks
//! whether the zero eigenvalue of the penalized matrix is simple. If it is,
//! the scaled kernel vector is a certified global optimum; otherwise the
//! null-space program ([`nullspace`]) gives a feasible estimate.
//!
//! ```
//! use certipose::{bench, dual};
//!
//! let (graph, _) = bench::counterexample_fixture();
//! let scaled = bench::scale_translations(&graph, 0.4).unwrap();
//! let cert = dual::certify(&scaled, &dual::DualOptions::default()).unwrap();
//! assert_eq!(cert.status, dual::Status::Optimal);
//! ```

pub mod bench;
pub mod dual;
pub mod error;
pub mod g2o;
pub mod graph;
pub mod matrices;
pub mod nullspace;
pub mod pose;
pub mod refine;
pub mod relaxation;
pub mod report;
pub mod spectral;

pub use num_complex::Complex64;

pub use dual::{certify, Certificate, DualOptions, DualSolution, PoseEstimate, Status, Szep};
pub use error::{Error, Result};
pub use graph::{evaluate_cost, PoseAssignment, PoseGraph, RelativeMeasurement};
pub use matrices::{build_complex_matrix, ComplexPoseGraphMatrix};
pub use pose::Pose2D;
