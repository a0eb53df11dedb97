//! Topology-aware PAC-Bayesian generalization bounds for graph
//! convolutional networks.
//!
//! The crate computes and numerically certifies norm-based PAC-Bayes
//! bounds whose complexity terms carry explicit graph structure:
//!
//! - [`matrixkit`]: dense kernels (Kronecker products, symmetric
//!   eigendecomposition, norms, PSD-order predicates), generic over the
//!   scalar type with `f64` as the default.
//! - [`graphs`]: graph construction/generation, edge-list I/O, and the
//!   propagation matrices (normalized adjacency, lazy/plain random walk)
//!   with cached spectral data.
//! - [`gcn`]: the GCN forward pass, exact layerwise weight Jacobians, a
//!   finite-difference oracle, and the empirical margin loss.
//! - [`sensitivity`]: the four sensitivity-matrix designs (exact spatial,
//!   diagonal, low-rank, spectral with graph filters) and PSD dominance
//!   certification of the perturbation bound.
//! - [`pacbayes`]: prior variances, optimal posterior covariances, KL
//!   values and upper bounds, spectral complexities, and the final
//!   generalization-bound reports.
//! - [`montecarlo`]: sampling-based checks of the perturbation condition,
//!   the perturbation bounds, and the quadratic-form concentration step.
//! - [`instances`]: seeded random instances (graph + model + features)
//!   used by the verification suite and the CLI.
//! - [`verify`]: the deterministic verification suite bundling every
//!   lemma-level check into one serializable report.

pub mod error;
pub mod gcn;
pub mod graphs;
pub mod instances;
pub mod matrixkit;
pub mod montecarlo;
pub mod pacbayes;
pub mod sensitivity;
pub mod serialize;
pub mod verify;

pub use error::{Error, Result};
pub use matrixkit::{EigDecomposition, Matrix, MatrixNorms};

/// Single-precision alias for the dense kernel type.
pub type Matrix32 = matrixkit::Matrix<f32>;
