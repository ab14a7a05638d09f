//! Minimum-cost output-feedback selection for structured systems with
//! dedicated inputs and outputs.
//!
//! A feedback set is admissible when the closed loop has no structurally
//! fixed modes. Solvers here return admissible sets of low total cost:
//! a general approximation over a cycle formulation, a set-cover pipeline
//! for back-edge structures, an exact dynamic program for hierarchical
//! condensations and an exhaustive oracle for small instances.

pub mod approx;
pub mod backedge;
pub mod error;
pub mod graphs;
pub mod hierarchy;
pub mod instances;
pub mod model;
pub mod oracle;
pub mod reduction;
pub mod scalar;
pub mod sfm;

pub use error::{Assumption, GraphError, InstanceError, ModelError, SolveError};
pub use model::{
    cost_of, ensure_valid, validate, CostMatrix, FeedbackSet, Link, SolveReport, SolveStats,
    StructuredSystem, Verdict, Violation,
};
pub use reduction::{Cycle, CycleSet};
pub use scalar::Scalar;
pub use sfm::{has_no_sfm, SfmCertificate, SfmChecker};

/// Exact rational cost.
pub type Rational = num_rational::Ratio<i64>;

pub type CostMatrixF64 = CostMatrix<f64>;
pub type CostMatrixQ = CostMatrix<Rational>;
pub type SolveReportF64 = SolveReport<f64>;
pub type SolveReportQ = SolveReport<Rational>;
pub type CycleSetF64 = CycleSet<f64>;
pub type CycleSetQ = CycleSet<Rational>;
