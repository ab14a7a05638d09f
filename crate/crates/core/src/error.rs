use thiserror::Error;

use crate::model::{Link, Violation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid instance: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("cannot parse feedback link {0:?} (expected u<i>:y<j>, one-based)")]
    BadLink(String),
    #[error("cost of {link} must be finite and nonnegative, got {cost}")]
    BadCost { link: Link, cost: String },
    #[error("duplicate cost entry for {0}")]
    DuplicateCost(Link),
    #[error("feedback link {0} is infeasible")]
    InfeasibleLink(Link),
    #[error("feedback set {0} fails the no-structurally-fixed-modes check")]
    Uncertified(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("cycle enumeration exceeded the cap of {cap} cycles ({found} found before stopping)")]
    CycleCapExceeded { cap: usize, found: usize },
}

/// Which standing assumption a solver found violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// The state bipartite graph has a perfect matching.
    PerfectMatching,
    /// Every feasible feedback link closes a path from its input to its output.
    BackEdge,
}

impl std::fmt::Display for Assumption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Assumption::PerfectMatching => {
                write!(f, "state bipartite graph has a perfect matching")
            }
            Assumption::BackEdge => write!(f, "back-edge feedback structure"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("assumption violated ({assumption}): {detail}")]
    AssumptionViolated {
        assumption: Assumption,
        detail: String,
    },
    #[error("condensation is not hierarchical: SCC {node} has {parents} parents")]
    NotHierarchical { node: usize, parents: usize },
    #[error("nodes {0:?} lie on no cycle")]
    Uncoverable(Vec<usize>),
    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
