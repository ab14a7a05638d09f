use std::fmt;

use sfsel_core::{GraphError, InstanceError, ModelError, SolveError};

/// Why a command stopped. Each kind has its own exit code.
#[derive(Debug)]
pub enum Failure {
    Infeasible(String),
    Usage(String),
    Assumption(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Infeasible(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Assumption(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Infeasible(m) | Failure::Usage(m) | Failure::Assumption(m) => f.write_str(m),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::AssumptionViolated { .. } | SolveError::NotHierarchical { .. } => {
                Failure::Assumption(e.to_string())
            }
            SolveError::Uncoverable(_) => Failure::Infeasible(e.to_string()),
            SolveError::BudgetExceeded(_) => {
                Failure::Usage(format!("{e}; raise --budget or use another --algo"))
            }
            SolveError::Graph(GraphError::CycleCapExceeded { .. }) => {
                Failure::Usage(format!("{e}; raise SFSEL_CYCLE_CAP"))
            }
            SolveError::Model(m) => m.into(),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Uncertified(_) => Failure::Infeasible(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        Failure::Usage(e.to_string())
    }
}
