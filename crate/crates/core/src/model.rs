//! Structured systems, cost matrices, feedback sets and solve reports.
//!
//! Indices are zero-based in memory and one-based in every external format
//! (JSON, DOT, text), so `Link { input: 0, output: 3 }` prints as `(y4,u1)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::scalar::Scalar;
use crate::sfm::SfmCertificate;

/// A feedback link from output `output` to input `input` (the edge y → u).
/// Serializes as the one-based string `u1:y4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Link {
    pub input: usize,
    pub output: usize,
}

impl Link {
    pub fn new(input: usize, output: usize) -> Self {
        Self { input, output }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(y{},u{})", self.output + 1, self.input + 1)
    }
}

impl From<Link> for String {
    fn from(l: Link) -> String {
        format!("u{}:y{}", l.input + 1, l.output + 1)
    }
}

impl TryFrom<String> for Link {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Parses `u1:y4` (one-based) into `Link { input: 0, output: 3 }`.
impl FromStr for Link {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::BadLink(s.to_string());
        let (u, y) = s.trim().split_once(':').ok_or_else(bad)?;
        let parse = |part: &str, prefix: char| -> Result<usize, ModelError> {
            let digits = part.trim().strip_prefix(prefix).ok_or_else(bad)?;
            let k: usize = digits.parse().map_err(|_| bad())?;
            k.checked_sub(1).ok_or_else(bad)
        };
        Ok(Link::new(parse(u, 'u')?, parse(y, 'y')?))
    }
}

/// Sparse pattern of the state matrix plus dedicated input/output maps.
///
/// `state_edges` holds `(from, to)` pairs: `(j, i)` means the (i, j) entry of
/// the state matrix is free, i.e. state j influences state i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuredSystem {
    n: usize,
    state_edges: BTreeSet<(usize, usize)>,
    input_state: Vec<usize>,
    output_state: Vec<usize>,
}

impl StructuredSystem {
    /// Builds a system and rejects it if it has structural violations.
    pub fn new(
        n: usize,
        state_edges: impl IntoIterator<Item = (usize, usize)>,
        input_state: Vec<usize>,
        output_state: Vec<usize>,
    ) -> Result<Self, ModelError> {
        let sys = Self::new_unchecked(n, state_edges, input_state, output_state);
        let errors: Vec<Violation> = sys
            .structural_violations()
            .into_iter()
            .filter(|v| v.is_error())
            .collect();
        if errors.is_empty() {
            Ok(sys)
        } else {
            Err(ModelError::Invalid(errors))
        }
    }

    /// Builds a system without checking index ranges. Use [`validate`] to
    /// inspect the result.
    pub fn new_unchecked(
        n: usize,
        state_edges: impl IntoIterator<Item = (usize, usize)>,
        input_state: Vec<usize>,
        output_state: Vec<usize>,
    ) -> Self {
        Self {
            n,
            state_edges: state_edges.into_iter().collect(),
            input_state,
            output_state,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.input_state.len()
    }

    pub fn p(&self) -> usize {
        self.output_state.len()
    }

    pub fn state_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.state_edges
    }

    pub fn input_state(&self, input: usize) -> usize {
        self.input_state[input]
    }

    pub fn output_state(&self, output: usize) -> usize {
        self.output_state[output]
    }

    pub fn input_states(&self) -> &[usize] {
        &self.input_state
    }

    pub fn output_states(&self) -> &[usize] {
        &self.output_state
    }

    /// True when every state carries a self-loop.
    pub fn is_self_damped(&self) -> bool {
        (0..self.n).all(|i| self.state_edges.contains(&(i, i)))
    }

    fn structural_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push(Violation::EmptySystem);
        }
        for &(from, to) in &self.state_edges {
            if from >= self.n || to >= self.n {
                out.push(Violation::EdgeOutOfRange { from, to });
            }
        }
        for (input, &state) in self.input_state.iter().enumerate() {
            if state >= self.n {
                out.push(Violation::DanglingInput { input, state });
            }
        }
        for (output, &state) in self.output_state.iter().enumerate() {
            if state >= self.n {
                out.push(Violation::DanglingOutput { output, state });
            }
        }
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        for (input, &state) in self.input_state.iter().enumerate() {
            if let Some(&first) = seen.get(&state) {
                out.push(Violation::SharedInputState {
                    first,
                    second: input,
                    state,
                });
            } else {
                seen.insert(state, input);
            }
        }
        out
    }
}

/// Feedback costs. Absent pairs are infeasible.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix<T> {
    entries: BTreeMap<Link, T>,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Builds from `(input, output, cost)` triples (zero-based).
    pub fn from_triples(
        triples: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self, ModelError> {
        let mut cm = Self::empty();
        for (i, j, c) in triples {
            cm.insert(Link::new(i, j), c)?;
        }
        Ok(cm)
    }

    pub fn insert(&mut self, link: Link, cost: T) -> Result<(), ModelError> {
        if !cost.is_finite_value() || cost < T::zero() {
            return Err(ModelError::BadCost {
                link,
                cost: cost.to_string(),
            });
        }
        if self.entries.insert(link, cost).is_some() {
            return Err(ModelError::DuplicateCost(link));
        }
        Ok(())
    }

    pub fn get(&self, link: Link) -> Option<T> {
        self.entries.get(&link).copied()
    }

    pub fn is_feasible(&self, link: Link) -> bool {
        self.entries.contains_key(&link)
    }

    /// Feasible links in (input, output) order.
    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Link, T)> + '_ {
        self.entries.iter().map(|(l, c)| (*l, *c))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Drops every entry for which `keep` is false.
    pub fn retain(&mut self, mut keep: impl FnMut(Link) -> bool) {
        self.entries.retain(|l, _| keep(*l));
    }
}

/// A set of feedback links.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeedbackSet {
    links: BTreeSet<Link>,
}

impl FeedbackSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, link: Link) -> bool {
        self.links.insert(link)
    }

    pub fn contains(&self, link: Link) -> bool {
        self.links.contains(&link)
    }

    pub fn iter(&self) -> impl Iterator<Item = Link> + '_ {
        self.links.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn links(&self) -> &BTreeSet<Link> {
        &self.links
    }

    /// Parses `u1:y4,u5:y5` (one-based).
    pub fn parse_list(s: &str) -> Result<Self, ModelError> {
        s.split(',')
            .filter(|part| !part.trim().is_empty())
            .map(str::parse)
            .collect()
    }
}

impl FromIterator<Link> for FeedbackSet {
    fn from_iter<I: IntoIterator<Item = Link>>(iter: I) -> Self {
        Self {
            links: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for FeedbackSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, l) in self.links.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// Exact sum of link costs.
pub fn cost_of<T: Scalar>(fs: &FeedbackSet, costs: &CostMatrix<T>) -> Result<T, ModelError> {
    fs.iter().try_fold(T::zero(), |acc, link| {
        costs
            .get(link)
            .map(|c| acc + c)
            .ok_or(ModelError::InfeasibleLink(link))
    })
}

/// A problem found by [`validate`]. Indices are zero-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    EmptySystem,
    EdgeOutOfRange {
        from: usize,
        to: usize,
    },
    DanglingInput {
        input: usize,
        state: usize,
    },
    DanglingOutput {
        output: usize,
        state: usize,
    },
    IndexOutOfRange {
        input: usize,
        output: usize,
    },
    /// Warning only: two inputs actuate the same state.
    SharedInputState {
        first: usize,
        second: usize,
        state: usize,
    },
}

impl Violation {
    pub fn is_error(&self) -> bool {
        !matches!(self, Violation::SharedInputState { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptySystem => write!(f, "system has no states"),
            Violation::EdgeOutOfRange { from, to } => {
                write!(f, "state edge x{} -> x{} out of range", from + 1, to + 1)
            }
            Violation::DanglingInput { input, state } => {
                write!(
                    f,
                    "input u{} actuates missing state x{}",
                    input + 1,
                    state + 1
                )
            }
            Violation::DanglingOutput { output, state } => {
                write!(
                    f,
                    "output y{} senses missing state x{}",
                    output + 1,
                    state + 1
                )
            }
            Violation::IndexOutOfRange { input, output } => write!(
                f,
                "cost entry (u{},y{}) outside the input/output ranges",
                input + 1,
                output + 1
            ),
            Violation::SharedInputState {
                first,
                second,
                state,
            } => write!(
                f,
                "warning: inputs u{} and u{} both actuate x{}",
                first + 1,
                second + 1,
                state + 1
            ),
        }
    }
}

/// Checks a system/cost pair for index and dimension problems. An empty
/// list (or warnings only) means well-formed.
pub fn validate<T: Scalar>(sys: &StructuredSystem, costs: &CostMatrix<T>) -> Vec<Violation> {
    let mut out = sys.structural_violations();
    for link in costs.links() {
        if link.input >= sys.m() || link.output >= sys.p() {
            out.push(Violation::IndexOutOfRange {
                input: link.input,
                output: link.output,
            });
        }
    }
    out
}

/// Returns `Err` if [`validate`] reports anything other than warnings.
pub fn ensure_valid<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
) -> Result<(), ModelError> {
    let errors: Vec<Violation> = validate(sys, costs)
        .into_iter()
        .filter(Violation::is_error)
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(ModelError::Invalid(errors))
    }
}

/// Run statistics attached to every report.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub cycles: usize,
    pub iterations: usize,
    pub elapsed_ms: f64,
}

/// Outcome of a solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict<T> {
    Feasible { links: FeedbackSet, cost: T },
    Infeasible { reason: String },
}

/// What every solver returns.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport<T> {
    pub solver: String,
    pub verdict: Verdict<T>,
    pub certificate: Option<SfmCertificate>,
    pub stats: SolveStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<serde_json::Value>,
}

impl<T: Scalar> SolveReport<T> {
    /// Builds a feasible report; the certificate is recomputed here so no
    /// report leaves the crate without a passing no-SFM check.
    pub fn feasible(
        solver: &str,
        sys: &StructuredSystem,
        costs: &CostMatrix<T>,
        links: FeedbackSet,
        stats: SolveStats,
    ) -> Result<Self, ModelError> {
        let cost = cost_of(&links, costs)?;
        let certificate = crate::sfm::has_no_sfm(sys, &links);
        if !certificate.pass {
            return Err(ModelError::Uncertified(links.to_string()));
        }
        Ok(Self {
            solver: solver.to_string(),
            verdict: Verdict::Feasible { links, cost },
            certificate: Some(certificate),
            stats,
            trace: None,
        })
    }

    pub fn infeasible(solver: &str, reason: impl Into<String>, stats: SolveStats) -> Self {
        Self {
            solver: solver.to_string(),
            verdict: Verdict::Infeasible {
                reason: reason.into(),
            },
            certificate: None,
            stats,
            trace: None,
        }
    }

    pub fn with_trace(mut self, trace: Option<serde_json::Value>) -> Self {
        self.trace = trace;
        self
    }

    pub fn cost(&self) -> Option<T> {
        match &self.verdict {
            Verdict::Feasible { cost, .. } => Some(*cost),
            Verdict::Infeasible { .. } => None,
        }
    }

    pub fn links(&self) -> Option<&FeedbackSet> {
        match &self.verdict {
            Verdict::Feasible { links, .. } => Some(links),
            Verdict::Infeasible { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_cycle() -> StructuredSystem {
        StructuredSystem::new(3, [(0, 1), (1, 2), (2, 0)], vec![0], vec![1]).unwrap()
    }

    #[test]
    fn empty_set_costs_nothing() {
        let p = CostMatrix::from_triples([(0, 0, 4.0)]).unwrap();
        assert_eq!(cost_of(&FeedbackSet::new(), &p).unwrap(), 0.0);
    }

    #[test]
    fn singleton_cost() {
        let p = CostMatrix::from_triples([(0, 0, 4.0)]).unwrap();
        let fs: FeedbackSet = [Link::new(0, 0)].into_iter().collect();
        assert_eq!(cost_of(&fs, &p).unwrap(), 4.0);
    }

    #[test]
    fn infeasible_link_is_an_error() {
        let p = CostMatrix::from_triples([(0, 0, 4.0)]).unwrap();
        let fs: FeedbackSet = [Link::new(1, 0)].into_iter().collect();
        assert_eq!(
            cost_of(&fs, &p),
            Err(ModelError::InfeasibleLink(Link::new(1, 0)))
        );
    }

    #[test]
    fn rejects_negative_and_nan_costs() {
        assert!(CostMatrix::from_triples([(0, 0, -1.0)]).is_err());
        assert!(CostMatrix::from_triples([(0, 0, f64::NAN)]).is_err());
        assert!(CostMatrix::from_triples([(0, 0, f64::INFINITY)]).is_err());
        assert!(CostMatrix::from_triples([(0, 0, 1.0), (0, 0, 2.0)]).is_err());
    }

    #[test]
    fn validate_well_formed() {
        let p = CostMatrix::from_triples([(0, 0, 1.0)]).unwrap();
        assert!(validate(&three_cycle(), &p).is_empty());
    }

    #[test]
    fn validate_cost_index_out_of_range() {
        let sys = StructuredSystem::new(6, [], (0..6).collect(), (0..6).collect()).unwrap();
        let p = CostMatrix::from_triples([(6, 0, 1.0)]).unwrap();
        assert_eq!(
            validate(&sys, &p),
            vec![Violation::IndexOutOfRange {
                input: 6,
                output: 0
            }]
        );
    }

    #[test]
    fn validate_dangling_output() {
        let sys = StructuredSystem::new_unchecked(5, [], vec![0], vec![0, 8]);
        assert_eq!(
            validate(&sys, &CostMatrix::<f64>::empty()),
            vec![Violation::DanglingOutput {
                output: 1,
                state: 8
            }]
        );
        assert!(StructuredSystem::new(5, [], vec![0], vec![0, 8]).is_err());
    }

    #[test]
    fn shared_input_state_is_only_a_warning() {
        let sys = StructuredSystem::new(2, [], vec![0, 0], vec![1]).unwrap();
        let v = validate(&sys, &CostMatrix::<f64>::empty());
        assert_eq!(v.len(), 1);
        assert!(!v[0].is_error());
        assert!(ensure_valid(&sys, &CostMatrix::<f64>::empty()).is_ok());
    }

    #[test]
    fn link_parse_and_display() {
        let l: Link = "u1:y4".parse().unwrap();
        assert_eq!(l, Link::new(0, 3));
        assert_eq!(l.to_string(), "(y4,u1)");
        assert!("u0:y1".parse::<Link>().is_err());
        assert!("y1:u1".parse::<Link>().is_err());
        let fs = FeedbackSet::parse_list("u1:y4, u5:y5,u2:y6").unwrap();
        assert_eq!(fs.len(), 3);
        assert_eq!(fs.to_string(), "{(y4,u1),(y6,u2),(y5,u5)}");
    }
}
