//! Cycle formulation of the selection problem.
//!
//! The state digraph is condensed into SCC nodes. For every ordered pair of
//! SCCs (a, b) only the cheapest feasible link whose input enters `a` and
//! whose output leaves `b` is kept (`E_min`). Simple cycles of the reduced
//! digraph then become `(node set : edge set)` pairs, and the task becomes
//! covering every SCC node with cycles at minimum edge cost.

use std::collections::{BTreeMap, BTreeSet};

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Assumption, GraphError, SolveError};
use crate::graphs::{
    enumerate_cycles, max_matching, scc_condense, state_bipartite, state_digraph, Digraph,
    EdgeKind, NodeLabel, SccDecomposition,
};
use crate::model::{CostMatrix, FeedbackSet, Link, StructuredSystem};
use crate::scalar::Scalar;

/// The chosen representative of one SCC pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinEdge<T> {
    pub link: Link,
    pub cost: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CondensedGraph<T> {
    pub scc: SccDecomposition,
    /// (input, SCC it enters).
    pub input_edges: BTreeSet<(usize, usize)>,
    /// (SCC it leaves, output).
    pub output_edges: BTreeSet<(usize, usize)>,
    /// Keyed by (SCC entered by the input, SCC left by the output).
    pub e_min: BTreeMap<(usize, usize), MinEdge<T>>,
}

impl<T: Scalar> CondensedGraph<T> {
    pub fn node_count(&self) -> usize {
        self.scc.len()
    }

    pub fn costs(&self) -> BTreeMap<Link, T> {
        self.e_min.values().map(|e| (e.link, e.cost)).collect()
    }

    /// D_R: SCC nodes first, then the inputs and outputs used by `E_min`.
    /// Feedback edges carry their cost as a DOT label.
    pub fn reduced_digraph(&self) -> Digraph {
        let l = self.node_count();
        let mut labels: Vec<NodeLabel> = (0..l).map(NodeLabel::Scc).collect();
        let inputs: BTreeSet<usize> = self.e_min.values().map(|e| e.link.input).collect();
        let outputs: BTreeSet<usize> = self.e_min.values().map(|e| e.link.output).collect();
        let input_at: BTreeMap<usize, usize> = inputs
            .iter()
            .enumerate()
            .map(|(k, &i)| (i, l + k))
            .collect();
        let output_at: BTreeMap<usize, usize> = outputs
            .iter()
            .enumerate()
            .map(|(k, &j)| (j, l + inputs.len() + k))
            .collect();
        labels.extend(inputs.iter().map(|&i| NodeLabel::Input(i)));
        labels.extend(outputs.iter().map(|&j| NodeLabel::Output(j)));
        let mut d = Digraph::new(labels);
        for &(a, b) in &self.scc.dag_edges {
            d.add_edge(a, b, EdgeKind::State);
        }
        for &(i, c) in &self.input_edges {
            if let Some(&v) = input_at.get(&i) {
                d.add_edge(v, c, EdgeKind::Input);
            }
        }
        for &(c, j) in &self.output_edges {
            if let Some(&v) = output_at.get(&j) {
                d.add_edge(c, v, EdgeKind::Output);
            }
        }
        for e in self.e_min.values() {
            let (y, u) = (output_at[&e.link.output], input_at[&e.link.input]);
            d.add_edge(y, u, EdgeKind::Feedback);
            d.annotate(y, u, e.cost.to_string());
        }
        d
    }
}

/// Condenses the system. Fails when B(A) has no perfect matching.
pub fn condense<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
) -> Result<CondensedGraph<T>, SolveError> {
    let matching = max_matching(&state_bipartite(sys));
    if matching.size < sys.n() {
        let unmatched: Vec<String> = matching
            .unmatched_left()
            .iter()
            .map(|&x| format!("x{}'", x + 1))
            .collect();
        return Err(SolveError::AssumptionViolated {
            assumption: Assumption::PerfectMatching,
            detail: format!(
                "maximum matching {} < {} (unmatched: {})",
                matching.size,
                sys.n(),
                unmatched.join(",")
            ),
        });
    }
    Ok(condense_unchecked(sys, costs))
}

/// As [`condense`] without the matching check.
pub fn condense_unchecked<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
) -> CondensedGraph<T> {
    let scc = scc_condense(&state_digraph(sys));
    let input_edges = sys
        .input_states()
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, scc.component_of[x]))
        .collect();
    let output_edges = sys
        .output_states()
        .iter()
        .enumerate()
        .map(|(j, &x)| (scc.component_of[x], j))
        .collect();
    let mut e_min: BTreeMap<(usize, usize), MinEdge<T>> = BTreeMap::new();
    // ascending link order, replace only on a strictly smaller cost
    for (link, cost) in costs.iter() {
        let a = scc.component_of[sys.input_state(link.input)];
        let b = scc.component_of[sys.output_state(link.output)];
        match e_min.get(&(a, b)) {
            Some(cur) if !cost.definitely_lt(cur.cost) => {}
            _ => {
                e_min.insert((a, b), MinEdge { link, cost });
            }
        }
    }
    CondensedGraph {
        scc,
        input_edges,
        output_edges,
        e_min,
    }
}

/// A cycle of D_R: the SCC nodes it visits and the feedback links it uses.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cycle {
    pub nodes: BTreeSet<usize>,
    pub edges: BTreeSet<Link>,
}

impl Cycle {
    pub fn new(
        nodes: impl IntoIterator<Item = usize>,
        edges: impl IntoIterator<Item = Link>,
    ) -> Self {
        Self {
            nodes: nodes.into_iter().collect(),
            edges: edges.into_iter().collect(),
        }
    }
}

impl std::fmt::Display for Cycle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let nodes: Vec<String> = self.nodes.iter().map(|n| format!("N{}", n + 1)).collect();
        let edges: Vec<String> = self.edges.iter().map(Link::to_string).collect();
        write!(f, "({{{}}} : [{}])", nodes.join(","), edges.join(","))
    }
}

impl Serialize for Cycle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Cycle", 2)?;
        let nodes: Vec<String> = self.nodes.iter().map(|n| format!("N{}", n + 1)).collect();
        st.serialize_field("nodes", &nodes)?;
        st.serialize_field("edges", &self.edges)?;
        st.end()
    }
}

/// A cycle-cover instance: SCC nodes `0..node_count`, cycles and edge costs.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleSet<T> {
    pub node_count: usize,
    pub cycles: Vec<Cycle>,
    pub costs: BTreeMap<Link, T>,
}

impl<T: Scalar> CycleSet<T> {
    /// Panics if a cycle uses an edge without a cost or a node out of range.
    pub fn new(node_count: usize, cycles: Vec<Cycle>, costs: BTreeMap<Link, T>) -> Self {
        for c in &cycles {
            assert!(
                c.nodes.iter().all(|&v| v < node_count),
                "cycle node out of range"
            );
            assert!(
                c.edges.iter().all(|e| costs.contains_key(e)),
                "cycle edge without cost"
            );
        }
        Self {
            node_count,
            cycles,
            costs,
        }
    }

    pub fn cost(&self, edges: &BTreeSet<Link>) -> T {
        edges.iter().map(|e| self.costs[e]).sum()
    }

    /// Nodes contained in no cycle.
    pub fn uncoverable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.node_count];
        for c in &self.cycles {
            for &v in &c.nodes {
                seen[v] = true;
            }
        }
        (0..self.node_count).filter(|&v| !seen[v]).collect()
    }

    /// Cover predicate: every node lies in a cycle using only `edges`.
    pub fn is_cover(&self, edges: &BTreeSet<Link>) -> bool {
        let mut seen = vec![false; self.node_count];
        for c in &self.cycles {
            if c.edges.is_subset(edges) {
                for &v in &c.nodes {
                    seen[v] = true;
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Every edge appearing in some cycle, ascending.
    pub fn edges(&self) -> Vec<Link> {
        let all: BTreeSet<Link> = self
            .cycles
            .iter()
            .flat_map(|c| c.edges.iter().copied())
            .collect();
        all.into_iter().collect()
    }
}

/// All simple cycles of D_R, sorted by (node set, edge set).
pub fn cycles_of<T: Scalar>(cg: &CondensedGraph<T>, cap: usize) -> Result<Vec<Cycle>, GraphError> {
    let d = cg.reduced_digraph();
    let l = cg.node_count();
    let raw = enumerate_cycles(&d, cap)?;
    let mut out: Vec<Cycle> = raw
        .iter()
        .map(|seq| {
            let mut nodes = BTreeSet::new();
            let mut edges = BTreeSet::new();
            for (k, &v) in seq.iter().enumerate() {
                if v < l {
                    nodes.insert(v);
                }
                if let NodeLabel::Output(j) = d.label(v) {
                    let next = seq[(k + 1) % seq.len()];
                    if let NodeLabel::Input(i) = d.label(next) {
                        edges.insert(Link::new(i, j));
                    }
                }
            }
            Cycle { nodes, edges }
        })
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Convenience: condense, enumerate and package as a [`CycleSet`].
pub fn cycle_set<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
    cap: usize,
) -> Result<(CondensedGraph<T>, CycleSet<T>), SolveError> {
    let cg = condense(sys, costs)?;
    let cycles = cycles_of(&cg, cap)?;
    let cs = CycleSet::new(cg.node_count(), cycles, cg.costs());
    Ok((cg, cs))
}

/// Whenever `E_a ⊆ E_b` (a ≠ b), `N_b` absorbs `N_a`; then identical cycles
/// are collapsed, keeping first occurrences. Idempotent.
pub fn merge_cycles(cs: &[Cycle]) -> Vec<Cycle> {
    let mut cur: Vec<Cycle> = cs.to_vec();
    loop {
        let mut changed = false;
        for b in 0..cur.len() {
            for a in 0..cur.len() {
                if a == b || !cur[a].edges.is_subset(&cur[b].edges) {
                    continue;
                }
                if !cur[a].nodes.is_subset(&cur[b].nodes) {
                    let extra = cur[a].nodes.clone();
                    cur[b].nodes.extend(extra);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut seen = BTreeSet::new();
    cur.retain(|c| seen.insert(c.clone()));
    cur
}

/// Maps a cycle-cover edge set back to a feedback set.
pub fn to_feedback_set(edges: &BTreeSet<Link>) -> FeedbackSet {
    edges.iter().copied().collect()
}
