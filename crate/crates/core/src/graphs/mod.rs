//! Graph kernels: system digraphs, SCC condensation, bipartite matching
//! and bounded simple-cycle enumeration.

mod cycles;
mod matching;
mod scc;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::model::{FeedbackSet, StructuredSystem};

pub use cycles::{enumerate_cycles, DEFAULT_CYCLE_CAP};
pub use matching::{max_matching, Matching};
pub(crate) use scc::tarjan;
pub use scc::{scc_condense, SccDecomposition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeLabel {
    State(usize),
    Input(usize),
    Output(usize),
    Scc(usize),
}

impl NodeLabel {
    pub fn name(&self) -> String {
        match self {
            NodeLabel::State(i) => format!("x{}", i + 1),
            NodeLabel::Input(i) => format!("u{}", i + 1),
            NodeLabel::Output(i) => format!("y{}", i + 1),
            NodeLabel::Scc(i) => format!("N{}", i + 1),
        }
    }

    fn shape(&self) -> &'static str {
        match self {
            NodeLabel::State(_) => "ellipse",
            NodeLabel::Input(_) => "box",
            NodeLabel::Output(_) => "diamond",
            NodeLabel::Scc(_) => "doubleoctagon",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    State,
    Input,
    Output,
    Feedback,
}

/// A labelled digraph with sorted adjacency.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Digraph {
    labels: Vec<NodeLabel>,
    edges: BTreeSet<(usize, usize, EdgeKind)>,
    adj: Vec<Vec<usize>>,
    annotations: Vec<((usize, usize), String)>,
}

impl Digraph {
    pub fn new(labels: Vec<NodeLabel>) -> Self {
        let n = labels.len();
        Self {
            labels,
            edges: BTreeSet::new(),
            adj: vec![Vec::new(); n],
            annotations: Vec::new(),
        }
    }

    /// Plain digraph over `n` state nodes.
    pub fn with_nodes(n: usize) -> Self {
        Self::new((0..n).map(NodeLabel::State).collect())
    }

    pub fn add_node(&mut self, label: NodeLabel) -> usize {
        self.labels.push(label);
        self.adj.push(Vec::new());
        self.labels.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize, kind: EdgeKind) {
        if self.edges.insert((from, to, kind)) {
            if let Err(pos) = self.adj[from].binary_search(&to) {
                self.adj[from].insert(pos, to);
            }
        }
    }

    /// Attaches a DOT label to an existing edge.
    pub fn annotate(&mut self, from: usize, to: usize, text: String) {
        self.annotations.push(((from, to), text));
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, v: usize) -> NodeLabel {
        self.labels[v]
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    /// Distinct successors of `v`, ascending.
    pub fn successors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adj
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adj[from].binary_search(&to).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, EdgeKind)> + '_ {
        self.edges.iter().copied()
    }

    /// Nodes reachable from `start` (including `start`).
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Graphviz rendering. Feedback edges are red.
    pub fn to_dot(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph {name} {{");
        for (v, label) in self.labels.iter().enumerate() {
            let _ = writeln!(
                s,
                "  n{v} [label=\"{}\", shape={}];",
                label.name(),
                label.shape()
            );
        }
        for &(a, b, kind) in &self.edges {
            let mut attrs = Vec::new();
            if kind == EdgeKind::Feedback {
                attrs.push("color=red".to_string());
            }
            for ((x, y), text) in &self.annotations {
                if (*x, *y) == (a, b) {
                    attrs.push(format!("label=\"{text}\""));
                }
            }
            if attrs.is_empty() {
                let _ = writeln!(s, "  n{a} -> n{b};");
            } else {
                let _ = writeln!(s, "  n{a} -> n{b} [{}];", attrs.join(", "));
            }
        }
        s.push_str("}\n");
        s
    }
}

/// D(A): one node per state, an edge per free entry of the state matrix.
pub fn state_digraph(sys: &StructuredSystem) -> Digraph {
    let mut d = Digraph::with_nodes(sys.n());
    for &(from, to) in sys.state_edges() {
        d.add_edge(from, to, EdgeKind::State);
    }
    d
}

/// Node index of input `i` in the closed-loop layout.
pub fn input_node(sys: &StructuredSystem, i: usize) -> usize {
    sys.n() + i
}

/// Node index of output `j` in the closed-loop layout.
pub fn output_node(sys: &StructuredSystem, j: usize) -> usize {
    sys.n() + sys.m() + j
}

/// D(A,B,C,K). States come first, then inputs, then outputs.
pub fn closed_loop_digraph(sys: &StructuredSystem, fs: &FeedbackSet) -> Digraph {
    let mut labels: Vec<NodeLabel> = (0..sys.n()).map(NodeLabel::State).collect();
    labels.extend((0..sys.m()).map(NodeLabel::Input));
    labels.extend((0..sys.p()).map(NodeLabel::Output));
    let mut d = Digraph::new(labels);
    for &(from, to) in sys.state_edges() {
        d.add_edge(from, to, EdgeKind::State);
    }
    for (i, &x) in sys.input_states().iter().enumerate() {
        d.add_edge(input_node(sys, i), x, EdgeKind::Input);
    }
    for (j, &x) in sys.output_states().iter().enumerate() {
        d.add_edge(x, output_node(sys, j), EdgeKind::Output);
    }
    for link in fs.iter() {
        d.add_edge(
            output_node(sys, link.output),
            input_node(sys, link.input),
            EdgeKind::Feedback,
        );
    }
    d
}

/// A bipartite graph with `left` and `right` vertex counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartite {
    pub left: usize,
    pub right: usize,
    adj: Vec<Vec<usize>>,
}

impl Bipartite {
    pub fn new(left: usize, right: usize) -> Self {
        Self {
            left,
            right,
            adj: vec![Vec::new(); left],
        }
    }

    pub fn add_edge(&mut self, l: usize, r: usize) {
        assert!(
            l < self.left && r < self.right,
            "bipartite edge out of range"
        );
        if let Err(pos) = self.adj[l].binary_search(&r) {
            self.adj[l].insert(pos, r);
        }
    }

    pub fn neighbors(&self, l: usize) -> &[usize] {
        &self.adj[l]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }
}

/// B(A): left copies x', right x, with (x'_j, x_i) whenever x_i -> x_j.
pub fn state_bipartite(sys: &StructuredSystem) -> Bipartite {
    let mut b = Bipartite::new(sys.n(), sys.n());
    for &(from, to) in sys.state_edges() {
        b.add_edge(to, from);
    }
    b
}

/// B(A,B,C,K) over the closed-loop node layout: every digraph edge a -> b
/// becomes (b', a), plus the (u'_i, u_i) and (y'_j, y_j) self-links.
pub fn closed_loop_bipartite(sys: &StructuredSystem, fs: &FeedbackSet) -> Bipartite {
    let d = closed_loop_digraph(sys, fs);
    let total = d.node_count();
    let mut b = Bipartite::new(total, total);
    for (from, to, _) in d.edges() {
        b.add_edge(to, from);
    }
    for v in sys.n()..total {
        b.add_edge(v, v);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Link;

    fn sys3() -> StructuredSystem {
        StructuredSystem::new(3, [(0, 1), (1, 2), (2, 0)], vec![0], vec![1]).unwrap()
    }

    #[test]
    fn three_cycle_digraph() {
        let d = state_digraph(&sys3());
        assert_eq!(d.node_count(), 3);
        assert_eq!(d.edge_count(), 3);
    }

    #[test]
    fn empty_edge_set_gives_isolated_nodes() {
        let sys = StructuredSystem::new(4, [], vec![], vec![]).unwrap();
        let d = state_digraph(&sys);
        assert_eq!(d.node_count(), 4);
        assert_eq!(d.edge_count(), 0);
    }

    #[test]
    fn closed_loop_without_feedback_has_no_feedback_edges() {
        let d = closed_loop_digraph(&sys3(), &FeedbackSet::new());
        assert_eq!(d.node_count(), 5);
        assert!(d.edges().all(|(_, _, k)| k != EdgeKind::Feedback));
        let fs: FeedbackSet = [Link::new(0, 0)].into_iter().collect();
        let d = closed_loop_digraph(&sys3(), &fs);
        assert_eq!(d.edges().filter(|e| e.2 == EdgeKind::Feedback).count(), 1);
        assert!(d.has_edge(4, 3));
    }

    #[test]
    fn three_cycle_bipartite_is_perfect() {
        let b = state_bipartite(&sys3());
        assert_eq!(b.edge_count(), 3);
        assert_eq!(max_matching(&b).size, 3);
    }

    #[test]
    fn path_without_self_loops_is_deficient() {
        let sys = StructuredSystem::new(2, [(0, 1)], vec![], vec![]).unwrap();
        let m = max_matching(&state_bipartite(&sys));
        assert_eq!(m.size, 1);
        assert!(!m.is_perfect(2, 2));
    }

    #[test]
    fn dot_marks_feedback_red() {
        let fs: FeedbackSet = [Link::new(0, 0)].into_iter().collect();
        let dot = closed_loop_digraph(&sys3(), &fs).to_dot("g");
        assert!(dot.contains("n4 -> n3 [color=red];"));
        assert!(dot.contains("shape=box"));
        assert!(dot.contains("shape=diamond"));
    }
}
