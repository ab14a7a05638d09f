//! Exact dynamic program for systems whose SCC condensation is a forest of
//! arborescences.
//!
//! Nodes are labelled `N^f_k`: the k-th node (canonical SCC order) of layer
//! f, where layer f holds the nodes at depth f-1 below their root.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::backedge::check_backedge;
use crate::error::{Assumption, SolveError};
use crate::graphs::{max_matching, scc_condense, state_bipartite, state_digraph, SccDecomposition};
use crate::model::{CostMatrix, FeedbackSet, Link, SolveReport, SolveStats, StructuredSystem};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Hierarchy<T> {
    pub scc: SccDecomposition,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub roots: Vec<usize>,
    /// `layers[f - 1]` lists the SCCs of layer f in canonical order.
    pub layers: Vec<Vec<usize>>,
    /// One-based (layer, position) of every SCC.
    pub position: Vec<(usize, usize)>,
    /// Inputs attached to an ancestor (or the node itself).
    pub ancestor_inputs: Vec<BTreeSet<usize>>,
    /// Outputs attached to a descendant (or the node itself).
    pub descendant_outputs: Vec<BTreeSet<usize>>,
    /// Finite-cost links covering each node, ascending.
    pub covering: Vec<Vec<(Link, T)>>,
    input_scc: Vec<usize>,
    output_scc: Vec<usize>,
}

impl<T: Scalar> Hierarchy<T> {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// `N^f_k` label of an SCC.
    pub fn label(&self, node: usize) -> String {
        let (f, k) = self.position[node];
        format!("N^{f}_{k}")
    }

    /// SCC at one-based (layer, position).
    pub fn node_at(&self, layer: usize, pos: usize) -> usize {
        self.layers[layer - 1][pos - 1]
    }

    /// Reflexive ancestor test.
    pub fn is_ancestor(&self, a: usize, mut b: usize) -> bool {
        loop {
            if a == b {
                return true;
            }
            match self.parent[b] {
                Some(p) => b = p,
                None => return false,
            }
        }
    }

    /// Whether `link` puts `node` on a cycle: `node` lies on the tree path
    /// from the input's SCC down to the output's SCC.
    pub fn covers(&self, link: Link, node: usize) -> bool {
        self.is_ancestor(self.input_scc[link.input], node)
            && self.is_ancestor(node, self.output_scc[link.output])
    }

    /// Subtree nodes of `node`, preorder.
    pub fn tree(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        out
    }
}

/// Roots of the maximal subtrees of `Tree(node)` left uncovered by `link`.
pub fn forest_of<T: Scalar>(h: &Hierarchy<T>, node: usize, link: Link) -> Vec<usize> {
    let mut roots = Vec::new();
    let mut stack = vec![node];
    while let Some(v) = stack.pop() {
        if h.covers(link, v) {
            stack.extend(h.children[v].iter().copied());
        } else {
            roots.push(v);
        }
    }
    roots.sort_unstable();
    roots
}

/// Builds the layered forest. Requires a unique parent for every non-root
/// SCC, the back-edge structure and a perfect matching of B(A).
pub fn build_hierarchy<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
) -> Result<Hierarchy<T>, SolveError> {
    let scc = scc_condense(&state_digraph(sys));
    let l = scc.len();
    let mut parent = Vec::with_capacity(l);
    for c in 0..l {
        let ps = scc.parents(c);
        if ps.len() > 1 {
            return Err(SolveError::NotHierarchical {
                node: c + 1,
                parents: ps.len(),
            });
        }
        parent.push(ps.first().copied());
    }
    let bad = check_backedge(sys, costs);
    if !bad.is_empty() {
        let names: Vec<String> = bad.iter().map(Link::to_string).collect();
        return Err(SolveError::AssumptionViolated {
            assumption: Assumption::BackEdge,
            detail: format!("no open-loop path for {}", names.join(",")),
        });
    }
    let size = max_matching(&state_bipartite(sys)).size;
    if size < sys.n() {
        return Err(SolveError::AssumptionViolated {
            assumption: Assumption::PerfectMatching,
            detail: format!("maximum matching {size} < {}", sys.n()),
        });
    }

    let children: Vec<Vec<usize>> = (0..l).map(|c| scc.children(c)).collect();
    let roots: Vec<usize> = (0..l).filter(|&c| parent[c].is_none()).collect();
    let mut depth = vec![0usize; l];
    let mut queue: std::collections::VecDeque<usize> = roots.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for &w in &children[v] {
            depth[w] = depth[v] + 1;
            queue.push_back(w);
        }
    }
    let height = depth.iter().max().map_or(0, |d| d + 1);
    let mut layers = vec![Vec::new(); height];
    for c in 0..l {
        layers[depth[c]].push(c);
    }
    let mut position = vec![(0, 0); l];
    for (f, layer) in layers.iter().enumerate() {
        for (k, &c) in layer.iter().enumerate() {
            position[c] = (f + 1, k + 1);
        }
    }

    let input_scc: Vec<usize> = sys
        .input_states()
        .iter()
        .map(|&x| scc.component_of[x])
        .collect();
    let output_scc: Vec<usize> = sys
        .output_states()
        .iter()
        .map(|&x| scc.component_of[x])
        .collect();
    let mut h = Hierarchy {
        scc,
        parent,
        children,
        roots,
        layers,
        position,
        ancestor_inputs: vec![BTreeSet::new(); l],
        descendant_outputs: vec![BTreeSet::new(); l],
        covering: vec![Vec::new(); l],
        input_scc,
        output_scc,
    };
    for c in 0..l {
        h.ancestor_inputs[c] = (0..sys.m())
            .filter(|&i| h.is_ancestor(h.input_scc[i], c))
            .collect();
        h.descendant_outputs[c] = (0..sys.p())
            .filter(|&j| h.is_ancestor(c, h.output_scc[j]))
            .collect();
        h.covering[c] = costs
            .iter()
            .filter(|(link, _)| {
                h.ancestor_inputs[c].contains(&link.input)
                    && h.descendant_outputs[c].contains(&link.output)
            })
            .collect();
    }
    Ok(h)
}

/// One row of a node's min-table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate<T> {
    pub link: Link,
    pub cost: T,
    /// Forest subtree roots, as `N^f_k` labels.
    pub forest: Vec<String>,
    pub forest_cost: T,
    pub total: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DpCell<T> {
    pub label: String,
    /// One-based canonical SCC index.
    pub scc: usize,
    #[serde(skip)]
    pub node: usize,
    pub candidates: Vec<Candidate<T>>,
    pub chosen: Option<Link>,
    pub cost: Option<T>,
    pub z: BTreeSet<Link>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DpTable<T> {
    /// Cells in evaluation order: deepest layer first.
    pub cells: Vec<DpCell<T>>,
}

impl<T: Scalar> DpTable<T> {
    pub fn cell(&self, label: &str) -> Option<&DpCell<T>> {
        self.cells.iter().find(|c| c.label == label)
    }

    /// Plain-text min-tables, one block per node.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for cell in &self.cells {
            let _ = writeln!(s, "c(Z({})) = min {{", cell.label);
            for c in &cell.candidates {
                let forest = if c.forest.is_empty() {
                    "-".to_string()
                } else {
                    c.forest.join(",")
                };
                let _ = writeln!(
                    s,
                    "  {} : {} + {} [{}] = {}",
                    c.link, c.cost, c.forest_cost, forest, c.total
                );
            }
            match (cell.cost, cell.chosen) {
                (Some(cost), Some(link)) => {
                    let z: FeedbackSet = cell.z.iter().copied().collect();
                    let _ = writeln!(s, "}} = {cost} via {link}, Z = {z}");
                }
                _ => {
                    let _ = writeln!(s, "}} = infeasible");
                }
            }
        }
        s
    }
}

/// Outcome of the dynamic program.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchicalRun<T> {
    pub table: DpTable<T>,
    /// `None` when some SCC has no covering link.
    pub solution: Option<(BTreeSet<Link>, T)>,
}

/// Bottom-up over layers; each node takes the cheapest covering link plus
/// the optimal covers of the subtrees it leaves uncovered (ties to the
/// lowest link).
pub fn hierarchical_dp<T: Scalar>(h: &Hierarchy<T>) -> HierarchicalRun<T> {
    let l = h.len();
    let mut best: Vec<Option<(T, BTreeSet<Link>)>> = vec![None; l];
    let mut cells = Vec::with_capacity(l);
    for layer in h.layers.iter().rev() {
        for &node in layer {
            let mut candidates = Vec::new();
            let mut pick: Option<(Link, T, BTreeSet<Link>)> = None;
            for &(link, cost) in &h.covering[node] {
                let roots = forest_of(h, node, link);
                let mut forest_cost = T::zero();
                let mut z = BTreeSet::from([link]);
                let mut ok = true;
                for &r in &roots {
                    match &best[r] {
                        Some((c, zr)) => {
                            forest_cost = forest_cost + *c;
                            z.extend(zr.iter().copied());
                        }
                        None => ok = false,
                    }
                }
                let total = cost + forest_cost;
                candidates.push(Candidate {
                    link,
                    cost,
                    forest: roots.iter().map(|&r| h.label(r)).collect(),
                    forest_cost,
                    total,
                });
                if ok
                    && pick
                        .as_ref()
                        .is_none_or(|(_, t, _)| total.definitely_lt(*t))
                {
                    pick = Some((link, total, z));
                }
            }
            let (chosen, cost, z) = match pick {
                Some((link, total, z)) => {
                    best[node] = Some((total, z.clone()));
                    (Some(link), Some(total), z)
                }
                None => (None, None, BTreeSet::new()),
            };
            cells.push(DpCell {
                label: h.label(node),
                scc: node + 1,
                node,
                candidates,
                chosen,
                cost,
                z,
            });
        }
    }
    let mut edges = BTreeSet::new();
    let mut total = T::zero();
    let mut feasible = true;
    for &r in &h.roots {
        match &best[r] {
            Some((c, z)) => {
                total = total + *c;
                edges.extend(z.iter().copied());
            }
            None => feasible = false,
        }
    }
    HierarchicalRun {
        table: DpTable { cells },
        solution: feasible.then_some((edges, total)),
    }
}

pub fn hierarchical_solve<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
    trace: bool,
) -> Result<SolveReport<T>, SolveError> {
    let start = Instant::now();
    let h = build_hierarchy(sys, costs)?;
    let run = hierarchical_dp(&h);
    let stats = SolveStats {
        cycles: 0,
        iterations: run.table.cells.len(),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let trace = trace.then(|| serde_json::to_value(&run.table).expect("table serializes"));
    let report = match run.solution {
        Some((edges, _)) => SolveReport::feasible(
            "hierarchical",
            sys,
            costs,
            edges.into_iter().collect(),
            stats,
        )?,
        None => {
            let stuck: Vec<String> = run
                .table
                .cells
                .iter()
                .filter(|c| c.candidates.is_empty())
                .map(|c| c.label.clone())
                .collect();
            SolveReport::infeasible(
                "hierarchical",
                format!("no feedback link covers {}", stuck.join(",")),
                stats,
            )
        }
    };
    Ok(report.with_trace(trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_scc() {
        let sys = StructuredSystem::new(1, [(0, 0)], vec![0], vec![0]).unwrap();
        let p = CostMatrix::from_triples([(0, 0, 4.0)]).unwrap();
        let h = build_hierarchy(&sys, &p).unwrap();
        assert_eq!(h.layers, vec![vec![0]]);
        assert_eq!(h.covering[0], vec![(Link::new(0, 0), 4.0)]);
        let r = hierarchical_solve(&sys, &p, false).unwrap();
        assert_eq!(r.cost(), Some(4.0));
    }

    #[test]
    fn diamond_is_rejected() {
        let sys = StructuredSystem::new(
            4,
            [
                (0, 0),
                (1, 1),
                (2, 2),
                (3, 3),
                (0, 1),
                (0, 2),
                (1, 3),
                (2, 3),
            ],
            vec![],
            vec![],
        )
        .unwrap();
        let err = build_hierarchy(&sys, &CostMatrix::<f64>::empty()).unwrap_err();
        assert_eq!(
            err,
            SolveError::NotHierarchical {
                node: 4,
                parents: 2
            }
        );
    }

    #[test]
    fn leaf_forest_is_empty() {
        let sys =
            StructuredSystem::new(2, [(0, 0), (1, 1), (0, 1)], vec![0, 1], vec![0, 1]).unwrap();
        let p = CostMatrix::from_triples([(0, 1, 1.0), (1, 1, 1.0)]).unwrap();
        let h = build_hierarchy(&sys, &p).unwrap();
        assert!(forest_of(&h, 1, Link::new(1, 1)).is_empty());
        assert!(forest_of(&h, 0, Link::new(0, 1)).is_empty());
        assert_eq!(forest_of(&h, 0, Link::new(0, 0)), vec![1]);
    }

    #[test]
    fn uncovered_node_is_infeasible() {
        let sys = StructuredSystem::new(2, [(0, 0), (1, 1), (0, 1)], vec![0], vec![0]).unwrap();
        let p = CostMatrix::from_triples([(0, 0, 1.0)]).unwrap();
        let r = hierarchical_solve(&sys, &p, false).unwrap();
        assert!(r.cost().is_none());
    }
}
