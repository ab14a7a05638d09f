use std::collections::BTreeSet;

use super::Digraph;
use crate::error::GraphError;

pub const DEFAULT_CYCLE_CAP: usize = 1_000_000;

/// All simple cycles of `d` (Johnson). Each cycle is a node sequence
/// starting at its smallest node; output is ordered by start node, then by
/// DFS order over ascending successors. Self-loops count as cycles.
pub fn enumerate_cycles(d: &Digraph, cap: usize) -> Result<Vec<Vec<usize>>, GraphError> {
    assert!(cap > 0, "cycle cap must be positive");
    let n = d.node_count();
    let mut out = Vec::new();
    let mut search = Search {
        d,
        allowed: vec![false; n],
        blocked: vec![false; n],
        block_map: vec![BTreeSet::new(); n],
        path: Vec::new(),
        cap,
    };
    for s in 0..n {
        search.restrict(s);
        if !search.allowed[s] {
            continue;
        }
        for v in 0..n {
            search.blocked[v] = false;
            search.block_map[v].clear();
        }
        search.circuit(s, s, &mut out)?;
    }
    Ok(out)
}

struct Search<'a> {
    d: &'a Digraph,
    allowed: Vec<bool>,
    blocked: Vec<bool>,
    block_map: Vec<BTreeSet<usize>>,
    path: Vec<usize>,
    cap: usize,
}

impl Search<'_> {
    /// Marks the nodes of the SCC of `s` in the subgraph induced by nodes >= s.
    fn restrict(&mut self, s: usize) {
        let n = self.d.node_count();
        let mut fwd = vec![false; n];
        let mut stack = vec![s];
        fwd[s] = true;
        while let Some(v) = stack.pop() {
            for &w in self.d.successors(v) {
                if w >= s && !fwd[w] {
                    fwd[w] = true;
                    stack.push(w);
                }
            }
        }
        // backward reachability via a reverse scan of forward nodes
        let mut bwd = vec![false; n];
        bwd[s] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for v in s..n {
                if fwd[v] && !bwd[v] && self.d.successors(v).iter().any(|&w| w >= s && bwd[w]) {
                    bwd[v] = true;
                    changed = true;
                }
            }
        }
        for v in 0..n {
            self.allowed[v] = v >= s && fwd[v] && bwd[v];
        }
        // s alone is only a cycle if it has a self-loop; circuit() handles that
    }

    fn unblock(&mut self, u: usize) {
        let mut stack = vec![u];
        while let Some(v) = stack.pop() {
            if self.blocked[v] {
                self.blocked[v] = false;
                let waiting = std::mem::take(&mut self.block_map[v]);
                stack.extend(waiting);
            }
        }
    }

    fn circuit(
        &mut self,
        v: usize,
        s: usize,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<bool, GraphError> {
        let mut found = false;
        self.path.push(v);
        self.blocked[v] = true;
        let d = self.d;
        for &w in d.successors(v) {
            if !self.allowed[w] {
                continue;
            }
            if w == s {
                if out.len() == self.cap {
                    return Err(GraphError::CycleCapExceeded {
                        cap: self.cap,
                        found: out.len(),
                    });
                }
                out.push(self.path.clone());
                found = true;
            } else if !self.blocked[w] && self.circuit(w, s, out)? {
                found = true;
            }
        }
        if found {
            self.unblock(v);
        } else {
            for &w in d.successors(v) {
                if self.allowed[w] {
                    self.block_map[w].insert(v);
                }
            }
        }
        self.path.pop();
        Ok(found)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::EdgeKind;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Digraph {
        let mut d = Digraph::with_nodes(n);
        for &(a, b) in edges {
            d.add_edge(a, b, EdgeKind::State);
        }
        d
    }

    #[test]
    fn three_cycle() {
        let c = enumerate_cycles(&graph(3, &[(0, 1), (1, 2), (2, 0)]), 10).unwrap();
        assert_eq!(c, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn dag_has_none() {
        let c = enumerate_cycles(&graph(4, &[(0, 1), (1, 2), (0, 3)]), 10).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn self_loops_and_two_cycles() {
        let c = enumerate_cycles(&graph(2, &[(0, 0), (0, 1), (1, 0), (1, 1)]), 10).unwrap();
        assert_eq!(c, vec![vec![0], vec![0, 1], vec![1]]);
    }

    #[test]
    fn cap_exceeded() {
        let mut edges = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    edges.push((a, b));
                }
            }
        }
        let err = enumerate_cycles(&graph(4, &edges), 5).unwrap_err();
        assert_eq!(err, GraphError::CycleCapExceeded { cap: 5, found: 5 });
        // K4 has 6 + 8 + 6 = 20 simple cycles
        assert_eq!(enumerate_cycles(&graph(4, &edges), 100).unwrap().len(), 20);
    }
}
