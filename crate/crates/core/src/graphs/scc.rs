use std::collections::BTreeSet;

use super::Digraph;

/// Strongly connected components in canonical order (by smallest member)
/// plus the deduplicated condensation DAG.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SccDecomposition {
    pub components: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
    pub dag_edges: BTreeSet<(usize, usize)>,
}

impl SccDecomposition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn parents(&self, c: usize) -> Vec<usize> {
        self.dag_edges
            .iter()
            .filter(|&&(_, b)| b == c)
            .map(|&(a, _)| a)
            .collect()
    }

    pub fn children(&self, c: usize) -> Vec<usize> {
        self.dag_edges
            .range((c, 0)..(c + 1, 0))
            .map(|&(_, b)| b)
            .collect()
    }
}

/// Iterative Tarjan over plain adjacency lists. Components come out in
/// reverse topological order, each sorted.
pub(crate) fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut raw: Vec<Vec<usize>> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // (node, position in successor list)
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let succ = &adj[v];
            if *pos < succ.len() {
                let w = succ[*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    raw.push(comp);
                }
            }
        }
    }
    raw
}

/// SCCs in canonical order with the condensation DAG.
pub fn scc_condense(d: &Digraph) -> SccDecomposition {
    let n = d.node_count();
    let mut raw = tarjan(d.adjacency());
    raw.sort_by_key(|c| c[0]);
    let mut component_of = vec![0; n];
    for (k, comp) in raw.iter().enumerate() {
        for &v in comp {
            component_of[v] = k;
        }
    }
    let mut dag_edges = BTreeSet::new();
    for (a, b, _) in d.edges() {
        let (ca, cb) = (component_of[a], component_of[b]);
        if ca != cb {
            dag_edges.insert((ca, cb));
        }
    }
    SccDecomposition {
        components: raw,
        component_of,
        dag_edges,
    }
}
