//! The no-structurally-fixed-modes test on a closed-loop pattern.
//!
//! Condition (a): every state sits in an SCC of the closed-loop digraph that
//! also contains a feedback edge (both its output and input node).
//! Condition (b): the closed-loop bipartite graph has a perfect matching.

use serde::Serialize;

use crate::graphs::{
    closed_loop_bipartite, closed_loop_digraph, input_node, max_matching, output_node,
    scc_condense, state_bipartite, tarjan, NodeLabel,
};
use crate::model::{FeedbackSet, Link, StructuredSystem};

/// Per-state evidence for condition (a).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StateWitness {
    /// One-based state name, e.g. `x3`.
    pub state: String,
    #[serde(skip)]
    pub state_index: usize,
    /// Closed-loop SCC members, by name.
    pub component: Vec<String>,
    /// Smallest feedback link inside that SCC, if any.
    pub feedback: Option<Link>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionA {
    pub pass: bool,
    pub witnesses: Vec<StateWitness>,
}

impl ConditionA {
    /// Zero-based indices of states with no feedback edge in their SCC.
    pub fn failing_states(&self) -> Vec<usize> {
        self.witnesses
            .iter()
            .filter(|w| w.feedback.is_none())
            .map(|w| w.state_index)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionB {
    pub pass: bool,
    pub matching_size: usize,
    pub required: usize,
    /// Matched pairs as (primed node, node) names.
    pub matching: Vec<(String, String)>,
    /// Primed vertices left unmatched.
    pub deficient: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SfmCertificate {
    pub pass: bool,
    pub condition_a: ConditionA,
    pub condition_b: ConditionB,
}

fn closed_loop_name(sys: &StructuredSystem, v: usize) -> String {
    let label = if v < sys.n() {
        NodeLabel::State(v)
    } else if v < sys.n() + sys.m() {
        NodeLabel::Input(v - sys.n())
    } else {
        NodeLabel::Output(v - sys.n() - sys.m())
    };
    label.name()
}

pub fn check_condition_a(sys: &StructuredSystem, fs: &FeedbackSet) -> ConditionA {
    let d = closed_loop_digraph(sys, fs);
    let scc = scc_condense(&d);
    let mut inside: Vec<Option<Link>> = vec![None; scc.len()];
    // links iterate in ascending order, so the first hit is the smallest
    for link in fs.iter() {
        let cy = scc.component_of[output_node(sys, link.output)];
        let cu = scc.component_of[input_node(sys, link.input)];
        if cy == cu && inside[cy].is_none() {
            inside[cy] = Some(link);
        }
    }
    let witnesses: Vec<StateWitness> = (0..sys.n())
        .map(|x| {
            let c = scc.component_of[x];
            StateWitness {
                state: NodeLabel::State(x).name(),
                state_index: x,
                component: scc.components[c]
                    .iter()
                    .map(|&v| closed_loop_name(sys, v))
                    .collect(),
                feedback: inside[c],
            }
        })
        .collect();
    ConditionA {
        pass: witnesses.iter().all(|w| w.feedback.is_some()),
        witnesses,
    }
}

pub fn check_condition_b(sys: &StructuredSystem, fs: &FeedbackSet) -> ConditionB {
    let b = closed_loop_bipartite(sys, fs);
    let m = max_matching(&b);
    let name = |v: usize| closed_loop_name(sys, v);
    ConditionB {
        pass: m.size == b.left,
        matching_size: m.size,
        required: b.left,
        matching: m
            .pairs()
            .map(|(l, r)| (format!("{}'", name(l)), name(r)))
            .collect(),
        deficient: m
            .unmatched_left()
            .into_iter()
            .map(|l| format!("{}'", name(l)))
            .collect(),
    }
}

pub fn has_no_sfm(sys: &StructuredSystem, fs: &FeedbackSet) -> SfmCertificate {
    let condition_a = check_condition_a(sys, fs);
    let condition_b = check_condition_b(sys, fs);
    SfmCertificate {
        pass: condition_a.pass && condition_b.pass,
        condition_a,
        condition_b,
    }
}

/// Reusable pass/fail checker for exhaustive searches. Answers the same
/// question as [`has_no_sfm`] without building witnesses.
#[derive(Clone, Debug)]
pub struct SfmChecker {
    sys: StructuredSystem,
    base_adj: Vec<Vec<usize>>,
    base_perfect: bool,
}

impl SfmChecker {
    pub fn new(sys: &StructuredSystem) -> Self {
        let d = closed_loop_digraph(sys, &FeedbackSet::new());
        let base_perfect = max_matching(&state_bipartite(sys)).size == sys.n();
        Self {
            sys: sys.clone(),
            base_adj: d.adjacency().to_vec(),
            base_perfect,
        }
    }

    /// Whether B(A) alone is perfect, in which case (b) always holds.
    pub fn base_perfect(&self) -> bool {
        self.base_perfect
    }

    pub fn condition_a(&self, links: &[Link]) -> bool {
        let sys = &self.sys;
        if links.is_empty() {
            return sys.n() == 0;
        }
        let mut adj = self.base_adj.clone();
        for l in links {
            adj[output_node(sys, l.output)].push(input_node(sys, l.input));
        }
        let comps = tarjan(&adj);
        let mut comp_of = vec![0; adj.len()];
        for (k, c) in comps.iter().enumerate() {
            for &v in c {
                comp_of[v] = k;
            }
        }
        let mut good = vec![false; comps.len()];
        for l in links {
            let cy = comp_of[output_node(sys, l.output)];
            if cy == comp_of[input_node(sys, l.input)] {
                good[cy] = true;
            }
        }
        (0..sys.n()).all(|x| good[comp_of[x]])
    }

    pub fn condition_b(&self, links: &[Link]) -> bool {
        if self.base_perfect {
            return true;
        }
        let fs: FeedbackSet = links.iter().copied().collect();
        let b = closed_loop_bipartite(&self.sys, &fs);
        max_matching(&b).size == b.left
    }

    pub fn passes(&self, links: &[Link]) -> bool {
        self.condition_a(links) && self.condition_b(links)
    }
}
