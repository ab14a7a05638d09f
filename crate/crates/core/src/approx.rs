//! Greedy cycle selection and the potential-function solver for the cycle
//! formulation.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;

use crate::error::SolveError;
use crate::graphs::DEFAULT_CYCLE_CAP;
use crate::model::{CostMatrix, Link, SolveReport, SolveStats, StructuredSystem};
use crate::reduction::{cycle_set, merge_cycles, to_feedback_set, CycleSet};
use crate::scalar::Scalar;

/// Result of one greedy run.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyRun<T> {
    /// Selected edges, never including free ones.
    pub edges: BTreeSet<Link>,
    pub cost: T,
    /// Cycle indices in selection order.
    pub picks: Vec<usize>,
}

/// `a/na < b/nb` beyond tolerance, without dividing.
fn ratio_lt<T: Scalar>(a: T, na: usize, b: T, nb: usize) -> bool {
    (a * T::from_count(nb)).definitely_lt(b * T::from_count(na))
}

/// Greedy cover of `target`. Edges in `free` cost nothing and are never
/// reported. Each round picks the cycle with the lowest residual cost per
/// residual node; ties go to the lowest index.
pub fn greedy_targeted<T: Scalar>(
    cs: &CycleSet<T>,
    target: &BTreeSet<usize>,
    free: &BTreeSet<Link>,
) -> Result<GreedyRun<T>, SolveError> {
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    let mut edges: BTreeSet<Link> = BTreeSet::new();
    let mut picks = Vec::new();
    let reachable: BTreeSet<usize> = cs
        .cycles
        .iter()
        .flat_map(|c| c.nodes.iter().copied())
        .collect();
    let missing: Vec<usize> = target.difference(&reachable).copied().collect();
    if !missing.is_empty() {
        return Err(SolveError::Uncoverable(missing));
    }
    while covered.len() < target.len() {
        let mut best: Option<(usize, T, usize)> = None;
        for (k, c) in cs.cycles.iter().enumerate() {
            let fresh = c
                .nodes
                .iter()
                .filter(|v| target.contains(v) && !covered.contains(v))
                .count();
            if fresh == 0 {
                continue;
            }
            let price: T = c
                .edges
                .iter()
                .filter(|e| !free.contains(e) && !edges.contains(e))
                .map(|e| cs.costs[e])
                .sum();
            let better = match best {
                None => true,
                Some((_, bp, bn)) => ratio_lt(price, fresh, bp, bn),
            };
            if better {
                best = Some((k, price, fresh));
            }
        }
        let (k, _, _) = best.expect("target reachable");
        let c = &cs.cycles[k];
        covered.extend(c.nodes.iter().filter(|v| target.contains(v)));
        edges.extend(c.edges.iter().filter(|e| !free.contains(e)));
        picks.push(k);
    }
    let cost = cs.cost(&edges);
    Ok(GreedyRun { edges, cost, picks })
}

/// Greedy over the union of all cycle nodes.
pub fn greedy<T: Scalar>(
    cs: &CycleSet<T>,
    free: &BTreeSet<Link>,
) -> Result<GreedyRun<T>, SolveError> {
    let target: BTreeSet<usize> = cs
        .cycles
        .iter()
        .flat_map(|c| c.nodes.iter().copied())
        .collect();
    greedy_targeted(cs, &target, free)
}

/// Potential of one cycle in one iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotEntry<T> {
    /// One-based cycle index.
    pub cycle: usize,
    pub pot: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotIteration<T> {
    pub iteration: usize,
    pub pots: Vec<PotEntry<T>>,
    /// One-based index of the selected cycle.
    pub selected: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialRun<T> {
    pub edges: BTreeSet<Link>,
    pub cost: T,
    /// The feasible cost known after the first iteration.
    pub first_pot: T,
    pub trace: Vec<PotIteration<T>>,
}

/// Potential-function solver. In every iteration each cycle that still
/// covers something is priced as its residual edge cost plus the greedy
/// completion cost with its edges made free; the cheapest (lowest index on
/// ties) is committed.
pub fn potential_solve<T: Scalar>(cs: &CycleSet<T>) -> Result<PotentialRun<T>, SolveError> {
    let missing = cs.uncoverable();
    if !missing.is_empty() {
        return Err(SolveError::Uncoverable(missing));
    }
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    let mut selected: BTreeSet<Link> = BTreeSet::new();
    let mut trace = Vec::new();
    let mut first_pot = None;
    while covered.len() < cs.node_count {
        let remaining: BTreeSet<usize> = (0..cs.node_count)
            .filter(|v| !covered.contains(v))
            .collect();
        let mut pots = Vec::new();
        let mut best: Option<(usize, T)> = None;
        for (k, c) in cs.cycles.iter().enumerate() {
            if c.nodes.iter().all(|v| covered.contains(v)) {
                continue;
            }
            let own: BTreeSet<Link> = c.edges.difference(&selected).copied().collect();
            let own_cost = cs.cost(&own);
            let target: BTreeSet<usize> = remaining.difference(&c.nodes).copied().collect();
            let mut free = selected.clone();
            free.extend(own.iter().copied());
            let rest = greedy_targeted(cs, &target, &free)?;
            let pot = own_cost + rest.cost;
            pots.push(PotEntry { cycle: k + 1, pot });
            if best.is_none_or(|(_, b)| pot.definitely_lt(b)) {
                best = Some((k, pot));
            }
        }
        let (k, pot) = best.expect("an uncovered node lies on some cycle");
        let committed = cs.cost(&selected);
        first_pot.get_or_insert(committed + pot);
        covered.extend(cs.cycles[k].nodes.iter().copied());
        selected.extend(cs.cycles[k].edges.iter().copied());
        trace.push(PotIteration {
            iteration: trace.len() + 1,
            pots,
            selected: k + 1,
        });
    }
    let cost = cs.cost(&selected);
    Ok(PotentialRun {
        edges: selected,
        cost,
        first_pot: first_pot.unwrap_or_else(T::zero),
        trace,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PotentialOptions {
    pub merge: bool,
    pub cycle_cap: usize,
    pub trace: bool,
}

impl Default for PotentialOptions {
    fn default() -> Self {
        Self {
            merge: true,
            cycle_cap: DEFAULT_CYCLE_CAP,
            trace: false,
        }
    }
}

/// The cycle set the pipeline actually solves (merged when requested).
pub fn prepared_cycles<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
    opts: &PotentialOptions,
) -> Result<CycleSet<T>, SolveError> {
    let (_, mut cs) = cycle_set(sys, costs, opts.cycle_cap)?;
    if opts.merge {
        cs.cycles = merge_cycles(&cs.cycles);
    }
    Ok(cs)
}

/// Full pipeline: reduce, optionally merge, run the potential solver and
/// certify. Uncoverable instances yield an infeasible report.
pub fn solve<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
    opts: &PotentialOptions,
) -> Result<SolveReport<T>, SolveError> {
    let start = Instant::now();
    let cs = prepared_cycles(sys, costs, opts)?;
    let elapsed = |iterations| SolveStats {
        cycles: cs.cycles.len(),
        iterations,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    match potential_solve(&cs) {
        Ok(run) => {
            let trace = opts
                .trace
                .then(|| serde_json::to_value(&run.trace).expect("trace serializes"));
            let stats = elapsed(run.trace.len());
            Ok(
                SolveReport::feasible("potential", sys, costs, to_feedback_set(&run.edges), stats)?
                    .with_trace(trace),
            )
        }
        Err(SolveError::Uncoverable(nodes)) => {
            let names: Vec<String> = nodes.iter().map(|n| format!("N{}", n + 1)).collect();
            Ok(SolveReport::infeasible(
                "potential",
                format!("SCC nodes {} lie on no cycle", names.join(",")),
                elapsed(0),
            ))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::Cycle;
    use std::collections::BTreeMap;

    fn l(i: usize, j: usize) -> Link {
        Link::new(i, j)
    }

    fn two_disjoint() -> CycleSet<f64> {
        CycleSet::new(
            2,
            vec![Cycle::new([0], [l(0, 0)]), Cycle::new([1], [l(1, 1)])],
            BTreeMap::from([(l(0, 0), 2.0), (l(1, 1), 3.0)]),
        )
    }

    #[test]
    fn single_cycle() {
        let cs = CycleSet::new(
            2,
            vec![Cycle::new([0, 1], [l(0, 1)])],
            BTreeMap::from([(l(0, 1), 5.0)]),
        );
        let g = greedy(&cs, &BTreeSet::new()).unwrap();
        assert_eq!(g.edges, BTreeSet::from([l(0, 1)]));
        let p = potential_solve(&cs).unwrap();
        assert_eq!(p.cost, 5.0);
        assert_eq!(p.trace[0].pots[0].pot, 5.0);
    }

    #[test]
    fn disjoint_cycles_union() {
        let p = potential_solve(&two_disjoint()).unwrap();
        assert_eq!(p.edges, BTreeSet::from([l(0, 0), l(1, 1)]));
        assert_eq!(p.cost, 5.0);
    }

    #[test]
    fn free_edges_are_not_reported() {
        let g = greedy(&two_disjoint(), &BTreeSet::from([l(0, 0)])).unwrap();
        assert_eq!(g.edges, BTreeSet::from([l(1, 1)]));
        assert_eq!(g.cost, 3.0);
    }

    #[test]
    fn uncoverable_node() {
        let cs = CycleSet::new(
            2,
            vec![Cycle::new([0], [l(0, 0)])],
            BTreeMap::from([(l(0, 0), 1.0)]),
        );
        assert_eq!(
            potential_solve(&cs).unwrap_err(),
            SolveError::Uncoverable(vec![1])
        );
    }
}
