//! Back-edge feedback structures reduce to weighted set cover: every
//! feasible link becomes the set of states it puts on a cycle.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Assumption, SolveError};
use crate::graphs::{max_matching, state_bipartite, state_digraph, Digraph};
use crate::model::{CostMatrix, FeedbackSet, Link, SolveReport, SolveStats, StructuredSystem};
use crate::scalar::Scalar;

/// Links whose output is not reachable from their input in the open loop.
pub fn check_backedge<T: Scalar>(sys: &StructuredSystem, costs: &CostMatrix<T>) -> Vec<Link> {
    let reach = Reach::new(sys);
    costs
        .links()
        .filter(|l| !reach.forward[sys.input_state(l.input)][sys.output_state(l.output)])
        .collect()
}

struct Reach {
    /// forward[a][b]: b reachable from a (reflexive).
    forward: Vec<Vec<bool>>,
}

impl Reach {
    fn new(sys: &StructuredSystem) -> Self {
        let d: Digraph = state_digraph(sys);
        Self {
            forward: (0..sys.n()).map(|x| d.reachable_from(x)).collect(),
        }
    }

    /// States on some path from `a` to `b`.
    fn between(&self, a: usize, b: usize) -> BTreeSet<usize> {
        (0..self.forward.len())
            .filter(|&x| self.forward[a][x] && self.forward[x][b])
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetCoverInstance<T> {
    /// Zero-based state indices.
    pub universe: Vec<usize>,
    pub sets: Vec<BTreeSet<usize>>,
    pub weights: Vec<T>,
    /// The feedback link each set came from.
    pub provenance: Vec<Link>,
}

impl<T: Scalar> Serialize for SetCoverInstance<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a, T> {
            elements: Vec<String>,
            weight: &'a T,
            link: Link,
        }
        let name = |x: &usize| format!("x{}", x + 1);
        let sets: Vec<Entry<T>> = self
            .sets
            .iter()
            .zip(&self.weights)
            .zip(&self.provenance)
            .map(|((set, weight), &link)| Entry {
                elements: set.iter().map(name).collect(),
                weight,
                link,
            })
            .collect();
        let mut st = s.serialize_struct("SetCoverInstance", 2)?;
        st.serialize_field(
            "universe",
            &self.universe.iter().map(name).collect::<Vec<_>>(),
        )?;
        st.serialize_field("sets", &sets)?;
        st.end()
    }
}

impl<T: Scalar> SetCoverInstance<T> {
    pub fn weight(&self, chosen: &[usize]) -> T {
        chosen.iter().map(|&k| self.weights[k]).sum()
    }

    pub fn covers(&self, chosen: &[usize]) -> bool {
        let got: BTreeSet<usize> = chosen
            .iter()
            .flat_map(|&k| self.sets[k].iter().copied())
            .collect();
        self.universe.iter().all(|x| got.contains(x))
    }

    pub fn feedback_set(&self, chosen: &[usize]) -> FeedbackSet {
        chosen.iter().map(|&k| self.provenance[k]).collect()
    }
}

fn require_matching(sys: &StructuredSystem) -> Result<(), SolveError> {
    let size = max_matching(&state_bipartite(sys)).size;
    if size < sys.n() {
        return Err(SolveError::AssumptionViolated {
            assumption: Assumption::PerfectMatching,
            detail: format!("maximum matching {size} < {}", sys.n()),
        });
    }
    Ok(())
}

/// One set per feasible link, in (input, output) order: the states in the
/// SCC formed by adding that single link to the open loop.
pub fn reduce_to_set_cover<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
) -> Result<SetCoverInstance<T>, SolveError> {
    let bad = check_backedge(sys, costs);
    if !bad.is_empty() {
        let names: Vec<String> = bad.iter().map(Link::to_string).collect();
        return Err(SolveError::AssumptionViolated {
            assumption: Assumption::BackEdge,
            detail: format!("no open-loop path for {}", names.join(",")),
        });
    }
    require_matching(sys)?;
    let reach = Reach::new(sys);
    let mut inst = SetCoverInstance {
        universe: (0..sys.n()).collect(),
        sets: Vec::with_capacity(costs.len()),
        weights: Vec::with_capacity(costs.len()),
        provenance: Vec::with_capacity(costs.len()),
    };
    for (link, w) in costs.iter() {
        inst.sets
            .push(reach.between(sys.input_state(link.input), sys.output_state(link.output)));
        inst.weights.push(w);
        inst.provenance.push(link);
    }
    Ok(inst)
}

/// Chvátal's rule: lowest weight per newly covered element, ties to the
/// lowest set index.
pub fn greedy_set_cover<T: Scalar>(inst: &SetCoverInstance<T>) -> Result<Vec<usize>, SolveError> {
    let coverable: BTreeSet<usize> = inst.sets.iter().flatten().copied().collect();
    let missing: Vec<usize> = inst
        .universe
        .iter()
        .filter(|x| !coverable.contains(x))
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(SolveError::Uncoverable(missing));
    }
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    let mut chosen = Vec::new();
    let need: BTreeSet<usize> = inst.universe.iter().copied().collect();
    while !need.is_subset(&covered) {
        let mut best: Option<(usize, T, usize)> = None;
        for (k, set) in inst.sets.iter().enumerate() {
            let fresh = set
                .iter()
                .filter(|x| need.contains(x) && !covered.contains(x))
                .count();
            if fresh == 0 {
                continue;
            }
            let w = inst.weights[k];
            let better = match best {
                None => true,
                Some((_, bw, bn)) => {
                    (w * T::from_count(bn)).definitely_lt(bw * T::from_count(fresh))
                }
            };
            if better {
                best = Some((k, w, fresh));
            }
        }
        let (k, _, _) = best.expect("coverable");
        covered.extend(inst.sets[k].iter().copied());
        chosen.push(k);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BackedgeOptions {
    /// Drop links violating the back-edge structure instead of refusing.
    pub project: bool,
    pub trace: bool,
}

/// Reduce, cover greedily and map the chosen sets back to links.
pub fn backedge_solve<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
    opts: &BackedgeOptions,
) -> Result<SolveReport<T>, SolveError> {
    let start = Instant::now();
    let mut costs = costs.clone();
    let dropped = if opts.project {
        let bad: BTreeSet<Link> = check_backedge(sys, &costs).into_iter().collect();
        costs.retain(|l| !bad.contains(&l));
        bad
    } else {
        BTreeSet::new()
    };
    let inst = reduce_to_set_cover(sys, &costs)?;
    let stats = |iterations| SolveStats {
        cycles: 0,
        iterations,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let trace = opts.trace.then(|| {
        serde_json::json!({
            "set_cover": inst,
            "dropped": dropped,
        })
    });
    match greedy_set_cover(&inst) {
        Ok(chosen) => {
            let fs = inst.feedback_set(&chosen);
            Ok(
                SolveReport::feasible("backedge", sys, &costs, fs, stats(chosen.len()))?
                    .with_trace(trace),
            )
        }
        Err(SolveError::Uncoverable(xs)) => {
            let names: Vec<String> = xs.iter().map(|x| format!("x{}", x + 1)).collect();
            Ok(SolveReport::infeasible(
                "backedge",
                format!("states {} lie in no feedback SCC", names.join(",")),
                stats(0),
            )
            .with_trace(trace))
        }
        Err(e) => Err(e),
    }
}
