//! Exhaustive reference solvers for small instances and the edge
//! multiplicity constants used to audit approximation bounds.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::backedge::SetCoverInstance;
use crate::error::SolveError;
use crate::model::{CostMatrix, FeedbackSet, Link, SolveReport, SolveStats, StructuredSystem};
use crate::reduction::CycleSet;
use crate::scalar::Scalar;
use crate::sfm::SfmChecker;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    /// Largest number of candidate links enumerated exhaustively.
    pub max_edges: usize,
    /// Largest number of optimal cycle covers collected.
    pub max_covers: usize,
    pub time_limit: Option<Duration>,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_edges: 20,
            max_covers: 100_000,
            time_limit: None,
        }
    }
}

impl OracleBudget {
    pub fn with_max_edges(max_edges: usize) -> Self {
        Self {
            max_edges,
            ..Self::default()
        }
    }

    fn check_edges(&self, k: usize) -> Result<(), SolveError> {
        if k > self.max_edges || k > 63 {
            return Err(SolveError::BudgetExceeded(format!(
                "{k} candidate links exceed the limit of {}",
                self.max_edges.min(63)
            )));
        }
        Ok(())
    }
}

struct Clock {
    start: Instant,
    limit: Option<Duration>,
}

impl Clock {
    fn new(limit: Option<Duration>) -> Self {
        Self {
            start: Instant::now(),
            limit,
        }
    }

    fn check(&self) -> Result<(), SolveError> {
        match self.limit {
            Some(l) if self.start.elapsed() > l => Err(SolveError::BudgetExceeded(format!(
                "time limit of {} ms reached",
                l.as_millis()
            ))),
            _ => Ok(()),
        }
    }
}

fn mask_links(links: &[Link], mask: u64) -> impl Iterator<Item = Link> + '_ {
    links
        .iter()
        .enumerate()
        .filter(move |(k, _)| mask >> k & 1 == 1)
        .map(|(_, &l)| l)
}

/// True when `a` sorts before `b` as ascending link lists.
fn lex_lt(links: &[Link], a: u64, b: u64) -> bool {
    mask_links(links, a).lt(mask_links(links, b))
}

/// Best subset by (cost, lexicographic link list) among those accepted by
/// `ok`, over every subset of `links`.
fn best_subset<T: Scalar>(
    links: &[Link],
    costs: &[T],
    clock: &Clock,
    mut ok: impl FnMut(u64) -> bool,
) -> Result<Option<(u64, T)>, SolveError> {
    let mut best: Option<(u64, T)> = None;
    for mask in 0u64..(1u64 << links.len()) {
        if mask & 0xffff == 0 {
            clock.check()?;
        }
        let cost: T = (0..links.len())
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| costs[k])
            .sum();
        if let Some((bm, bc)) = best {
            if bc.definitely_lt(cost) {
                continue;
            }
            if !cost.definitely_lt(bc) && !lex_lt(links, mask, bm) {
                continue;
            }
        }
        if ok(mask) {
            best = Some((mask, cost));
        }
    }
    Ok(best)
}

/// Minimum-cost feedback set passing both no-SFM conditions, by exhaustive
/// enumeration. `Ok(None)` means no subset works.
pub fn brute_force_problem1<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
    budget: &OracleBudget,
) -> Result<Option<(FeedbackSet, T)>, SolveError> {
    let links: Vec<Link> = costs.links().collect();
    budget.check_edges(links.len())?;
    let weights: Vec<T> = costs.iter().map(|(_, c)| c).collect();
    let checker = SfmChecker::new(sys);
    let clock = Clock::new(budget.time_limit);
    let mut buf = Vec::with_capacity(links.len());
    let best = best_subset(&links, &weights, &clock, |mask| {
        buf.clear();
        buf.extend(mask_links(&links, mask));
        checker.passes(&buf)
    })?;
    Ok(best.map(|(mask, cost)| (mask_links(&links, mask).collect(), cost)))
}

/// Oracle wrapped as a certified report.
pub fn oracle_solve<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
    budget: &OracleBudget,
) -> Result<SolveReport<T>, SolveError> {
    let start = Instant::now();
    let best = brute_force_problem1(sys, costs, budget)?;
    let stats = SolveStats {
        cycles: 0,
        iterations: 1usize << costs.len(),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(match best {
        Some((fs, _)) => SolveReport::feasible("oracle", sys, costs, fs, stats)?,
        None => SolveReport::infeasible(
            "oracle",
            "no feedback set removes all structurally fixed modes",
            stats,
        ),
    })
}

struct CoverMasks {
    links: Vec<Link>,
    cycle_edges: Vec<u64>,
    cycle_nodes: Vec<u128>,
    full: u128,
}

impl CoverMasks {
    fn new<T: Scalar>(cs: &CycleSet<T>, budget: &OracleBudget) -> Result<Self, SolveError> {
        if cs.node_count > 128 {
            return Err(SolveError::BudgetExceeded(format!(
                "{} SCC nodes exceed the oracle limit of 128",
                cs.node_count
            )));
        }
        let links = cs.edges();
        budget.check_edges(links.len())?;
        let at: BTreeMap<Link, usize> = links.iter().enumerate().map(|(k, &l)| (l, k)).collect();
        let cycle_edges = cs
            .cycles
            .iter()
            .map(|c| c.edges.iter().fold(0u64, |m, e| m | 1 << at[e]))
            .collect();
        let cycle_nodes = cs
            .cycles
            .iter()
            .map(|c| c.nodes.iter().fold(0u128, |m, &v| m | 1 << v))
            .collect();
        let full = if cs.node_count == 128 {
            u128::MAX
        } else {
            (1u128 << cs.node_count) - 1
        };
        Ok(Self {
            links,
            cycle_edges,
            cycle_nodes,
            full,
        })
    }

    fn covered(&self, mask: u64) -> u128 {
        self.cycle_edges
            .iter()
            .zip(&self.cycle_nodes)
            .filter(|(e, _)| *e & !mask == 0)
            .fold(0, |acc, (_, n)| acc | n)
    }
}

/// Minimum-cost edge set under which every SCC node lies on a cycle.
/// `Ok(None)` when some node lies on no cycle at all.
pub fn brute_force_problem2<T: Scalar>(
    cs: &CycleSet<T>,
    budget: &OracleBudget,
) -> Result<Option<(BTreeSet<Link>, T)>, SolveError> {
    if !cs.uncoverable().is_empty() {
        return Ok(None);
    }
    let cm = CoverMasks::new(cs, budget)?;
    let weights: Vec<T> = cm.links.iter().map(|l| cs.costs[l]).collect();
    let clock = Clock::new(budget.time_limit);
    let best = best_subset(&cm.links, &weights, &clock, |mask| {
        cm.covered(mask) == cm.full
    })?;
    Ok(best.map(|(mask, cost)| (mask_links(&cm.links, mask).collect(), cost)))
}

fn one_based<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|k| k + 1))
}

/// Multiplicities of one cycle cover.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverMultiplicity {
    /// Cycle indices (zero-based in memory, one-based in JSON).
    #[serde(serialize_with = "one_based")]
    pub cycles: Vec<usize>,
    pub k1: usize,
    pub k2: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplicityReport<T> {
    pub optimum: T,
    pub k1_tilde: usize,
    pub k2_tilde: usize,
    /// Index into `covers` of a cover attaining `k1_tilde`.
    pub c1_opt: usize,
    pub c2_opt: usize,
    /// All inclusion-minimal optimal covers, sorted.
    pub covers: Vec<CoverMultiplicity>,
}

/// `(k1, k2)` of a cover: `k1` is the largest number of cover cycles sharing
/// one edge; `k2` is the smallest, over cycles `j` of the cover, of the
/// largest multiplicity among edges outside `E_j` (at least 1).
pub fn cover_multiplicity<T: Scalar>(cs: &CycleSet<T>, cover: &[usize]) -> (usize, usize) {
    let mut m: BTreeMap<Link, usize> = BTreeMap::new();
    for &k in cover {
        for &e in &cs.cycles[k].edges {
            *m.entry(e).or_default() += 1;
        }
    }
    let k1 = m.values().copied().max().unwrap_or(0);
    let k2 = cover
        .iter()
        .map(|&j| {
            m.iter()
                .filter(|(e, _)| !cs.cycles[j].edges.contains(e))
                .map(|(_, &c)| c)
                .max()
                .unwrap_or(0)
        })
        .min()
        .unwrap_or(0)
        .max(1);
    (k1, k2)
}

/// Enumerates every inclusion-minimal optimal cycle cover and the minimum
/// multiplicities over them.
pub fn multiplicities<T: Scalar>(
    cs: &CycleSet<T>,
    budget: &OracleBudget,
) -> Result<MultiplicityReport<T>, SolveError> {
    let missing = cs.uncoverable();
    if !missing.is_empty() {
        return Err(SolveError::Uncoverable(missing));
    }
    let (_, optimum) = brute_force_problem2(cs, budget)?.expect("coverable");
    let cm = CoverMasks::new(cs, budget)?;
    let weights: Vec<T> = cm.links.iter().map(|l| cs.costs[l]).collect();
    let clock = Clock::new(budget.time_limit);
    let mut covers: BTreeSet<Vec<usize>> = BTreeSet::new();
    for mask in 0u64..(1u64 << cm.links.len()) {
        if mask & 0xffff == 0 {
            clock.check()?;
        }
        let cost: T = (0..cm.links.len())
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| weights[k])
            .sum();
        if !cost.approx_eq(optimum) || cm.covered(mask) != cm.full {
            continue;
        }
        let usable: Vec<usize> = (0..cs.cycles.len())
            .filter(|&k| cm.cycle_edges[k] & !mask == 0)
            .collect();
        let mut chosen = Vec::new();
        minimal_covers(&cm, &usable, 0, &mut chosen, &mut covers, budget.max_covers)?;
    }
    let covers: Vec<CoverMultiplicity> = covers
        .into_iter()
        .map(|cycles| {
            let (k1, k2) = cover_multiplicity(cs, &cycles);
            CoverMultiplicity { cycles, k1, k2 }
        })
        .collect();
    let argmin = |f: fn(&CoverMultiplicity) -> usize| {
        (0..covers.len())
            .min_by_key(|&i| f(&covers[i]))
            .expect("nonempty")
    };
    let c1_opt = argmin(|c| c.k1);
    let c2_opt = argmin(|c| c.k2);
    Ok(MultiplicityReport {
        optimum,
        k1_tilde: covers[c1_opt].k1,
        k2_tilde: covers[c2_opt].k2,
        c1_opt,
        c2_opt,
        covers,
    })
}

/// Branches on the lowest uncovered node; keeps only inclusion-minimal
/// results.
fn minimal_covers(
    cm: &CoverMasks,
    usable: &[usize],
    covered: u128,
    chosen: &mut Vec<usize>,
    out: &mut BTreeSet<Vec<usize>>,
    cap: usize,
) -> Result<(), SolveError> {
    if covered == cm.full {
        let minimal = (0..chosen.len()).all(|skip| {
            let rest = chosen
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .fold(0u128, |acc, (_, &k)| acc | cm.cycle_nodes[k]);
            rest != cm.full
        });
        if minimal {
            let mut key = chosen.clone();
            key.sort_unstable();
            out.insert(key);
            if out.len() > cap {
                return Err(SolveError::BudgetExceeded(format!(
                    "more than {cap} optimal covers"
                )));
            }
        }
        return Ok(());
    }
    let v = (!covered & cm.full).trailing_zeros();
    for &k in usable {
        if cm.cycle_nodes[k] >> v & 1 == 1 && !chosen.contains(&k) {
            chosen.push(k);
            minimal_covers(cm, usable, covered | cm.cycle_nodes[k], chosen, out, cap)?;
            chosen.pop();
        }
    }
    Ok(())
}

/// Exhaustive minimum-weight set cover; ties to the lexicographically
/// smallest index list. `None` when no cover exists.
pub fn brute_force_set_cover<T: Scalar>(
    inst: &SetCoverInstance<T>,
    budget: &OracleBudget,
) -> Result<Option<(Vec<usize>, T)>, SolveError> {
    let k = inst.sets.len();
    budget.check_edges(k)?;
    let clock = Clock::new(budget.time_limit);
    let mut best: Option<(Vec<usize>, T)> = None;
    for mask in 0u64..(1u64 << k) {
        if mask & 0xffff == 0 {
            clock.check()?;
        }
        let chosen: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let w = inst.weight(&chosen);
        let better = match &best {
            None => true,
            Some((bc, bw)) => w.definitely_lt(*bw) || (!bw.definitely_lt(w) && chosen < *bc),
        };
        if better && inst.covers(&chosen) {
            best = Some((chosen, w));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::Cycle;

    #[test]
    fn single_scc_problem1() {
        let sys = StructuredSystem::new(1, [(0, 0)], vec![0], vec![0]).unwrap();
        let p = CostMatrix::from_triples([(0, 0, 4.0)]).unwrap();
        let (fs, c) = brute_force_problem1(&sys, &p, &OracleBudget::default())
            .unwrap()
            .unwrap();
        assert_eq!(c, 4.0);
        assert_eq!(fs.len(), 1);
        let none =
            brute_force_problem1(&sys, &CostMatrix::<f64>::empty(), &OracleBudget::default());
        assert_eq!(none.unwrap(), None);
    }

    #[test]
    fn budget_is_enforced() {
        let sys = StructuredSystem::new(1, [(0, 0)], vec![0; 3], vec![0; 3]).unwrap();
        let p = CostMatrix::from_triples((0..3).flat_map(|i| (0..3).map(move |j| (i, j, 1.0))))
            .unwrap();
        let err = brute_force_problem1(&sys, &p, &OracleBudget::with_max_edges(8)).unwrap_err();
        assert!(matches!(err, SolveError::BudgetExceeded(_)));
    }

    #[test]
    fn single_cycle_multiplicities() {
        let l = Link::new(0, 0);
        let cs = CycleSet::new(1, vec![Cycle::new([0], [l])], BTreeMap::from([(l, 2.0)]));
        let (edges, c) = brute_force_problem2(&cs, &OracleBudget::default())
            .unwrap()
            .unwrap();
        assert_eq!(edges, BTreeSet::from([l]));
        assert_eq!(c, 2.0);
        let r = multiplicities(&cs, &OracleBudget::default()).unwrap();
        assert_eq!((r.k1_tilde, r.k2_tilde), (1, 1));
    }

    #[test]
    fn uncoverable_problem2() {
        let l = Link::new(0, 0);
        let cs = CycleSet::new(2, vec![Cycle::new([0], [l])], BTreeMap::from([(l, 2.0)]));
        assert_eq!(
            brute_force_problem2(&cs, &OracleBudget::default()).unwrap(),
            None
        );
    }
}
