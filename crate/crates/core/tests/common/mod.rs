#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfsel_core::backedge::SetCoverInstance;
use sfsel_core::graphs::{Bipartite, Digraph, EdgeKind};
use sfsel_core::instances::WeightedSetCoverSpec;
use sfsel_core::reduction::{Cycle, CycleSet};
use sfsel_core::Link;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Prints one verdict line and fails the test on FAIL.
pub fn verdict(id: &str, title: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("{tag} [{id}] {title}: {detail}");
    assert!(ok, "criterion {id} failed: {detail}");
}

pub fn random_digraph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Digraph {
    let mut d = Digraph::with_nodes(n);
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(density) {
                d.add_edge(a, b, EdgeKind::State);
            }
        }
    }
    d
}

pub fn reach(d: &Digraph) -> Vec<Vec<bool>> {
    (0..d.node_count()).map(|v| d.reachable_from(v)).collect()
}

/// Components by mutual reachability, each sorted, ordered by smallest
/// member.
pub fn brute_scc(d: &Digraph) -> Vec<Vec<usize>> {
    let r = reach(d);
    let n = d.node_count();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for v in 0..n {
        if seen[v] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&w| r[v][w] && r[w][v]).collect();
        for &w in &comp {
            seen[w] = true;
        }
        out.push(comp);
    }
    out
}

pub fn random_bipartite(
    rng: &mut ChaCha8Rng,
    left: usize,
    right: usize,
    density: f64,
) -> Bipartite {
    let mut b = Bipartite::new(left, right);
    for l in 0..left {
        for r in 0..right {
            if rng.gen_bool(density) {
                b.add_edge(l, r);
            }
        }
    }
    b
}

/// Maximum matching size by exhaustive search.
pub fn brute_matching(b: &Bipartite) -> usize {
    fn go(b: &Bipartite, l: usize, used: &mut Vec<bool>) -> usize {
        if l == b.left {
            return 0;
        }
        let mut best = go(b, l + 1, used);
        for &r in b.neighbors(l) {
            if !used[r] {
                used[r] = true;
                best = best.max(1 + go(b, l + 1, used));
                used[r] = false;
            }
        }
        best
    }
    go(b, 0, &mut vec![false; b.right])
}

/// Every simple cycle, rotated to start at its smallest node.
pub fn brute_cycles(d: &Digraph) -> BTreeSet<Vec<usize>> {
    fn go(d: &Digraph, s: usize, path: &mut Vec<usize>, out: &mut BTreeSet<Vec<usize>>) {
        let v = *path.last().unwrap();
        for &w in d.successors(v) {
            if w == s {
                out.insert(path.clone());
            } else if w > s && !path.contains(&w) {
                path.push(w);
                go(d, s, path, out);
                path.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    for s in 0..d.node_count() {
        go(d, s, &mut vec![s], &mut out);
    }
    out
}

/// Random spec whose sets cover the universe; integer weights in 1..=5.
pub fn random_set_cover(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_r: usize,
) -> WeightedSetCoverSpec<f64> {
    let n = rng.gen_range(1..=max_n);
    let r = rng.gen_range(1..=max_r);
    let mut sets: Vec<BTreeSet<usize>> = (0..r)
        .map(|_| (0..n).filter(|_| rng.gen_bool(0.4)).collect())
        .collect();
    for e in 0..n {
        if !sets.iter().any(|s| s.contains(&e)) {
            let k = rng.gen_range(0..r);
            sets[k].insert(e);
        }
    }
    let weights = (0..r).map(|_| rng.gen_range(1..=5) as f64).collect();
    WeightedSetCoverSpec {
        universe: n,
        sets,
        weights,
    }
}

pub fn as_cover_instance(spec: &WeightedSetCoverSpec<f64>) -> SetCoverInstance<f64> {
    SetCoverInstance {
        universe: (0..spec.universe).collect(),
        sets: spec.sets.clone(),
        weights: spec.weights.clone(),
        provenance: (0..spec.sets.len()).map(|k| Link::new(k, k)).collect(),
    }
}

/// Random cycle list over `nodes` SCC nodes and `edges` unit-cost links.
pub fn random_cycle_list(
    rng: &mut ChaCha8Rng,
    nodes: usize,
    edges: usize,
    count: usize,
) -> Vec<Cycle> {
    (0..count)
        .map(|_| {
            let mut ns: BTreeSet<usize> = (0..nodes).filter(|_| rng.gen_bool(0.3)).collect();
            ns.insert(rng.gen_range(0..nodes));
            let mut es: BTreeSet<Link> = (0..edges)
                .filter(|_| rng.gen_bool(0.3))
                .map(|k| Link::new(k, k))
                .collect();
            let k = rng.gen_range(0..edges);
            es.insert(Link::new(k, k));
            Cycle {
                nodes: ns,
                edges: es,
            }
        })
        .collect()
}

pub fn unit_costs(cycles: &[Cycle]) -> BTreeMap<Link, f64> {
    cycles
        .iter()
        .flat_map(|c| c.edges.iter().map(|&e| (e, 1.0)))
        .collect()
}

pub fn cycle_set_of(nodes: usize, cycles: Vec<Cycle>) -> CycleSet<f64> {
    let costs = unit_costs(&cycles);
    CycleSet::new(nodes, cycles, costs)
}
