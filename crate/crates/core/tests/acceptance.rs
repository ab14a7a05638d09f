//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test -p sfsel-core --test acceptance -- --nocapture --test-threads=1`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::Rng;
use sfsel_core::approx::{potential_solve, prepared_cycles, solve, PotentialOptions};
use sfsel_core::backedge::{backedge_solve, reduce_to_set_cover, BackedgeOptions};
use sfsel_core::graphs::{enumerate_cycles, max_matching, scc_condense};
use sfsel_core::hierarchy::{build_hierarchy, hierarchical_dp, hierarchical_solve};
use sfsel_core::instances::{
    extract_cover, from_set_cover, random_instance, read_instance, write_instance, InstanceKind,
    RandomParams,
};
use sfsel_core::oracle::{
    brute_force_problem1, brute_force_problem2, brute_force_set_cover, cover_multiplicity,
    multiplicities, oracle_solve, OracleBudget,
};
use sfsel_core::reduction::{cycle_set, merge_cycles, Cycle, CycleSet};
use sfsel_core::{has_no_sfm, CostMatrix, Link, StructuredSystem};

use common::*;

fn fixture(name: &str) -> (StructuredSystem, CostMatrix<f64>) {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    read_instance(&std::fs::read(path).unwrap()).unwrap()
}

fn links(s: &str) -> BTreeSet<Link> {
    s.split(',').map(|t| t.parse().unwrap()).collect()
}

const TOL: f64 = 1e-9;

#[test]
fn criterion_1_hierarchical_worked_example() {
    let start = Instant::now();
    let (sys, p) = fixture("hierarchy6.sfsi.json");
    let report = hierarchical_solve(&sys, &p, true).unwrap();
    let h = build_hierarchy(&sys, &p).unwrap();
    let table = hierarchical_dp(&h).table;
    let secs = start.elapsed().as_secs_f64();
    let want = [
        ("N^3_1", 1.0),
        ("N^3_2", 1.0),
        ("N^3_3", 1.0),
        ("N^2_1", 3.0),
        ("N^2_2", 2.0),
    ];
    let mids_ok = want
        .iter()
        .all(|&(label, c)| table.cell(label).and_then(|x| x.cost) == Some(c));
    let edges_ok = report.links().map(|fs| fs.links().clone()) == Some(links("u1:y4,u5:y5,u2:y6"));
    let ok = report.cost() == Some(5.0) && edges_ok && mids_ok && secs < 1.0;
    let mids: Vec<String> = want
        .iter()
        .map(|&(label, _)| format!("{label}={:?}", table.cell(label).and_then(|x| x.cost)))
        .collect();
    verdict(
        "1",
        "hierarchical worked example",
        ok,
        &format!(
            "cost {:?}, links {}, {} ({secs:.3}s)",
            report.cost(),
            report.links().map(|f| f.to_string()).unwrap_or_default(),
            mids.join(" ")
        ),
    );
}

#[test]
fn criterion_2_backedge_worked_example() {
    let start = Instant::now();
    let (sys, p) = fixture("backedge5.sfsi.json");
    let inst = reduce_to_set_cover(&sys, &p).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let listed: [&[usize]; 12] = [
        &[1],
        &[1, 2, 3, 4],
        &[1, 3],
        &[1, 4],
        &[1, 4, 5],
        &[2],
        &[2, 3],
        &[3],
        &[2, 4],
        &[4],
        &[4, 5],
        &[5],
    ];
    let weights = [
        1.0, 10.0, 10.0, 2.0, 10.0, 3.0, 10.0, 4.0, 10.0, 2.0, 8.0, 5.0,
    ];
    // order-normalized: compare as multisets of (set, weight)
    let mut want: Vec<(Vec<usize>, u64)> = listed
        .iter()
        .zip(weights)
        .map(|(s, w)| (s.iter().map(|x| x - 1).collect(), w as u64))
        .collect();
    let mut got: Vec<(Vec<usize>, u64)> = inst
        .sets
        .iter()
        .zip(&inst.weights)
        .map(|(s, &w)| (s.iter().copied().collect(), w as u64))
        .collect();
    want.sort();
    got.sort();
    let ok = got == want && secs < 1.0;
    verdict(
        "2",
        "back-edge set-cover reduction",
        ok,
        &format!(
            "{} sets, weights {:?} ({secs:.3}s)",
            inst.sets.len(),
            inst.weights
        ),
    );
}

fn nine_cycle_set() -> CycleSet<f64> {
    let c = |nodes: &[usize], edges: &str| Cycle::new(nodes.iter().map(|n| n - 1), links(edges));
    let cycles = vec![
        c(&[1, 2, 3], "u2:y3,u1:y2"),
        c(&[1, 2, 4], "u2:y4,u1:y2"),
        c(&[1, 2, 5], "u5:y1,u1:y2"),
        c(&[5, 6, 8], "u6:y5,u8:y6"),
        c(&[5, 6, 7], "u6:y5,u5:y7"),
        c(&[3], "u3:y3"),
        c(&[6], "u6:y6"),
        c(&[7], "u7:y7"),
        c(&[8], "u8:y8"),
    ];
    let (_, p) = fixture("cycles8.sfsi.json");
    let costs: BTreeMap<Link, f64> = cycles
        .iter()
        .flat_map(|c| c.edges.iter())
        .map(|&e| (e, p.get(e).unwrap()))
        .collect();
    CycleSet::new(8, cycles, costs)
}

#[test]
fn criterion_3_cycle_multiplicities() {
    let start = Instant::now();
    let cs = nine_cycle_set();
    let listed_covers: [&[usize]; 4] = [
        &[1, 2, 3, 7, 8, 9],
        &[2, 3, 4, 5, 6],
        &[1, 2, 3, 4, 5],
        &[2, 3, 6, 7, 8, 9],
    ];
    let listed_k = [(3, 1), (2, 2), (3, 2), (2, 1)];
    let per_cover: Vec<(usize, usize)> = listed_covers
        .iter()
        .map(|c| {
            let zero: Vec<usize> = c.iter().map(|k| k - 1).collect();
            cover_multiplicity(&cs, &zero)
        })
        .collect();
    let budget = OracleBudget::default();
    let (_, optimum) = brute_force_problem2(&cs, &budget).unwrap().unwrap();
    let rep = multiplicities(&cs, &budget).unwrap();
    let found: BTreeSet<Vec<usize>> = rep.covers.iter().map(|c| c.cycles.clone()).collect();
    let listed = listed_covers
        .iter()
        .filter(|c| found.contains(&c.iter().map(|k| k - 1).collect::<Vec<_>>()))
        .count();
    let secs = start.elapsed().as_secs_f64();
    let checks = [
        per_cover == listed_k,
        (optimum - 7.0).abs() < TOL,
        rep.k1_tilde == 2,
        rep.k2_tilde == 1,
        listed == 4,
        secs < 5.0,
    ];
    let optimal: Vec<String> = rep
        .covers
        .iter()
        .map(|c| {
            let ids: Vec<String> = c.cycles.iter().map(|k| format!("C{}", k + 1)).collect();
            format!("{{{}}}", ids.join(","))
        })
        .collect();
    verdict(
        "3",
        "cycle multiplicities",
        checks.iter().all(|&b| b),
        &format!(
            "per-cover (k1,k2) {per_cover:?} [expected {listed_k:?}]; optimum {optimum} [expected 7]; \
             k1~ {} k2~ {} [expected 2, 1]; listed covers among optimal {listed}/4; optimal covers {} ({secs:.3}s)",
            rep.k1_tilde,
            rep.k2_tilde,
            optimal.join(" ")
        ),
    );
}

fn selfdamped(seed: u64) -> (StructuredSystem, CostMatrix<f64>) {
    let mut r = rng(seed ^ 0x5eed);
    let params = RandomParams {
        nodes: r.gen_range(3..=8),
        edge_density: 0.2,
        io_density: 0.9,
        link_density: 0.5,
        max_links: Some(12),
        cost_min: 1,
        cost_max: 9,
        fractional: false,
    };
    random_instance(InstanceKind::SelfDamped, &params, seed).unwrap()
}

#[test]
fn criterion_4_potential_bound_audit() {
    let start = Instant::now();
    let budget = OracleBudget::default();
    let (mut feasible, mut within, mut above_opt, mut worst) = (0, 0, 0, 0.0f64);
    let total = 400;
    for seed in 0..total {
        let (sys, p) = selfdamped(seed);
        let merged = prepared_cycles(&sys, &p, &PotentialOptions::default()).unwrap();
        let raw = prepared_cycles(
            &sys,
            &p,
            &PotentialOptions {
                merge: false,
                ..PotentialOptions::default()
            },
        )
        .unwrap();
        assert!(raw.node_count <= 8 && raw.costs.len() <= 12);
        let Some((_, opt)) = brute_force_problem2(&raw, &budget).unwrap() else {
            assert!(potential_solve(&merged).is_err());
            continue;
        };
        feasible += 1;
        let run = potential_solve(&merged).unwrap();
        let k2 = multiplicities(&merged, &budget).unwrap().k2_tilde as f64;
        let bound = k2 * (1.0 + (merged.node_count as f64).ln()) * opt;
        if run.cost <= bound + TOL {
            within += 1;
        }
        if run.cost + TOL >= opt {
            above_opt += 1;
        }
        if opt > 0.0 {
            worst = worst.max(run.cost / opt);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = feasible > 0 && within == feasible && above_opt == feasible && secs < 300.0;
    verdict(
        "4",
        "approximation bound audit",
        ok,
        &format!(
            "{total} instances, {feasible} feasible, {within} within k2~(1+ln|N|)*OPT, \
             {above_opt} at or above OPT, worst ratio {worst:.3} ({secs:.1}s)"
        ),
    );
}

#[test]
fn criterion_5_hierarchical_exactness_audit() {
    let start = Instant::now();
    let budget = OracleBudget::default();
    let total = 220;
    let (mut agree, mut feasible) = (0, 0);
    let mut bad = Vec::new();
    for seed in 0..total {
        let mut r = rng(seed ^ 0x41e7);
        let params = RandomParams {
            nodes: r.gen_range(1..=6),
            io_density: 0.7,
            link_density: 0.6,
            max_links: Some(12),
            ..RandomParams::default()
        };
        let (sys, p) = random_instance(InstanceKind::Hierarchy, &params, seed).unwrap();
        let dp = hierarchical_solve(&sys, &p, false).unwrap().cost();
        let oracle = brute_force_problem1(&sys, &p, &budget)
            .unwrap()
            .map(|(_, c)| c);
        if oracle.is_some() {
            feasible += 1;
        }
        if dp == oracle {
            agree += 1;
        } else {
            bad.push(seed);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "5",
        "hierarchical exactness audit",
        agree == total && secs < 300.0,
        &format!("{agree}/{total} agree with the oracle ({feasible} feasible), mismatches {bad:?} ({secs:.1}s)"),
    );
}

#[test]
fn criterion_6_set_cover_correspondence() {
    let start = Instant::now();
    let budget = OracleBudget::default();
    let mut r = rng(6);
    let specs = 120;
    let mut forward_ok = 0;
    for _ in 0..specs {
        let spec = random_set_cover(&mut r, 5, 4);
        let (sys, p) = from_set_cover(&spec).unwrap();
        let (fs, c) = brute_force_problem1(&sys, &p, &budget).unwrap().unwrap();
        let (_, w) = brute_force_set_cover(&as_cover_instance(&spec), &budget)
            .unwrap()
            .unwrap();
        let (chosen, cw) = extract_cover(&fs, &spec);
        if (c - w).abs() < TOL && spec.covers(&chosen) && (cw - w).abs() < TOL {
            forward_ok += 1;
        }
    }

    let instances = 120;
    let (mut subsets, mut cover_not_free, mut free_not_cover) = (0usize, 0usize, 0usize);
    let mut witness = None;
    for seed in 0..instances {
        let mut rr = rng(seed ^ 0xbacc);
        let params = RandomParams {
            nodes: rr.gen_range(2..=6),
            edge_density: 0.3,
            io_density: 0.7,
            link_density: 0.6,
            max_links: Some(10),
            ..RandomParams::default()
        };
        let (sys, p) = random_instance(InstanceKind::Backedge, &params, seed).unwrap();
        let inst = reduce_to_set_cover(&sys, &p).unwrap();
        let k = inst.sets.len();
        for mask in 0u32..(1 << k) {
            let chosen: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            let covers = inst.covers(&chosen);
            let fs = inst.feedback_set(&chosen);
            let free = has_no_sfm(&sys, &fs).pass;
            subsets += 1;
            if covers && !free {
                cover_not_free += 1;
            }
            if free && !covers {
                free_not_cover += 1;
                witness.get_or_insert((seed, fs.to_string()));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = forward_ok == specs && cover_not_free == 0 && free_not_cover == 0 && secs < 300.0;
    verdict(
        "6",
        "set-cover correspondence",
        ok,
        &format!(
            "hardness construction {forward_ok}/{specs}; back-edge exhaustion over {instances} instances, \
             {subsets} subsets: cover without no-SFM {cover_not_free}, no-SFM without cover {free_not_cover}, \
             first witness {witness:?} ({secs:.1}s)"
        ),
    );
}

#[test]
fn criterion_7_problem_equivalence() {
    let start = Instant::now();
    let budget = OracleBudget::default();
    let total = 120;
    let (mut agree, mut feasible) = (0, 0);
    let mut bad = Vec::new();
    for seed in 1000..1000 + total {
        let (sys, p) = selfdamped(seed);
        let p1 = brute_force_problem1(&sys, &p, &budget)
            .unwrap()
            .map(|(_, c)| c);
        let (_, cs) = cycle_set(&sys, &p, 100_000).unwrap();
        let p2 = brute_force_problem2(&cs, &budget).unwrap().map(|(_, c)| c);
        if p1.is_some() {
            feasible += 1;
        }
        if p1 == p2 {
            agree += 1;
        } else {
            bad.push(seed);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "7",
        "feedback-set and cycle-cover optima coincide",
        agree == total,
        &format!("{agree}/{total} agree ({feasible} feasible), mismatches {bad:?} ({secs:.1}s)"),
    );
}

#[test]
fn criterion_8_property_suites() {
    let start = Instant::now();
    let cases = 500;
    let mut r = rng(8);
    let (mut scc_ok, mut match_ok, mut cyc_ok, mut merge_ok) = (0, 0, 0, 0);
    for _ in 0..cases {
        let n = r.gen_range(0..=8);
        let density = r.gen_range(0.05..0.5);
        let d = random_digraph(&mut r, n, density);
        if scc_condense(&d).components == brute_scc(&d) {
            scc_ok += 1;
        }
        let (left, right) = (r.gen_range(0..=8), r.gen_range(0..=8));
        let b = random_bipartite(&mut r, left, right, density);
        if max_matching(&b).size == brute_matching(&b) {
            match_ok += 1;
        }
        let cycles = enumerate_cycles(&d, 1_000_000).unwrap();
        let set: BTreeSet<Vec<usize>> = cycles.iter().cloned().collect();
        if set.len() == cycles.len() && set == brute_cycles(&d) {
            cyc_ok += 1;
        }
        let nodes = r.gen_range(1..=8);
        let edges = r.gen_range(1..=6);
        let count = r.gen_range(1..=8);
        let list = random_cycle_list(&mut r, nodes, edges, count);
        let once = merge_cycles(&list);
        if merge_cycles(&once) == once {
            merge_ok += 1;
        }
    }

    let mut deterministic = 0;
    let seeds = 20;
    for seed in 0..seeds {
        let (sys, p) = selfdamped(seed + 500);
        let (s2, p2) = selfdamped(seed + 500);
        let same_instance = write_instance(&sys, &p) == write_instance(&s2, &p2);
        let a = solve(&sys, &p, &PotentialOptions::default()).unwrap();
        let b = solve(&s2, &p2, &PotentialOptions::default()).unwrap();
        let o1 = oracle_solve(&sys, &p, &OracleBudget::default()).unwrap();
        let o2 = oracle_solve(&s2, &p2, &OracleBudget::default()).unwrap();
        let params = RandomParams {
            nodes: 5,
            ..RandomParams::default()
        };
        let (hs, hp) = random_instance(InstanceKind::Hierarchy, &params, seed).unwrap();
        let h1 = hierarchical_solve(&hs, &hp, false).unwrap();
        let h2 = hierarchical_solve(&hs, &hp, false).unwrap();
        let b1 = backedge_solve(&hs, &hp, &BackedgeOptions::default()).unwrap();
        let b2 = backedge_solve(&hs, &hp, &BackedgeOptions::default()).unwrap();
        if same_instance
            && a.verdict == b.verdict
            && o1.verdict == o2.verdict
            && h1.verdict == h2.verdict
            && b1.verdict == b2.verdict
        {
            deterministic += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = scc_ok == cases
        && match_ok == cases
        && cyc_ok == cases
        && merge_ok == cases
        && deterministic == seeds;
    verdict(
        "8",
        "property suites",
        ok,
        &format!(
            "scc {scc_ok}/{cases}, matching {match_ok}/{cases}, cycles {cyc_ok}/{cases}, \
             merge idempotent {merge_ok}/{cases}, deterministic solvers {deterministic}/{seeds} ({secs:.1}s)"
        ),
    );
}
