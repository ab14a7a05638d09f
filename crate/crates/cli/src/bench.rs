//! Benchmark suites: random instances solved by each requested algorithm
//! and audited against the oracle.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sfsel_core::approx::{self, prepared_cycles, PotentialOptions};
use sfsel_core::backedge::{backedge_solve, BackedgeOptions};
use sfsel_core::hierarchy::hierarchical_solve;
use sfsel_core::instances::{random_instance, InstanceKind, RandomParams};
use sfsel_core::oracle::{brute_force_problem1, multiplicities, oracle_solve, OracleBudget};
use sfsel_core::{CostMatrix, SolveError, SolveReport, StructuredSystem};

use crate::commands::ratio;
use crate::failure::Failure;

pub const SMOKE_SUITE: &str = include_str!("../suites/smoke.json");

const TOL: f64 = 1e-9;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub name: Option<String>,
    /// Largest link count the oracle enumerates.
    #[serde(default = "default_budget")]
    pub budget: usize,
    pub entries: Vec<Entry>,
}

fn default_budget() -> usize {
    16
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub kind: String,
    pub nodes: Vec<usize>,
    pub seeds: Seeds,
    pub algos: Vec<String>,
    #[serde(default)]
    pub params: Overrides,
}

#[derive(Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { from: u64, count: u64 },
}

impl Seeds {
    fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { from, count } => (*from..from + count).collect(),
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    edge_density: Option<f64>,
    io_density: Option<f64>,
    link_density: Option<f64>,
    max_links: Option<usize>,
    cost_min: Option<u32>,
    cost_max: Option<u32>,
    fractional: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BenchAlgo {
    Potential,
    Backedge,
    Hierarchical,
    Oracle,
}

impl BenchAlgo {
    fn parse(s: &str) -> Result<Self, Failure> {
        match s {
            "potential" => Ok(Self::Potential),
            "backedge" => Ok(Self::Backedge),
            "hierarchical" => Ok(Self::Hierarchical),
            "oracle" => Ok(Self::Oracle),
            other => Err(Failure::Usage(format!("unknown bench algo {other:?}"))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Potential => "potential",
            Self::Backedge => "backedge",
            Self::Hierarchical => "hierarchical",
            Self::Oracle => "oracle",
        }
    }
}

struct Job {
    kind: InstanceKind,
    nodes: usize,
    seed: u64,
    params: RandomParams,
    algos: Vec<BenchAlgo>,
}

impl Job {
    fn name(&self) -> String {
        format!("{}-n{}-s{}", self.kind, self.nodes, self.seed)
    }
}

/// One CSV line.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub index: usize,
    pub instance: String,
    pub kind: String,
    pub nodes: usize,
    pub seed: u64,
    pub states: usize,
    pub links: usize,
    pub algo: String,
    pub status: String,
    pub cost: Option<f64>,
    pub oracle_cost: Option<f64>,
    pub ratio: Option<f64>,
    pub k2_tilde: Option<usize>,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
    pub cycles: Option<usize>,
    pub time_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub instances: usize,
    pub rows: usize,
    pub ok: usize,
    pub infeasible: usize,
    pub failed: usize,
    pub oracle_rows: usize,
    pub bound_violations: usize,
    pub max_ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub suite: String,
    pub budget: usize,
    pub summary: Summary,
    pub rows: Vec<Row>,
}

pub fn parse_suite(text: &str) -> Result<Suite, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Usage(format!("suite: {e}")))
}

pub fn load_suite(path: Option<&Path>) -> Result<Suite, Failure> {
    match path {
        None => parse_suite(SMOKE_SUITE),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
            parse_suite(&text)
        }
    }
}

fn expand(suite: &Suite) -> Result<Vec<Job>, Failure> {
    let mut jobs = Vec::new();
    for e in &suite.entries {
        let kind: InstanceKind = e.kind.parse()?;
        let algos = e
            .algos
            .iter()
            .map(|a| BenchAlgo::parse(a))
            .collect::<Result<Vec<_>, _>>()?;
        let d = RandomParams::default();
        let o = &e.params;
        for &nodes in &e.nodes {
            for seed in e.seeds.expand() {
                jobs.push(Job {
                    kind,
                    nodes,
                    seed,
                    params: RandomParams {
                        nodes,
                        edge_density: o.edge_density.unwrap_or(d.edge_density),
                        io_density: o.io_density.unwrap_or(d.io_density),
                        link_density: o.link_density.unwrap_or(d.link_density),
                        max_links: o.max_links.or(d.max_links),
                        cost_min: o.cost_min.unwrap_or(d.cost_min),
                        cost_max: o.cost_max.unwrap_or(d.cost_max),
                        fractional: o.fractional.unwrap_or(d.fractional),
                    },
                    algos: algos.clone(),
                });
            }
        }
    }
    Ok(jobs)
}

struct Ctx {
    budget: OracleBudget,
    cycle_cap: usize,
    timing: bool,
}

fn run_algo(
    algo: BenchAlgo,
    sys: &StructuredSystem,
    costs: &CostMatrix<f64>,
    ctx: &Ctx,
) -> Result<SolveReport<f64>, SolveError> {
    match algo {
        BenchAlgo::Potential => {
            let opts = PotentialOptions {
                cycle_cap: ctx.cycle_cap,
                ..PotentialOptions::default()
            };
            approx::solve(sys, costs, &opts)
        }
        BenchAlgo::Backedge => backedge_solve(sys, costs, &BackedgeOptions::default()),
        BenchAlgo::Hierarchical => hierarchical_solve(sys, costs, false),
        BenchAlgo::Oracle => oracle_solve(sys, costs, &ctx.budget),
    }
}

/// Ratio guarantee of each algorithm: `k2~ (1 + ln |N|)` for the potential
/// solver, `1 + ln n` for the set-cover greedy, 1 for the exact solvers.
fn bound(
    algo: BenchAlgo,
    sys: &StructuredSystem,
    costs: &CostMatrix<f64>,
    ctx: &Ctx,
) -> (Option<usize>, Option<f64>) {
    match algo {
        BenchAlgo::Hierarchical | BenchAlgo::Oracle => (None, Some(1.0)),
        BenchAlgo::Backedge => (None, Some(1.0 + (sys.n() as f64).ln())),
        BenchAlgo::Potential => {
            let opts = PotentialOptions {
                cycle_cap: ctx.cycle_cap,
                ..PotentialOptions::default()
            };
            let Ok(cs) = prepared_cycles(sys, costs, &opts) else {
                return (None, None);
            };
            match multiplicities(&cs, &ctx.budget) {
                Ok(m) => {
                    let b = m.k2_tilde as f64 * (1.0 + (cs.node_count as f64).ln());
                    (Some(m.k2_tilde), Some(b))
                }
                Err(_) => (None, None),
            }
        }
    }
}

fn run_job(job: &Job, ctx: &Ctx) -> Vec<Row> {
    let base = |algo: BenchAlgo| Row {
        index: 0,
        instance: job.name(),
        kind: job.kind.to_string(),
        nodes: job.nodes,
        seed: job.seed,
        states: 0,
        links: 0,
        algo: algo.name().to_string(),
        status: "failed".into(),
        cost: None,
        oracle_cost: None,
        ratio: None,
        k2_tilde: None,
        bound: None,
        within_bound: None,
        cycles: None,
        time_ms: None,
        error: None,
    };
    let (sys, costs) = match random_instance(job.kind, &job.params, job.seed) {
        Ok(x) => x,
        Err(e) => {
            return job
                .algos
                .iter()
                .map(|&a| Row {
                    error: Some(e.to_string()),
                    ..base(a)
                })
                .collect()
        }
    };
    let (oracle_cost, oracle_error) = match brute_force_problem1(&sys, &costs, &ctx.budget) {
        Ok(best) => (best.map(|(_, c)| c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    job.algos
        .iter()
        .map(|&algo| {
            let mut row = Row {
                states: sys.n(),
                links: costs.len(),
                oracle_cost,
                ..base(algo)
            };
            let start = Instant::now();
            let result = run_algo(algo, &sys, &costs, ctx);
            if ctx.timing {
                row.time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            match result {
                Ok(report) => {
                    row.cycles = Some(report.stats.cycles).filter(|&c| c > 0);
                    row.cost = report.cost();
                    row.status = if row.cost.is_some() {
                        "ok"
                    } else {
                        "infeasible"
                    }
                    .into();
                    if row.cost.is_none() && oracle_cost.is_some() {
                        row.error = Some("oracle finds an admissible set".into());
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            if let (Some(c), Some(o)) = (row.cost, oracle_cost) {
                row.ratio = Some(ratio(c, o));
                let (k2, b) = bound(algo, &sys, &costs, ctx);
                row.k2_tilde = k2;
                row.bound = b;
                row.within_bound = b.map(|b| ratio(c, o) <= b + TOL);
            }
            if row.error.is_none() && row.oracle_cost.is_none() {
                row.error = oracle_error.clone();
            }
            row
        })
        .collect()
}

pub struct BenchOptions {
    pub jobs: Option<usize>,
    pub timing: bool,
    pub cycle_cap: usize,
}

pub fn run_suite(suite: &Suite, opts: &BenchOptions) -> Result<BenchReport, Failure> {
    let jobs = expand(suite)?;
    let ctx = Ctx {
        budget: OracleBudget::with_max_edges(suite.budget),
        cycle_cap: opts.cycle_cap,
        timing: opts.timing,
    };
    let work = || -> Vec<Vec<Row>> { jobs.par_iter().map(|j| run_job(j, &ctx)).collect() };
    let per_job = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut rows: Vec<Row> = per_job.into_iter().flatten().collect();
    for (k, r) in rows.iter_mut().enumerate() {
        r.index = k + 1;
    }
    let count = |s: &str| rows.iter().filter(|r| r.status == s).count();
    let summary = Summary {
        instances: jobs.len(),
        rows: rows.len(),
        ok: count("ok"),
        infeasible: count("infeasible"),
        failed: count("failed"),
        oracle_rows: rows.iter().filter(|r| r.ratio.is_some()).count(),
        bound_violations: rows
            .iter()
            .filter(|r| r.within_bound == Some(false))
            .count(),
        max_ratio: rows.iter().filter_map(|r| r.ratio).reduce(f64::max),
    };
    Ok(BenchReport {
        suite: suite.name.clone().unwrap_or_else(|| "unnamed".into()),
        budget: suite.budget,
        summary,
        rows,
    })
}

pub fn to_csv(rows: &[Row]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("row serializes");
    }
    w.into_inner().expect("in-memory writer")
}

pub fn summary_line(r: &BenchReport, out: &mut dyn Write) {
    let s = &r.summary;
    let max = s.max_ratio.map_or("n/a".to_string(), |m| format!("{m:.4}"));
    let _ = writeln!(
        out,
        "{}: {} instances, {} rows ({} ok, {} infeasible, {} failed); {} oracle rows, {} bound violations, max ratio {max}",
        r.suite, s.instances, s.rows, s.ok, s.infeasible, s.failed, s.oracle_rows, s.bound_violations
    );
}
