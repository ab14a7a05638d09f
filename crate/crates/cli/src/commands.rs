use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sfsel_core::approx::{self, prepared_cycles, PotentialOptions};
use sfsel_core::backedge::{backedge_solve, check_backedge, reduce_to_set_cover, BackedgeOptions};
use sfsel_core::graphs::{closed_loop_digraph, DEFAULT_CYCLE_CAP};
use sfsel_core::hierarchy::{build_hierarchy, hierarchical_dp, hierarchical_solve};
use sfsel_core::instances::{
    from_set_cover, random_instance, read_instance, write_instance, InstanceKind, RandomParams,
    WeightedSetCoverSpec,
};
use sfsel_core::oracle::{brute_force_problem1, oracle_solve, OracleBudget};
use sfsel_core::reduction::condense;
use sfsel_core::{
    cost_of, ensure_valid, has_no_sfm, validate, Assumption, CostMatrix, FeedbackSet, Link,
    Rational, Scalar, SolveError, SolveReport, StructuredSystem, Verdict,
};

use crate::args::{Algo, CheckArgs, Format, GenArgs, ReduceArgs, SolveArgs, Target};
use crate::failure::Failure;

/// A rendered report and the exit code it carries.
pub struct Output {
    pub body: Vec<u8>,
    pub code: i32,
}

impl Output {
    fn ok(body: String) -> Self {
        Self {
            body: body.into_bytes(),
            code: 0,
        }
    }
}

pub fn load<T: Scalar>(
    path: &Path,
    err: &mut dyn Write,
) -> Result<(StructuredSystem, CostMatrix<T>), Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let (sys, costs) = read_instance::<T>(&bytes)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    for v in validate(&sys, &costs) {
        if !v.is_error() {
            let _ = writeln!(err, "{v}");
        }
    }
    ensure_valid(&sys, &costs)?;
    Ok((sys, costs))
}

/// Cycle enumeration cap, overridable through `SFSEL_CYCLE_CAP`.
pub fn cycle_cap() -> Result<usize, Failure> {
    match std::env::var("SFSEL_CYCLE_CAP") {
        Ok(s) => s
            .trim()
            .parse()
            .ok()
            .filter(|&c: &usize| c > 0)
            .ok_or_else(|| {
                Failure::Usage(format!(
                    "SFSEL_CYCLE_CAP must be a positive integer, got {s:?}"
                ))
            }),
        Err(_) => Ok(DEFAULT_CYCLE_CAP),
    }
}

pub fn link_list<'a>(links: impl IntoIterator<Item = &'a Link>) -> String {
    links
        .into_iter()
        .map(|&l| String::from(l))
        .collect::<Vec<_>>()
        .join(",")
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn to_json_string(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Renders a serialized cost: integers and decimals as-is, `[n, d]` as `n/d`.
fn value_text(v: &Value) -> String {
    match v {
        Value::Array(parts) if parts.len() == 2 => format!("{}/{}", parts[0], parts[1]),
        Value::Number(x) => match x.as_f64() {
            Some(f) if f.fract() == 0.0 && f.abs() < 1e15 => format!("{}", f as i64),
            _ => x.to_string(),
        },
        other => other.to_string(),
    }
}

pub fn check_sfm(a: &CheckArgs, format: Format, err: &mut dyn Write) -> Result<Output, Failure> {
    let (sys, costs) = load::<f64>(&a.input, err)?;
    let fs = FeedbackSet::parse_list(&a.feedback)?;
    for l in fs.iter() {
        if l.input >= sys.m() || l.output >= sys.p() {
            return Err(Failure::Usage(format!(
                "link {} outside the instance ({} inputs, {} outputs)",
                String::from(l),
                sys.m(),
                sys.p()
            )));
        }
    }
    let cert = has_no_sfm(&sys, &fs);
    let cost = cost_of(&fs, &costs);
    let body = match format {
        Format::Json => to_json_string(&json!({
            "feedback": fs,
            "cost": cost.as_ref().ok(),
            "certificate": cert,
        })),
        Format::Dot => closed_loop_digraph(&sys, &fs).to_dot("closed_loop"),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "feedback: {}", link_list(fs.links()));
            match &cost {
                Ok(c) => {
                    let _ = writeln!(s, "cost: {c}");
                }
                Err(e) => {
                    let _ = writeln!(s, "cost: none ({e})");
                }
            }
            let ca = &cert.condition_a;
            if ca.pass {
                let _ = writeln!(s, "condition (a): pass");
            } else {
                let names: Vec<String> = ca
                    .failing_states()
                    .iter()
                    .map(|x| format!("x{}", x + 1))
                    .collect();
                let _ = writeln!(
                    s,
                    "condition (a): fail ({} share no closed-loop component with a feedback link)",
                    names.join(",")
                );
            }
            let cb = &cert.condition_b;
            if cb.pass {
                let _ = writeln!(s, "condition (b): pass");
            } else {
                let _ = writeln!(
                    s,
                    "condition (b): fail (matching {} of {}, unmatched {})",
                    cb.matching_size,
                    cb.required,
                    cb.deficient.join(",")
                );
            }
            let _ = writeln!(s, "no structurally fixed modes: {}", pass_fail(cert.pass));
            s
        }
    };
    Ok(Output {
        body: body.into_bytes(),
        code: if cert.pass { 0 } else { 1 },
    })
}

struct Routed<T> {
    route: &'static str,
    note: Option<String>,
    report: SolveReport<T>,
}

fn route<T: Scalar>(
    a: &SolveArgs,
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
    cap: usize,
) -> Result<Routed<T>, Failure> {
    let potential = || {
        let opts = PotentialOptions {
            merge: !a.no_merge,
            cycle_cap: cap,
            trace: a.trace,
        };
        approx::solve(sys, costs, &opts)
    };
    let backedge = || {
        let opts = BackedgeOptions {
            project: a.project,
            trace: a.trace,
        };
        backedge_solve(sys, costs, &opts)
    };
    let plain = |route, r: Result<SolveReport<T>, SolveError>| {
        Ok(Routed {
            route,
            note: None,
            report: r?,
        })
    };
    match a.algo {
        Algo::Potential => plain("potential", potential()),
        Algo::Backedge => plain("backedge", backedge()),
        Algo::Hierarchical => plain("hierarchical", hierarchical_solve(sys, costs, a.trace)),
        Algo::Oracle => plain(
            "oracle",
            oracle_solve(sys, costs, &OracleBudget::with_max_edges(a.budget)),
        ),
        Algo::Auto => match build_hierarchy(sys, costs) {
            Ok(_) => plain("hierarchical", hierarchical_solve(sys, costs, a.trace)),
            Err(e @ SolveError::NotHierarchical { .. })
                if check_backedge(sys, costs).is_empty() =>
            {
                let r = backedge()?;
                if r.cost().is_some() {
                    return Ok(Routed {
                        route: "backedge",
                        note: Some(e.to_string()),
                        report: r,
                    });
                }
                Ok(Routed {
                    route: "potential",
                    note: Some(format!(
                        "{e}; back-edge cover infeasible, fell back to potential"
                    )),
                    report: potential()?,
                })
            }
            Err(
                e @ (SolveError::NotHierarchical { .. }
                | SolveError::AssumptionViolated {
                    assumption: Assumption::BackEdge,
                    ..
                }),
            ) => Ok(Routed {
                route: "potential",
                note: Some(e.to_string()),
                report: potential()?,
            }),
            Err(e) => Err(e.into()),
        },
    }
}

#[derive(Serialize)]
struct Comparison {
    oracle_cost: Option<Value>,
    ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_note: Option<String>,
}

/// `cost / opt`, with 0/0 read as 1.
pub fn ratio(cost: f64, opt: f64) -> f64 {
    if opt > 0.0 {
        cost / opt
    } else if cost == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

fn compare<T: Scalar>(
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
    budget: usize,
    report: &SolveReport<T>,
) -> Comparison {
    match brute_force_problem1(sys, costs, &OracleBudget::with_max_edges(budget)) {
        Ok(Some((_, opt))) => Comparison {
            oracle_cost: Some(opt.to_json()),
            ratio: report.cost().map(|c| ratio(c.as_f64(), opt.as_f64())),
            oracle_note: None,
        },
        Ok(None) => Comparison {
            oracle_cost: None,
            ratio: None,
            oracle_note: Some("oracle finds no admissible feedback set".into()),
        },
        Err(e) => Comparison {
            oracle_cost: None,
            ratio: None,
            oracle_note: Some(e.to_string()),
        },
    }
}

pub fn solve(a: &SolveArgs, format: Format, err: &mut dyn Write) -> Result<Output, Failure> {
    if a.exact {
        solve_with::<Rational>(a, format, err)
    } else {
        solve_with::<f64>(a, format, err)
    }
}

fn solve_with<T: Scalar>(
    a: &SolveArgs,
    format: Format,
    err: &mut dyn Write,
) -> Result<Output, Failure> {
    let (sys, costs) = load::<T>(&a.input, err)?;
    let cap = cycle_cap()?;
    let routed = route(a, &sys, &costs, cap)?;
    if format != Format::Text {
        let _ = writeln!(err, "route: {}", routed.route);
    }
    let comparison = a
        .compare
        .then(|| compare(&sys, &costs, a.budget, &routed.report));
    let report = &routed.report;
    let body = match format {
        Format::Json => {
            let mut rep = serde_json::to_value(report).expect("report serializes");
            if !a.timing {
                if let Some(stats) = rep.pointer_mut("/stats").and_then(Value::as_object_mut) {
                    stats.remove("elapsed_ms");
                }
            }
            to_json_string(&json!({
                "route": routed.route,
                "note": routed.note,
                "report": rep,
                "comparison": comparison,
            }))
        }
        Format::Dot => {
            let empty = FeedbackSet::new();
            closed_loop_digraph(&sys, report.links().unwrap_or(&empty)).to_dot("closed_loop")
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "route: {}", routed.route);
            if let Some(n) = &routed.note {
                let _ = writeln!(s, "note: {n}");
            }
            match &report.verdict {
                Verdict::Feasible { links, cost } => {
                    let _ = writeln!(s, "status: feasible");
                    let _ = writeln!(s, "cost: {cost}");
                    let _ = writeln!(s, "links: {}", link_list(links.links()));
                }
                Verdict::Infeasible { reason } => {
                    let _ = writeln!(s, "status: infeasible");
                    let _ = writeln!(s, "reason: {reason}");
                }
            }
            if let Some(c) = &report.certificate {
                let _ = writeln!(s, "no structurally fixed modes: {}", pass_fail(c.pass));
            }
            let _ = writeln!(
                s,
                "cycles: {}, iterations: {}",
                report.stats.cycles, report.stats.iterations
            );
            if let Some(c) = &comparison {
                match (&c.oracle_cost, c.ratio) {
                    (Some(o), Some(r)) => {
                        let _ = writeln!(s, "oracle cost: {}", value_text(o));
                        let _ = writeln!(s, "ratio: {r:.4}");
                    }
                    (Some(o), None) => {
                        let _ = writeln!(s, "oracle cost: {}", value_text(o));
                    }
                    _ => {
                        let note = c.oracle_note.as_deref().unwrap_or("unavailable");
                        let _ = writeln!(s, "oracle: {note}");
                    }
                }
            }
            if a.trace {
                s.push_str(&trace_text(
                    routed.route,
                    &sys,
                    &costs,
                    report.trace.as_ref(),
                ));
            }
            s
        }
    };
    Ok(Output {
        body: body.into_bytes(),
        code: if report.cost().is_some() { 0 } else { 1 },
    })
}

fn trace_text<T: Scalar>(
    route: &str,
    sys: &StructuredSystem,
    costs: &CostMatrix<T>,
    trace: Option<&Value>,
) -> String {
    let mut s = String::new();
    match (route, trace) {
        ("hierarchical", Some(_)) => {
            if let Ok(h) = build_hierarchy(sys, costs) {
                s.push_str(&hierarchical_dp(&h).table.render_text());
            }
        }
        ("potential", Some(Value::Array(iterations))) => {
            for it in iterations {
                let pots: Vec<String> = it["pots"]
                    .as_array()
                    .into_iter()
                    .flatten()
                    .map(|p| format!("pot(C{})={}", p["cycle"], value_text(&p["pot"])))
                    .collect();
                let _ = writeln!(
                    s,
                    "iteration {}: {} -> C{}",
                    it["iteration"],
                    pots.join(" "),
                    it["selected"]
                );
            }
        }
        ("backedge", Some(t)) => {
            for (k, set) in t["set_cover"]["sets"]
                .as_array()
                .into_iter()
                .flatten()
                .enumerate()
            {
                let elements: Vec<&str> = set["elements"]
                    .as_array()
                    .into_iter()
                    .flatten()
                    .filter_map(Value::as_str)
                    .collect();
                let _ = writeln!(
                    s,
                    "S{} = {{{}}} weight {} via {}",
                    k + 1,
                    elements.join(","),
                    value_text(&set["weight"]),
                    set["link"].as_str().unwrap_or("?")
                );
            }
            if let Some(dropped) = t["dropped"].as_array().filter(|d| !d.is_empty()) {
                let names: Vec<&str> = dropped.iter().filter_map(Value::as_str).collect();
                let _ = writeln!(s, "dropped: {}", names.join(","));
            }
        }
        _ => {}
    }
    s
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SetCoverFile {
    universe: usize,
    /// One-based elements.
    sets: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

fn read_set_cover(path: &Path) -> Result<WeightedSetCoverSpec<f64>, Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let raw: SetCoverFile = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if raw.weights.len() != raw.sets.len() {
        return Err(Failure::Usage(format!(
            "{} sets but {} weights",
            raw.sets.len(),
            raw.weights.len()
        )));
    }
    let mut sets = Vec::with_capacity(raw.sets.len());
    for set in &raw.sets {
        let mut out = std::collections::BTreeSet::new();
        for &e in set {
            if e == 0 || e > raw.universe {
                return Err(Failure::Usage(format!(
                    "element {e} outside the universe 1..={}",
                    raw.universe
                )));
            }
            out.insert(e - 1);
        }
        sets.push(out);
    }
    Ok(WeightedSetCoverSpec {
        universe: raw.universe,
        sets,
        weights: raw.weights,
    })
}

pub fn params_from(a: &GenArgs) -> RandomParams {
    let d = RandomParams::default();
    RandomParams {
        nodes: a.nodes.unwrap_or(d.nodes),
        edge_density: a.edge_density.unwrap_or(d.edge_density),
        io_density: a.io_density.unwrap_or(d.io_density),
        link_density: a.link_density.unwrap_or(d.link_density),
        max_links: match a.max_links {
            Some(0) => None,
            Some(k) => Some(k),
            None => d.max_links,
        },
        cost_min: a.cost_min.unwrap_or(d.cost_min),
        cost_max: a.cost_max.unwrap_or(d.cost_max),
        fractional: a.fractional,
    }
}

pub fn gen(a: &GenArgs) -> Result<Output, Failure> {
    let bytes = match (&a.set_cover, &a.kind) {
        (Some(path), _) => {
            let spec = read_set_cover(path)?;
            let (sys, costs) = from_set_cover(&spec)?;
            write_instance(&sys, &costs)
        }
        (None, Some(kind)) => {
            let kind: InstanceKind = kind.parse()?;
            let (sys, costs) = random_instance(kind, &params_from(a), a.seed)?;
            write_instance(&sys, &costs)
        }
        (None, None) => return Err(Failure::Usage("gen needs --kind or --set-cover".into())),
    };
    Ok(Output {
        body: bytes,
        code: 0,
    })
}

pub fn reduce(a: &ReduceArgs, format: Format, err: &mut dyn Write) -> Result<Output, Failure> {
    let (sys, mut costs) = load::<f64>(&a.input, err)?;
    if format == Format::Dot && a.to != Target::Dr {
        return Err(Failure::Usage(
            "--format dot is only available for --to dr".into(),
        ));
    }
    let body = match a.to {
        Target::Dr => {
            let cg = condense(&sys, &costs)?;
            let node = |c: &usize| format!("N{}", c + 1);
            match format {
                Format::Dot => cg.reduced_digraph().to_dot("DR"),
                Format::Json => {
                    let scc: Vec<Value> = cg
                        .scc
                        .components
                        .iter()
                        .enumerate()
                        .map(|(k, c)| {
                            let states: Vec<String> =
                                c.iter().map(|x| format!("x{}", x + 1)).collect();
                            json!({ "node": node(&k), "states": states })
                        })
                        .collect();
                    let dag: Vec<[String; 2]> = cg
                        .scc
                        .dag_edges
                        .iter()
                        .map(|(a, b)| [node(a), node(b)])
                        .collect();
                    let e_min: Vec<Value> = cg
                        .e_min
                        .iter()
                        .map(|((into, from), e)| {
                            json!({
                                "input_scc": node(into),
                                "output_scc": node(from),
                                "link": e.link,
                                "cost": e.cost.to_json(),
                            })
                        })
                        .collect();
                    to_json_string(&json!({ "scc": scc, "dag_edges": dag, "e_min": e_min }))
                }
                Format::Text => {
                    let mut s = String::new();
                    for (k, c) in cg.scc.components.iter().enumerate() {
                        let states: Vec<String> = c.iter().map(|x| format!("x{}", x + 1)).collect();
                        let _ = writeln!(s, "{} = {{{}}}", node(&k), states.join(","));
                    }
                    for (a, b) in &cg.scc.dag_edges {
                        let _ = writeln!(s, "{} -> {}", node(a), node(b));
                    }
                    for ((into, from), e) in &cg.e_min {
                        let _ = writeln!(
                            s,
                            "{} cost {} (input enters {}, output leaves {})",
                            String::from(e.link),
                            e.cost,
                            node(into),
                            node(from)
                        );
                    }
                    s
                }
            }
        }
        Target::Cycles => {
            let opts = PotentialOptions {
                merge: !a.no_merge,
                cycle_cap: cycle_cap()?,
                trace: false,
            };
            let cs = prepared_cycles(&sys, &costs, &opts)?;
            match format {
                Format::Json => {
                    let costs: BTreeMap<String, Value> = cs
                        .costs
                        .iter()
                        .map(|(&l, c)| (String::from(l), c.to_json()))
                        .collect();
                    to_json_string(&json!({
                        "node_count": cs.node_count,
                        "merged": !a.no_merge,
                        "cycles": cs.cycles,
                        "costs": costs,
                    }))
                }
                _ => {
                    let mut s = String::new();
                    let _ = writeln!(
                        s,
                        "{} cycles over {} nodes{}",
                        cs.cycles.len(),
                        cs.node_count,
                        if a.no_merge { "" } else { " (merged)" }
                    );
                    for (k, c) in cs.cycles.iter().enumerate() {
                        let _ = writeln!(s, "C{} = {c}", k + 1);
                    }
                    for (l, c) in &cs.costs {
                        let _ = writeln!(s, "{} cost {c}", String::from(*l));
                    }
                    s
                }
            }
        }
        Target::Setcover => {
            let dropped: Vec<Link> = if a.project {
                let bad = check_backedge(&sys, &costs);
                costs.retain(|l| !bad.contains(&l));
                bad
            } else {
                Vec::new()
            };
            for l in &dropped {
                let _ = writeln!(
                    err,
                    "warning: dropped {} (breaks the back-edge structure)",
                    String::from(*l)
                );
            }
            let inst = reduce_to_set_cover(&sys, &costs)?;
            match format {
                Format::Json => to_json_string(&json!({ "set_cover": inst, "dropped": dropped })),
                _ => {
                    let mut s = String::new();
                    for (k, set) in inst.sets.iter().enumerate() {
                        let elements: Vec<String> =
                            set.iter().map(|x| format!("x{}", x + 1)).collect();
                        let _ = writeln!(
                            s,
                            "S{} = {{{}}} weight {} via {}",
                            k + 1,
                            elements.join(","),
                            inst.weights[k],
                            String::from(inst.provenance[k])
                        );
                    }
                    s
                }
            }
        }
    };
    Ok(Output::ok(body))
}
