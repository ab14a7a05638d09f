//! Instance generation and the `.sfsi.json` file format.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::InstanceError;
use crate::model::{ensure_valid, CostMatrix, FeedbackSet, Link, StructuredSystem};
use crate::scalar::Scalar;

/// A weighted set cover instance over elements `0..universe`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSetCoverSpec<T> {
    pub universe: usize,
    pub sets: Vec<BTreeSet<usize>>,
    pub weights: Vec<T>,
}

impl<T: Scalar> WeightedSetCoverSpec<T> {
    pub fn weight(&self, chosen: &[usize]) -> T {
        chosen.iter().map(|&k| self.weights[k]).sum()
    }

    pub fn covers(&self, chosen: &[usize]) -> bool {
        let got: BTreeSet<usize> = chosen
            .iter()
            .flat_map(|&k| self.sets[k].iter().copied())
            .collect();
        got.len() == self.universe && (0..self.universe).all(|e| got.contains(&e))
    }
}

/// Set-cover hardness construction. States: elements `0..N`, set nodes
/// `N..N+r`, hub `N+r`. Input k sits on set node k and input r on the hub;
/// output k senses set node k. `(u_k, y_k)` costs 0 and `(u_r, y_k)` costs
/// the weight of set k.
pub fn from_set_cover<T: Scalar>(
    spec: &WeightedSetCoverSpec<T>,
) -> Result<(StructuredSystem, CostMatrix<T>), InstanceError> {
    let (big_n, r) = (spec.universe, spec.sets.len());
    if spec.weights.len() != r {
        return Err(InstanceError::InvalidParams(format!(
            "{} weights for {r} sets",
            spec.weights.len()
        )));
    }
    if big_n == 0 {
        return Err(InstanceError::InvalidParams("empty universe".into()));
    }
    let n = big_n + r + 1;
    let hub = big_n + r;
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    edges.extend((0..big_n).map(|e| (hub, e)));
    for (k, set) in spec.sets.iter().enumerate() {
        for &e in set {
            if e >= big_n {
                return Err(InstanceError::InvalidParams(format!(
                    "set {} contains element {} outside the universe",
                    k + 1,
                    e + 1
                )));
            }
            edges.push((e, big_n + k));
        }
    }
    let union: BTreeSet<usize> = spec.sets.iter().flatten().copied().collect();
    if union.len() != big_n {
        return Err(InstanceError::InvalidParams(
            "sets do not cover the universe".into(),
        ));
    }
    let inputs: Vec<usize> = (0..=r).map(|k| big_n + k).collect();
    let outputs: Vec<usize> = (0..r).map(|k| big_n + k).collect();
    let sys = StructuredSystem::new(n, edges, inputs, outputs)?;
    let mut triples: Vec<(usize, usize, T)> = (0..r).map(|k| (k, k, T::zero())).collect();
    triples.extend(spec.weights.iter().enumerate().map(|(k, &w)| (r, k, w)));
    let costs = CostMatrix::from_triples(triples)?;
    ensure_valid(&sys, &costs)?;
    Ok((sys, costs))
}

/// Sets selected by a feedback set on a [`from_set_cover`] instance, and
/// their total weight.
pub fn extract_cover<T: Scalar>(
    fs: &FeedbackSet,
    spec: &WeightedSetCoverSpec<T>,
) -> (Vec<usize>, T) {
    let r = spec.sets.len();
    let chosen: Vec<usize> = fs
        .iter()
        .filter(|l| l.input == r && l.output < r)
        .map(|l| l.output)
        .collect();
    let w = spec.weight(&chosen);
    (chosen, w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceKind {
    /// Self-loops on every state, forward edges only: singleton SCCs.
    Dag,
    /// Condensation is a forest; costs respect input-to-output reachability.
    Hierarchy,
    /// Arbitrary self-damped topology; costs respect reachability.
    Backedge,
    /// Arbitrary topology with self-loops on every state.
    SelfDamped,
}

impl std::str::FromStr for InstanceKind {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dag" => Ok(Self::Dag),
            "hierarchy" => Ok(Self::Hierarchy),
            "backedge" => Ok(Self::Backedge),
            "selfdamped" => Ok(Self::SelfDamped),
            other => Err(InstanceError::InvalidParams(format!(
                "unknown kind {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Dag => "dag",
            Self::Hierarchy => "hierarchy",
            Self::Backedge => "backedge",
            Self::SelfDamped => "selfdamped",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomParams {
    /// States, or SCC nodes for the hierarchy kind.
    pub nodes: usize,
    /// Probability of each candidate state edge.
    pub edge_density: f64,
    /// Probability that a state gets an input (and, independently, an output).
    pub io_density: f64,
    /// Probability that an admissible link gets a finite cost.
    pub link_density: f64,
    /// Keep at most this many finite costs.
    pub max_links: Option<usize>,
    pub cost_min: u32,
    pub cost_max: u32,
    /// Draw costs with two decimals instead of integers.
    pub fractional: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self {
            nodes: 6,
            edge_density: 0.3,
            io_density: 0.6,
            link_density: 0.5,
            max_links: Some(12),
            cost_min: 1,
            cost_max: 10,
            fractional: false,
        }
    }
}

impl RandomParams {
    fn check(&self) -> Result<(), InstanceError> {
        let bad = |msg: String| Err(InstanceError::InvalidParams(msg));
        if self.nodes == 0 {
            return bad("nodes must be positive".into());
        }
        for (name, p) in [
            ("edge_density", self.edge_density),
            ("io_density", self.io_density),
            ("link_density", self.link_density),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.cost_min > self.cost_max {
            return bad(format!(
                "cost range {}..{} is empty",
                self.cost_min, self.cost_max
            ));
        }
        Ok(())
    }
}

/// Reproducible random instance.
pub fn random_instance(
    kind: InstanceKind,
    params: &RandomParams,
    seed: u64,
) -> Result<(StructuredSystem, CostMatrix<f64>), InstanceError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, edges) = match kind {
        InstanceKind::Hierarchy => hierarchy_topology(params, &mut rng),
        _ => {
            let n = params.nodes;
            let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
            for a in 0..n {
                for b in 0..n {
                    let allowed = match kind {
                        InstanceKind::Dag => a < b,
                        _ => a != b,
                    };
                    if allowed && rng.gen_bool(params.edge_density) {
                        edges.push((a, b));
                    }
                }
            }
            (n, edges)
        }
    };
    let mut inputs: Vec<usize> = (0..n).filter(|_| rng.gen_bool(params.io_density)).collect();
    let mut outputs: Vec<usize> = (0..n).filter(|_| rng.gen_bool(params.io_density)).collect();
    if inputs.is_empty() {
        inputs.push(rng.gen_range(0..n));
    }
    if outputs.is_empty() {
        outputs.push(rng.gen_range(0..n));
    }
    let sys = StructuredSystem::new(n, edges, inputs, outputs)?;

    let admissible: Vec<Link> = {
        let reach = matches!(kind, InstanceKind::Hierarchy | InstanceKind::Backedge)
            .then(|| reachability(&sys));
        let mut out = Vec::new();
        for i in 0..sys.m() {
            for j in 0..sys.p() {
                let ok = reach
                    .as_ref()
                    .is_none_or(|r| r[sys.input_state(i)][sys.output_state(j)]);
                if ok {
                    out.push(Link::new(i, j));
                }
            }
        }
        out
    };
    let mut chosen: Vec<Link> = admissible
        .into_iter()
        .filter(|_| rng.gen_bool(params.link_density))
        .collect();
    if let Some(cap) = params.max_links {
        if chosen.len() > cap {
            chosen.shuffle(&mut rng);
            chosen.truncate(cap);
            chosen.sort();
        }
    }
    let mut costs = CostMatrix::empty();
    for link in chosen {
        let c = if params.fractional {
            let lo = params.cost_min as f64;
            let hi = params.cost_max as f64;
            (rng.gen_range(lo..=hi) * 100.0).round() / 100.0
        } else {
            rng.gen_range(params.cost_min..=params.cost_max) as f64
        };
        costs.insert(link, c)?;
    }
    Ok((sys, costs))
}

/// Random forest of SCCs. Each SCC is one state, or with probability 1/4 a
/// 2-cycle; every state has a self-loop.
fn hierarchy_topology(params: &RandomParams, rng: &mut ChaCha8Rng) -> (usize, Vec<(usize, usize)>) {
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut edges = Vec::new();
    let mut n = 0;
    for t in 0..params.nodes {
        let size = if rng.gen_bool(0.25) { 2 } else { 1 };
        let states: Vec<usize> = (n..n + size).collect();
        n += size;
        for &s in &states {
            edges.push((s, s));
        }
        if size == 2 {
            edges.push((states[0], states[1]));
            edges.push((states[1], states[0]));
        }
        // a few extra roots give forests
        let p = if t == 0 || rng.gen_bool(0.1) {
            None
        } else {
            Some(rng.gen_range(0..t))
        };
        if let Some(p) = p {
            let from: &Vec<usize> = &members[p];
            let a = *from.choose(rng).expect("nonempty");
            let b = *states.choose(rng).expect("nonempty");
            edges.push((a, b));
        }
        members.push(states);
    }
    (n, edges)
}

fn reachability(sys: &StructuredSystem) -> Vec<Vec<bool>> {
    let d = crate::graphs::state_digraph(sys);
    (0..sys.n()).map(|x| d.reachable_from(x)).collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    version: u32,
    n: usize,
    state_edges: Vec<(usize, usize)>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    costs: Vec<(usize, usize, serde_json::Value)>,
}

fn whole(message: String) -> InstanceError {
    InstanceError::Parse {
        line: 0,
        column: 0,
        message,
    }
}

fn zero_based(k: usize, what: &str) -> Result<usize, InstanceError> {
    k.checked_sub(1)
        .ok_or_else(|| whole(format!("{what} index 0 (indices are one-based)")))
}

/// Parses a `.sfsi.json` document. Indices in the file are one-based.
pub fn read_instance<T: Scalar>(
    bytes: &[u8],
) -> Result<(StructuredSystem, CostMatrix<T>), InstanceError> {
    let raw: RawInstance = serde_json::from_slice(bytes).map_err(|e| InstanceError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if raw.version != 1 {
        return Err(whole(format!("unsupported version {}", raw.version)));
    }
    let mut edges = Vec::with_capacity(raw.state_edges.len());
    for (a, b) in raw.state_edges {
        edges.push((zero_based(a, "state")?, zero_based(b, "state")?));
    }
    let inputs = raw
        .inputs
        .into_iter()
        .map(|x| zero_based(x, "state"))
        .collect::<Result<Vec<_>, _>>()?;
    let outputs = raw
        .outputs
        .into_iter()
        .map(|x| zero_based(x, "state"))
        .collect::<Result<Vec<_>, _>>()?;
    let sys = StructuredSystem::new(raw.n, edges, inputs, outputs)?;
    let mut costs = CostMatrix::empty();
    for (i, j, v) in raw.costs {
        let c = T::from_json(&v).ok_or_else(|| whole(format!("cost {v} is not a number")))?;
        costs.insert(
            Link::new(zero_based(i, "input")?, zero_based(j, "output")?),
            c,
        )?;
    }
    ensure_valid(&sys, &costs)?;
    Ok((sys, costs))
}

/// Canonical `.sfsi.json` text (stable for identical inputs).
pub fn write_instance<T: Scalar>(sys: &StructuredSystem, costs: &CostMatrix<T>) -> Vec<u8> {
    let list = |items: Vec<String>| items.join(", ");
    let mut s = String::from("{\n  \"version\": 1,\n");
    let _ = writeln!(s, "  \"n\": {},", sys.n());
    let edges: Vec<String> = sys
        .state_edges()
        .iter()
        .map(|&(a, b)| format!("[{}, {}]", a + 1, b + 1))
        .collect();
    let _ = writeln!(s, "  \"state_edges\": [{}],", list(edges));
    let ones = |v: &[usize]| list(v.iter().map(|x| (x + 1).to_string()).collect());
    let _ = writeln!(s, "  \"inputs\": [{}],", ones(sys.input_states()));
    let _ = writeln!(s, "  \"outputs\": [{}],", ones(sys.output_states()));
    let triples: Vec<String> = costs
        .iter()
        .map(|(l, c)| format!("[{}, {}, {}]", l.input + 1, l.output + 1, c.to_json()))
        .collect();
    if triples.is_empty() {
        s.push_str("  \"costs\": []\n}\n");
    } else {
        let _ = write!(
            s,
            "  \"costs\": [\n    {}\n  ]\n}}\n",
            triples.join(",\n    ")
        );
    }
    s.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_set_spec() -> WeightedSetCoverSpec<f64> {
        WeightedSetCoverSpec {
            universe: 5,
            sets: vec![
                BTreeSet::from([0, 1]),
                BTreeSet::from([1, 2]),
                BTreeSet::from([2, 3, 4]),
            ],
            weights: vec![1.0, 1.0, 1.0],
        }
    }

    #[test]
    fn set_cover_dimensions() {
        let (sys, p) = from_set_cover(&three_set_spec()).unwrap();
        assert_eq!((sys.n(), sys.m(), sys.p()), (9, 4, 3));
        assert!(sys.is_self_damped());
        for e in 0..5 {
            assert!(sys.state_edges().contains(&(8, e)));
        }
        assert_eq!(p.len(), 6);
        assert_eq!(p.get(Link::new(3, 2)), Some(1.0));
        assert_eq!(p.get(Link::new(1, 1)), Some(0.0));
    }

    #[test]
    fn empty_universe_rejected() {
        let spec = WeightedSetCoverSpec::<f64> {
            universe: 0,
            sets: vec![],
            weights: vec![],
        };
        assert!(from_set_cover(&spec).is_err());
        let gap = WeightedSetCoverSpec {
            universe: 2,
            sets: vec![BTreeSet::from([0])],
            weights: vec![1.0],
        };
        assert!(from_set_cover(&gap).is_err());
    }

    #[test]
    fn extract_cover_cases() {
        let spec = three_set_spec();
        let diag: FeedbackSet = (0..3).map(|k| Link::new(k, k)).collect();
        assert_eq!(extract_cover(&diag, &spec), (vec![], 0.0));
        let all: FeedbackSet = (0..3).map(|k| Link::new(3, k)).chain(diag.iter()).collect();
        assert_eq!(extract_cover(&all, &spec), (vec![0, 1, 2], 3.0));
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        for kind in [
            InstanceKind::Dag,
            InstanceKind::Hierarchy,
            InstanceKind::Backedge,
            InstanceKind::SelfDamped,
        ] {
            let p = RandomParams::default();
            let a = random_instance(kind, &p, 7).unwrap();
            let b = random_instance(kind, &p, 7).unwrap();
            assert_eq!(write_instance(&a.0, &a.1), write_instance(&b.0, &b.1));
        }
    }

    #[test]
    fn bad_params() {
        let p = RandomParams {
            edge_density: 1.5,
            ..RandomParams::default()
        };
        assert!(random_instance(InstanceKind::Dag, &p, 0).is_err());
    }

    #[test]
    fn malformed_triple() {
        let doc = br#"{"version":1,"n":1,"state_edges":[[1,1]],"inputs":[1],"outputs":[1],
            "costs":[[1,1]]}"#;
        match read_instance::<f64>(doc) {
            Err(InstanceError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let doc =
            br#"{"version":1,"n":1,"state_edges":[],"inputs":[],"outputs":[],"costs":[],"x":0}"#;
        assert!(matches!(
            read_instance::<f64>(doc),
            Err(InstanceError::Parse { .. })
        ));
    }

    #[test]
    fn rational_costs_parse_exactly() {
        let doc = br#"{"version":1,"n":1,"state_edges":[[1,1]],"inputs":[1],"outputs":[1],
            "costs":[[1,1,2.75]]}"#;
        let (sys, p) = read_instance::<crate::Rational>(doc).unwrap();
        assert_eq!(p.get(Link::new(0, 0)), Some(crate::Rational::new(11, 4)));
        let again = read_instance::<crate::Rational>(&write_instance(&sys, &p)).unwrap();
        assert_eq!(again.1, p);
    }

    #[test]
    fn round_trip() {
        let (sys, p) =
            random_instance(InstanceKind::SelfDamped, &RandomParams::default(), 3).unwrap();
        let bytes = write_instance(&sys, &p);
        let (sys2, p2) = read_instance::<f64>(&bytes).unwrap();
        assert_eq!(sys, sys2);
        assert_eq!(p, p2);
        assert_eq!(write_instance(&sys2, &p2), bytes);
    }
}
