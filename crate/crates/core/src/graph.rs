//! The operator as a layered algebraic branching program.
//!
//! Nodes are occupation states grouped by Hamming level. The closing edges
//! into the vacuum end at a duplicated vacuum sink, so the cycle becomes a
//! DAG whose source-to-sink path products are the permutation terms.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::basis::{jw_negative, BasisState};
use crate::error::{Error, Result};
use crate::reduction::{named_entries, ReductionTrace, UNCHANGED_TOL};
use crate::scalar::rel_diff;
use crate::spin::{SpinOperator, Statistics, Variant, DENSE_MAX_N};

/// Largest site count for exhaustive path enumeration.
pub const PATH_MAX_N: usize = 7;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Node {
    pub id: usize,
    pub label: String,
    pub level: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphEdge {
    pub source: usize,
    pub target: usize,
    #[serde(serialize_with = "complex")]
    pub weight: Complex64,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbpGraph {
    pub n: usize,
    pub nodes: Vec<Node>,
    pub edges: Vec<GraphEdge>,
    pub source: usize,
    pub sink: usize,
}

fn complex<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq([z.re, z.im])
}

type Labelled = Vec<(BasisState, BasisState, Complex64, String)>;

impl AbpGraph {
    /// Builds the layered graph from interior states and labelled edges
    /// `(source, target, weight, label)`; edges into the vacuum go to the
    /// sink, which sits one level above `top`.
    fn build(n: usize, mut states: Vec<BasisState>, top: usize, edges: Labelled) -> Self {
        states.sort_by_key(|s| (s.level(), s.mask()));
        let mut nodes: Vec<Node> = states
            .iter()
            .enumerate()
            .map(|(id, s)| Node {
                id,
                label: s.to_string(),
                level: s.level(),
            })
            .collect();
        let sink = nodes.len();
        nodes.push(Node {
            id: sink,
            label: BasisState::vacuum(n).to_string(),
            level: top + 1,
        });
        let ids: HashMap<BasisState, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut out: Vec<GraphEdge> = edges
            .into_iter()
            .map(|(s, t, weight, label)| GraphEdge {
                source: ids[&s],
                target: if t.mask() == 0 { sink } else { ids[&t] },
                weight,
                label,
            })
            .collect();
        out.sort_by_key(|e| (e.source, e.target));
        AbpGraph {
            n,
            nodes,
            edges: out,
            source: ids[&BasisState::vacuum(n)],
            sink,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("graph serializes")
    }

    fn outgoing(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.source].push(i);
        }
        adj
    }
}

/// `w_{h,j}` with the Jordan-Wigner sign shown as a leading `-`.
fn weight_label(source: BasisState, site: usize, statistics: Statistics) -> String {
    let sign = if statistics == Statistics::Fermionic && jw_negative(source.mask(), site) {
        "-"
    } else {
        ""
    };
    format!("{sign}w_{{{},{}}}", source.level(), site)
}

pub fn numeric_label(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{:.4}", z.re)
    } else {
        format!("{:.4}{:+.4}i", z.re, z.im)
    }
}

/// One node per state plus the duplicated vacuum sink; one edge per
/// operator transition.
pub fn graph_from_operator(op: &SpinOperator<'_>) -> Result<AbpGraph> {
    let n = op.n();
    if n > DENSE_MAX_N {
        return Err(Error::SizeGuard {
            what: "graph",
            n,
            max: DENSE_MAX_N,
        });
    }
    let dim = op.dimension();
    let states = (0..dim).map(|i| BasisState::from_dense_index(n, i)).collect();
    let edges = op
        .edges()
        .into_iter()
        .map(|e| {
            let label = match e.weight_index {
                Some((_, site)) => weight_label(e.source, site, op.statistics()),
                None => "1".to_string(),
            };
            (e.source, e.target, e.weight, label)
        })
        .collect();
    let top = match op.variant() {
        Variant::Breve => n - 1,
        Variant::Tilde => n,
    };
    Ok(AbpGraph::build(n, states, top, edges))
}

/// Sum over all source-to-sink paths of the product of edge weights, and
/// the number of paths.
pub fn path_sum(graph: &AbpGraph) -> Result<(Complex64, u64)> {
    if graph.n > PATH_MAX_N {
        return Err(Error::SizeGuard {
            what: "path enumeration",
            n: graph.n,
            max: PATH_MAX_N,
        });
    }
    let adj = graph.outgoing();
    let mut total = Complex64::new(0.0, 0.0);
    let mut paths = 0u64;
    // (node, product so far)
    let mut stack = vec![(graph.source, Complex64::new(1.0, 0.0))];
    while let Some((node, product)) = stack.pop() {
        if node == graph.sink {
            total += product;
            paths += 1;
            continue;
        }
        for &e in adj[node].iter().rev() {
            let edge = &graph.edges[e];
            stack.push((edge.target, product * edge.weight));
        }
    }
    Ok((total, paths))
}

/// Graph of the operator after `round` reduction rounds (round 0 is the
/// original operator).
///
/// Entries unchanged since the previous round keep their label; the named
/// `n = 3` entries are labelled symbolically; anything else shows its value.
pub fn graph_from_reduction(trace: &ReductionTrace, round: usize) -> Result<AbpGraph> {
    if round >= trace.rounds.len() {
        return Err(Error::Range {
            what: "round",
            value: round,
            max: trace.rounds.len() - 1,
        });
    }
    let labels = reduction_labels(trace, round);
    let state = &trace.rounds[round];
    let edges = state
        .edges()
        .into_iter()
        .map(|(s, t, w)| {
            let label = labels[&(s, t)].clone();
            (s, t, w, label)
        })
        .collect();
    Ok(AbpGraph::build(trace.n, state.basis.clone(), trace.n - 1, edges))
}

fn reduction_labels(trace: &ReductionTrace, round: usize) -> HashMap<(BasisState, BasisState), String> {
    let state = &trace.rounds[round];
    if round == 0 {
        let full = (1u64 << trace.n) - 1;
        return state
            .edges()
            .into_iter()
            .map(|(s, t, _)| {
                let site = if t.mask() == 0 { full ^ s.mask() } else { t.mask() ^ s.mask() };
                ((s, t), weight_label(s, site.trailing_zeros() as usize, trace.statistics))
            })
            .collect();
    }
    let previous = reduction_labels(trace, round - 1);
    let prev_state = &trace.rounds[round - 1];
    let named = if trace.n == 3 {
        let m = original_matrix(trace);
        named_entries(&m, trace.statistics).unwrap_or_default()
    } else {
        Vec::new()
    };
    state
        .edges()
        .into_iter()
        .map(|(s, t, w)| {
            let old = prev_state.entry(s, t);
            let label = if old != Complex64::new(0.0, 0.0) && rel_diff(w, old) <= UNCHANGED_TOL {
                previous[&(s, t)].clone()
            } else if let Some(e) = named.iter().find(|e| {
                e.round == round && e.source == s && e.target == t && rel_diff(e.value, w) <= 1e-10
            }) {
                e.label.to_string()
            } else {
                numeric_label(w)
            };
            ((s, t), label)
        })
        .collect()
}

/// Recovers the weight matrix from the unreduced operator's edges.
fn original_matrix(trace: &ReductionTrace) -> crate::matrix::SquareMatrix {
    let n = trace.n;
    let full = (1u64 << n) - 1;
    let mut m = crate::matrix::SquareMatrix::from_fn(n, |_, _| Complex64::new(0.0, 0.0));
    for (s, t, w) in trace.rounds[0].edges() {
        let site = if t.mask() == 0 { full ^ s.mask() } else { t.mask() ^ s.mask() };
        let site = site.trailing_zeros() as usize;
        let negative = trace.statistics == Statistics::Fermionic && jw_negative(s.mask(), site);
        m.set(s.level(), site, if negative { -w } else { w });
    }
    m
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DotOptions {
    /// Keep the `-` sign prefix on labels.
    pub show_signs: bool,
    /// Label edges with their numeric weight instead of the symbolic label.
    pub numeric_weights: bool,
}

/// Graphviz digraph with one `rank=same` group per level below the sink.
pub fn export_dot(graph: &AbpGraph, options: DotOptions) -> String {
    let mut out = String::from("digraph abp {\n  rankdir=TB;\n  node [shape=ellipse];\n");
    for node in &graph.nodes {
        let _ = writeln!(out, "  n{} [label=\"{}\"];", node.id, node.label);
    }
    let top = graph.nodes[graph.sink].level;
    for level in 0..top {
        let ids: Vec<String> = graph
            .nodes
            .iter()
            .filter(|nd| nd.level == level && nd.id != graph.sink)
            .map(|nd| format!("n{};", nd.id))
            .collect();
        if !ids.is_empty() {
            let _ = writeln!(out, "  {{ rank=same; {} }}", ids.join(" "));
        }
    }
    let _ = writeln!(out, "  {{ rank=sink; n{}; }}", graph.sink);
    for e in &graph.edges {
        let raw = if options.numeric_weights {
            numeric_label(e.weight)
        } else {
            e.label.clone()
        };
        let label = if options.show_signs {
            raw
        } else {
            raw.trim_start_matches('-').to_string()
        };
        let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", e.source, e.target, label);
    }
    out.push_str("}\n");
    out
}

/// Node and edge lines recovered from DOT text written by [`export_dot`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParsedDot {
    /// `(node id, label)`
    pub nodes: Vec<(String, String)>,
    /// `(source id, target id, label)`
    pub edges: Vec<(String, String, String)>,
}

pub fn parse_dot(text: &str) -> Result<ParsedDot> {
    let mut parsed = ParsedDot::default();
    let body = text
        .trim()
        .strip_prefix("digraph")
        .ok_or_else(|| Error::Malformed("not a digraph".into()))?;
    if !body.trim_end().ends_with('}') {
        return Err(Error::Malformed("unterminated digraph".into()));
    }
    for line in body.lines().map(str::trim) {
        let Some((head, attrs)) = line.split_once(" [label=\"") else {
            continue;
        };
        let label = attrs
            .strip_suffix("\"];")
            .ok_or_else(|| Error::Malformed(format!("bad attribute list: {line}")))?
            .to_string();
        match head.split_once(" -> ") {
            Some((s, t)) => parsed.edges.push((s.to_string(), t.to_string(), label)),
            None => parsed.nodes.push((head.to_string(), label)),
        }
    }
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{random_matrix, RandomKind, SquareMatrix};
    use crate::reduction::reduce_fully;

    fn graph(m: &SquareMatrix, s: Statistics) -> AbpGraph {
        graph_from_operator(&SpinOperator::breve(m, s).unwrap()).unwrap()
    }

    #[test]
    fn n3_topology_and_signs() {
        let m = random_matrix(3, 1, RandomKind::ComplexGaussian);
        let g = graph(&m, Statistics::Bosonic);
        assert_eq!((g.nodes.len(), g.edges.len()), (8, 12));
        assert_eq!(g.nodes[g.sink].label, "000");
        assert_eq!(g.nodes[g.sink].level, 3);
        assert!(g.edges.iter().all(|e| g.nodes[e.target].level == g.nodes[e.source].level + 1));
        let f = graph(&m, Statistics::Fermionic);
        let mut negative: Vec<&str> = f
            .edges
            .iter()
            .filter(|e| e.label.starts_with('-'))
            .map(|e| e.label.as_str())
            .collect();
        negative.sort();
        assert_eq!(negative, ["-w_{1,0}", "-w_{1,0}", "-w_{1,1}", "-w_{2,1}"]);
    }

    #[test]
    fn single_site() {
        let m = SquareMatrix::<Complex64>::from_fn(1, |_, _| Complex64::new(3.0, 0.0));
        let g = graph(&m, Statistics::Bosonic);
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].label, "w_{0,0}");
        assert_eq!(path_sum(&g).unwrap(), (Complex64::new(3.0, 0.0), 1));
        let dot = export_dot(&g, DotOptions::default());
        assert!(dot.contains("n0 -> n1 [label=\"w_{0,0}\"];"));
    }

    #[test]
    fn path_sums_are_permutation_expansions() {
        let m = random_matrix(3, 2, RandomKind::ComplexGaussian);
        let w = |r, c| *m.get(r, c);
        let terms = |signs: [f64; 6]| {
            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            perms
                .iter()
                .zip(signs)
                .map(|(p, s)| w(0, p[0]) * w(1, p[1]) * w(2, p[2]) * s)
                .sum::<Complex64>()
        };
        let (p, count) = path_sum(&graph(&m, Statistics::Bosonic)).unwrap();
        assert_eq!(count, 6);
        assert!(rel_diff(p, terms([1.0; 6])) < 1e-13);
        let (d, _) = path_sum(&graph(&m, Statistics::Fermionic)).unwrap();
        assert!(rel_diff(d, terms([1.0, -1.0, -1.0, 1.0, 1.0, -1.0])) < 1e-13);
        let big = SquareMatrix::<Complex64>::identity(8);
        assert!(matches!(
            path_sum(&graph(&big, Statistics::Bosonic)),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn reduced_graphs() {
        let m = random_matrix(3, 5, RandomKind::ComplexGaussian);
        let op = SpinOperator::breve(&m, Statistics::Fermionic).unwrap();
        let t = reduce_fully(&op).unwrap();
        assert_eq!(graph_from_reduction(&t, 0).unwrap(), graph_from_operator(&op).unwrap());
        let g = graph_from_reduction(&t, 2).unwrap();
        let labels: Vec<(&str, &str, &str)> = g
            .edges
            .iter()
            .map(|e| (g.nodes[e.source].label.as_str(), g.nodes[e.target].label.as_str(), e.label.as_str()))
            .collect();
        assert_eq!(
            labels,
            [("000", "100", "w''_{0,0}"), ("100", "110", "w'_{1,1}"), ("110", "000", "w_{2,2}")]
        );
        assert_eq!(g.nodes.len(), 4);
        assert_eq!(path_sum(&g).unwrap().1, 1);
        let r1 = graph_from_reduction(&t, 1).unwrap();
        assert!(r1.edges.iter().any(|e| e.label == "-w'_{1,0}"));
        assert!(matches!(graph_from_reduction(&t, 3), Err(Error::Range { .. })));

        let b = reduce_fully(&SpinOperator::breve(&m, Statistics::Bosonic).unwrap()).unwrap();
        let g = graph_from_reduction(&b, 1).unwrap();
        let level2: Vec<&str> = g.nodes.iter().filter(|nd| nd.level == 2).map(|nd| nd.label.as_str()).collect();
        assert_eq!(level2, ["110"]);
        let x = g.edges.iter().find(|e| e.label == "x").unwrap();
        assert_eq!(g.nodes[x.source].label, "001");
    }

    #[test]
    fn dot_export_and_roundtrip() {
        let m = random_matrix(3, 3, RandomKind::ComplexGaussian);
        let g = graph(&m, Statistics::Fermionic);
        let signed = export_dot(&g, DotOptions { show_signs: true, numeric_weights: false });
        assert_eq!(signed.matches(" -> ").count(), 12);
        assert_eq!(signed.matches("rank=same").count(), 3);
        assert_eq!(signed.matches("[label=\"-").count(), 4);
        let unsigned = export_dot(&g, DotOptions::default());
        assert_eq!(unsigned.matches("[label=\"-").count(), 0);
        assert_eq!(signed, export_dot(&g, DotOptions { show_signs: true, numeric_weights: false }));

        let parsed = parse_dot(&signed).unwrap();
        let mut nodes: Vec<(String, String)> =
            g.nodes.iter().map(|nd| (format!("n{}", nd.id), nd.label.clone())).collect();
        let mut edges: Vec<(String, String, String)> = g
            .edges
            .iter()
            .map(|e| (format!("n{}", e.source), format!("n{}", e.target), e.label.clone()))
            .collect();
        let (mut pn, mut pe) = (parsed.nodes, parsed.edges);
        for v in [&mut nodes, &mut pn] {
            v.sort();
        }
        for v in [&mut edges, &mut pe] {
            v.sort();
        }
        assert_eq!((pn, pe), (nodes, edges));
        assert!(parse_dot("graph {}").is_err());
    }

    #[test]
    fn json_dump() {
        let g = graph(&SquareMatrix::<Complex64>::identity(2), Statistics::Bosonic);
        let v = g.to_json();
        assert_eq!(v["nodes"].as_array().unwrap().len(), 4);
        assert_eq!(v["edges"][0]["weight"], serde_json::json!([1.0, 0.0]));
    }
}
