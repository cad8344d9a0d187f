//! Reports for one checker run: the JSON summary, the per-record
//! derivation dump, the derivation graph in DOT form, and the oracle's
//! depth profile as CSV.
//!
//! The JSON object carries exactly the keys `verdict`, `safe`,
//! `homogeneous`, `letters`, `stats`, `witness`, `oracle`; absent optional
//! parts serialize as `null` so the shape is stable across runs.

use crate::oracle::Evidence;
use crate::saturation::Stats;
use crate::scheme::{scheme_is_homogeneous, Scheme};
use crate::types::{Letters, TyInterner};
use crate::typing::AsmKey;
use crate::verdict::{Analysis, DerivGraph, Witness};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// The witness as rendered edges, readable without the graph dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    /// Edges from the start binding to the cycle's anchor.
    pub path: Vec<String>,
    /// Edges of the productive cycle, anchor to anchor.
    pub cycle: Vec<String>,
}

/// Expansion-oracle evidence (present only when the oracle was run).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub confirmed: bool,
    pub max_f: u32,
    pub depth: u32,
}

/// The machine-readable summary of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub verdict: String,
    pub safe: bool,
    pub homogeneous: bool,
    pub letters: Vec<String>,
    pub stats: Stats,
    pub witness: Option<WitnessReport>,
    pub oracle: Option<OracleReport>,
}

/// Canonical label of a binding, as used in dumps and DOT nodes.
pub fn binding_label(
    scheme: &Scheme,
    letters: &Letters,
    tys: &TyInterner,
    key: AsmKey,
) -> String {
    let (nt, prod, ty) = key;
    format!(
        "{}:({}, {})",
        scheme.nt_name(nt),
        prod.render(letters),
        tys.render(ty, letters)
    )
}

/// One graph edge as `from -> to [gain=v]`.
fn edge_label(
    scheme: &Scheme,
    letters: &Letters,
    tys: &TyInterner,
    graph: &DerivGraph,
    edge: usize,
) -> String {
    let e = &graph.edges[edge];
    format!(
        "{} -> {} [gain={}]",
        binding_label(scheme, letters, tys, graph.nodes[e.from]),
        binding_label(scheme, letters, tys, graph.nodes[e.to]),
        e.gain.render(letters)
    )
}

fn witness_report(
    scheme: &Scheme,
    letters: &Letters,
    tys: &TyInterner,
    graph: &DerivGraph,
    witness: &Witness,
) -> WitnessReport {
    let render = |edges: &[usize]| {
        edges
            .iter()
            .map(|&ei| edge_label(scheme, letters, tys, graph, ei))
            .collect()
    };
    WitnessReport {
        path: render(&witness.path),
        cycle: render(&witness.cycle),
    }
}

/// Assemble the JSON summary from one analysis and optional oracle run.
pub fn run_report(
    scheme: &Scheme,
    letters: &Letters,
    an: &Analysis,
    oracle: Option<&Evidence>,
) -> RunReport {
    RunReport {
        verdict: an.verdict.outcome.as_str().to_string(),
        safe: an.verdict.scheme_safe,
        homogeneous: scheme_is_homogeneous(scheme),
        letters: letters.names().to_vec(),
        stats: an.sat.stats.clone(),
        witness: an.verdict.witness.as_ref().map(|w| {
            witness_report(scheme, letters, &an.sat.tys, &an.graph, w)
        }),
        oracle: oracle.map(|ev| OracleReport {
            confirmed: ev.confirmed,
            max_f: ev.max_f,
            depth: ev.depth,
        }),
    }
}

/// Every derivation record on one line:
/// `X : (A,τ) value=v via {Y:(B,σ) xN, ...}`.
pub fn derivation_dump(
    scheme: &Scheme,
    letters: &Letters,
    an: &Analysis,
) -> Vec<String> {
    let tys = &an.sat.tys;
    let mut lines = Vec::new();
    for (&(nt, prod, ty), records) in &an.sat.table.records {
        let head = format!(
            "{} : ({},{})",
            scheme.nt_name(nt),
            prod.render(letters),
            tys.render(ty, letters)
        );
        for r in records {
            let asms: Vec<String> = r
                .asms
                .iter()
                .map(|((n, a, t), c)| {
                    format!(
                        "{}:({},{}) x{}",
                        scheme.nt_name(*n),
                        a.render(letters),
                        tys.render(*t, letters),
                        c
                    )
                })
                .collect();
            lines.push(format!(
                "{} value={} via {{{}}}",
                head,
                r.value.render(letters),
                asms.join(", ")
            ));
        }
    }
    lines.sort();
    lines
}

/// Distinguishable colors, one per important letter (up to 16).
const LETTER_COLORS: [&str; 16] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
    "#e377c2", "#17becf", "#bcbd22", "#7f7f7f", "#aec7e8", "#ffbb78",
    "#98df8a", "#ff9896", "#c5b0d5", "#c49c94",
];

/// The derivation graph in DOT form. Nodes are labeled `X:(A,τ)`; an edge
/// productive in some letters is drawn solid in those letters' colors (a
/// colon-separated color list draws one parallel line per letter), labeled
/// with its gain; non-productive edges are dashed and gray.
pub fn dot_graph(scheme: &Scheme, letters: &Letters, an: &Analysis) -> String {
    let tys = &an.sat.tys;
    let graph = &an.graph;
    let mut out = String::new();
    out.push_str("digraph derivations {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box, fontname=\"monospace\"];\n");
    for (i, &key) in graph.nodes.iter().enumerate() {
        let label = binding_label(scheme, letters, tys, key);
        let _ = writeln!(out, "  n{i} [label=\"{}\"];", label.replace('"', "\\\""));
    }
    for e in &graph.edges {
        if e.mask.is_empty() {
            let _ = writeln!(
                out,
                "  n{} -> n{} [style=dashed, color=\"#9a9a9a\"];",
                e.from, e.to
            );
        } else {
            let colors: Vec<&str> = (0..letters.s())
                .filter(|&i| e.mask.contains(i))
                .map(|i| LETTER_COLORS[i % LETTER_COLORS.len()])
                .collect();
            let _ = writeln!(
                out,
                "  n{} -> n{} [color=\"{}\", penwidth=2, label=\"+{}\"];",
                e.from,
                e.to,
                colors.join(":"),
                e.gain.render(letters)
            );
        }
    }
    out.push_str("}\n");
    out
}

/// The flow table, one line per rule parameter:
/// `(X, i) <- {occurrences}` with 0-based parameter indices.
pub fn flow_dump(scheme: &Scheme, an: &Analysis) -> Vec<String> {
    an.sat
        .flows
        .flows
        .iter()
        .map(|((nt, i), occs)| {
            let rendered: Vec<String> =
                occs.iter().map(|&t| scheme.render_term(t)).collect();
            format!(
                "({}, {}) <- {{{}}}",
                scheme.nt_name(*nt),
                i,
                rendered.join(", ")
            )
        })
        .collect()
}

/// The oracle's depth sweep as CSV, one row per expanded depth. A depth
/// whose tree has no finite branch leaves the `f` column empty.
pub fn oracle_csv(ev: &Evidence) -> String {
    let mut out = String::from("depth,f\n");
    for p in &ev.profiles {
        match p.f {
            Some(v) => {
                let _ = writeln!(out, "{},{}", p.depth, v);
            }
            None => {
                let _ = writeln!(out, "{},", p.depth);
            }
        }
    }
    out
}
