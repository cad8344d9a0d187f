//! 0-CFA over rule bodies: which terms may flow into which nonterminal
//! parameters.
//!
//! Every spine node gets a set of abstract values `(X, j)` — "nonterminal X
//! still missing its binders from index j on". Applying an argument to such
//! a value records the argument as flowing into parameter j of X and
//! advances to `(X, j+1)`; once all binders are consumed the value continues
//! through X's rule body (this resolves over-application). A parameter's
//! value is the union of the values of everything flowing into it. The whole
//! thing is a monotone fixpoint over two finite maps.
//!
//! The result is an over-approximation: it never misses a flow, so using it
//! to restrict which occurrences are typed only removes derivations that no
//! derivation of the start symbol could use.

use crate::scheme::Scheme;
use crate::term::{NtId, TermId, TermNode};
use std::collections::{BTreeMap, BTreeSet};

/// A partially applied nonterminal: binders from index `1` on are still
/// missing.
pub type FlowVal = (NtId, u32);

#[derive(Debug, Default, Clone)]
pub struct FlowAnalysis {
    /// Abstract value of every spine node.
    pub node_vals: BTreeMap<TermId, BTreeSet<FlowVal>>,
    /// Terms that may flow into parameter `i` (0-based) of a nonterminal.
    pub flows: BTreeMap<(NtId, u32), BTreeSet<TermId>>,
}

impl FlowAnalysis {
    pub fn flows_into(&self, nt: NtId, param: u32) -> BTreeSet<TermId> {
        self.flows.get(&(nt, param)).cloned().unwrap_or_default()
    }

    /// Every term that flows into some parameter — the occurrences the
    /// saturation types standalone.
    pub fn occurrences(&self) -> BTreeSet<TermId> {
        self.flows.values().flatten().copied().collect()
    }
}

pub fn analyze(scheme: &Scheme) -> FlowAnalysis {
    let mut fa = FlowAnalysis::default();
    loop {
        let mut changed = false;
        for nt in 0..scheme.nt_count() {
            let body = scheme.body(NtId(nt as u32));
            eval(scheme, &mut fa, body, &mut changed);
        }
        if !changed {
            return fa;
        }
    }
}

fn eval(
    scheme: &Scheme,
    fa: &mut FlowAnalysis,
    t: TermId,
    changed: &mut bool,
) -> BTreeSet<FlowVal> {
    let val: BTreeSet<FlowVal> = match scheme.terms.node(t) {
        TermNode::Const(_) => BTreeSet::new(),
        TermNode::Nt(x) => norm(scheme, fa, x, 0),
        TermNode::Var(v) => {
            let def = scheme.var(v);
            let sources = fa.flows_into(def.owner, def.index);
            let mut out = BTreeSet::new();
            for s in sources {
                if let Some(vals) = fa.node_vals.get(&s) {
                    out.extend(vals.iter().copied());
                }
            }
            out
        }
        TermNode::App(f, a) => {
            let fvals = eval(scheme, fa, f, changed);
            eval(scheme, fa, a, changed);
            let mut out = BTreeSet::new();
            for (x, j) in fvals {
                let entry = fa.flows.entry((x, j)).or_default();
                if entry.insert(a) {
                    *changed = true;
                }
                out.extend(norm(scheme, fa, x, j + 1));
            }
            out
        }
        TermNode::Abs(_, _) => unreachable!("rule bodies are applicative"),
    };
    let entry = fa.node_vals.entry(t).or_default();
    if *entry != val {
        *changed = true;
        *entry = val.clone();
    }
    val
}

/// `(X, j)` while binders remain; past the last binder the value flows out
/// of X's rule body.
fn norm(scheme: &Scheme, fa: &FlowAnalysis, x: NtId, j: u32) -> BTreeSet<FlowVal> {
    if (j as usize) < scheme.params(x).len() {
        BTreeSet::from([(x, j)])
    } else {
        fa.node_vals.get(&scheme.body(x)).cloned().unwrap_or_default()
    }
}
