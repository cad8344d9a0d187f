//! Two reference implementations used to cross-check the engine.
//!
//! (a) Bounded expansion of the generated tree, measuring how many of each
//!     letter the best finite branch collects at each depth — a semi-decision
//!     procedure for unboundedness that can confirm a verdict but never
//!     refute one.
//! (b) A naive saturator that enumerates each parameter's full type space up
//!     front and re-types every rule until fixpoint — no flow analysis, no
//!     demand typing, no incremental triggers — giving the literal least
//!     fixpoint to compare tables and verdicts against.
//!
//! Expansion works on interned, lambda-free runtime terms in spine form, so
//! duplicated arguments share one node and trees that print exponentially
//! stay polynomial as DAGs. Branch profiles are computed by a Pareto
//! antichain sweep over that DAG.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::Instant;

use crate::saturation::BindingTable;
use crate::scheme::Scheme;
use crate::term::{ConstId, NtId, TermId, TermNode, VarId};
use crate::types::{enumerate_types, Letters, ProdSet, TyInterner, ValueVec};
use crate::typing::{type_rule, Marker, PairSource, TableView};
use crate::verdict::{build_graph, decide, Verdict};

/// Rule unfoldings allowed while normalizing one node's head before the node
/// is declared divergent. Far above anything a finite head needs here; the
/// cycle check below catches the common divergences long before the budget.
const HEAD_STEP_BUDGET: u32 = 10_000;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct RId(u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum RHead {
    Const(ConstId),
    Nt(NtId),
}

/// Interned runtime terms: a head applied to arguments, no lambdas.
#[derive(Default)]
struct RArena {
    nodes: Vec<(RHead, Vec<RId>)>,
    memo: HashMap<(RHead, Vec<RId>), RId>,
}

impl RArena {
    fn intern(&mut self, head: RHead, args: Vec<RId>) -> RId {
        if let Some(&id) = self.memo.get(&(head, args.clone())) {
            return id;
        }
        let id = RId(self.nodes.len() as u32);
        self.nodes.push((head, args.clone()));
        self.memo.insert((head, args), id);
        id
    }
}

/// A finite approximation of the generated tree. Nodes are interned, so
/// equal subtrees share an id and structural operations stay linear in the
/// DAG. `omega` labels both genuine divergence and the cut at the budget.
#[derive(Clone, Debug)]
pub struct ApproxTree {
    nodes: Vec<(ConstId, Vec<u32>)>,
    root: u32,
    /// The depth budget the tree was expanded (or restricted) to.
    pub depth: u32,
}

impl ApproxTree {
    /// Textual form like `br(c, a(omega))`. Expands sharing — use on small
    /// trees only.
    pub fn render(&self, scheme: &Scheme) -> String {
        fn go(t: &ApproxTree, scheme: &Scheme, n: u32, out: &mut String) {
            let (label, kids) = &t.nodes[n as usize];
            out.push_str(&scheme.terminal(*label).name);
            if !kids.is_empty() {
                out.push('(');
                for (i, &k) in kids.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    go(t, scheme, k, out);
                }
                out.push(')');
            }
        }
        let mut out = String::new();
        go(self, scheme, self.root, &mut out);
        out
    }
}

/// Expansion machinery shared across depths: one term arena, one tree arena,
/// memoized head normalization and memoized per-depth expansion.
pub struct Expander<'a> {
    scheme: &'a Scheme,
    rterms: RArena,
    start: RId,
    whnf_memo: HashMap<RId, Option<(ConstId, Vec<RId>)>>,
    tree_nodes: Vec<(ConstId, Vec<u32>)>,
    tree_memo: HashMap<(ConstId, Vec<u32>), u32>,
    expand_memo: HashMap<(RId, u32), u32>,
    omega_leaf: u32,
}

impl<'a> Expander<'a> {
    pub fn new(scheme: &'a Scheme) -> Self {
        let mut rterms = RArena::default();
        let start = rterms.intern(RHead::Nt(scheme.start), Vec::new());
        let mut ex = Expander {
            scheme,
            rterms,
            start,
            whnf_memo: HashMap::new(),
            tree_nodes: Vec::new(),
            tree_memo: HashMap::new(),
            expand_memo: HashMap::new(),
            omega_leaf: 0,
        };
        ex.omega_leaf = ex.intern_tree(scheme.omega, Vec::new());
        ex
    }

    fn intern_tree(&mut self, label: ConstId, kids: Vec<u32>) -> u32 {
        if let Some(&id) = self.tree_memo.get(&(label, kids.clone())) {
            return id;
        }
        let id = self.tree_nodes.len() as u32;
        self.tree_nodes.push((label, kids.clone()));
        self.tree_memo.insert((label, kids), id);
        id
    }

    fn from_term(&mut self, t: TermId, env: &HashMap<VarId, RId>) -> RId {
        match self.scheme.terms.node(t) {
            TermNode::Const(c) => self.rterms.intern(RHead::Const(c), Vec::new()),
            TermNode::Nt(x) => self.rterms.intern(RHead::Nt(x), Vec::new()),
            TermNode::Var(v) => env[&v],
            TermNode::App(f, a) => {
                let rf = self.from_term(f, env);
                let ra = self.from_term(a, env);
                let (head, mut args) = self.rterms.nodes[rf.0 as usize].clone();
                args.push(ra);
                self.rterms.intern(head, args)
            }
            TermNode::Abs(..) => unreachable!("rule bodies are lambda-free"),
        }
    }

    /// Unfold rules at the head until a terminal appears; `None` is omega
    /// (the head revisits a term or exhausts the step budget).
    fn whnf(&mut self, id: RId) -> Option<(ConstId, Vec<RId>)> {
        if let Some(hit) = self.whnf_memo.get(&id) {
            return hit.clone();
        }
        let mut cur = id;
        let mut seen = HashSet::from([cur]);
        let mut result = None;
        for _ in 0..HEAD_STEP_BUDGET {
            let (head, args) = self.rterms.nodes[cur.0 as usize].clone();
            match head {
                RHead::Const(c) => {
                    result = Some((c, args));
                    break;
                }
                RHead::Nt(x) => {
                    let params = self.scheme.params(x).to_vec();
                    debug_assert!(
                        args.len() >= params.len(),
                        "head nonterminal under-applied in a base-sorted term"
                    );
                    let env: HashMap<VarId, RId> =
                        params.iter().copied().zip(args.iter().copied()).collect();
                    let body = self.from_term(self.scheme.body(x), &env);
                    let rest = &args[params.len()..];
                    cur = if rest.is_empty() {
                        body
                    } else {
                        let (bh, mut bargs) = self.rterms.nodes[body.0 as usize].clone();
                        bargs.extend_from_slice(rest);
                        self.rterms.intern(bh, bargs)
                    };
                    if !seen.insert(cur) {
                        break;
                    }
                }
            }
        }
        self.whnf_memo.insert(id, result.clone());
        result
    }

    fn expand_node(&mut self, id: RId, remaining: u32) -> u32 {
        if remaining == 0 {
            return self.omega_leaf;
        }
        if let Some(&n) = self.expand_memo.get(&(id, remaining)) {
            return n;
        }
        let node = match self.whnf(id) {
            None => self.omega_leaf,
            Some((c, args)) => {
                debug_assert_eq!(args.len() as u32, self.scheme.terminal(c).arity);
                let kids: Vec<u32> = args
                    .iter()
                    .map(|&a| self.expand_node(a, remaining - 1))
                    .collect();
                self.intern_tree(c, kids)
            }
        };
        self.expand_memo.insert((id, remaining), node);
        node
    }

    /// Expand the start symbol to the given depth; returns a node in the
    /// shared tree arena.
    pub fn expand_root(&mut self, depth: u32) -> u32 {
        let start = self.start;
        self.expand_node(start, depth)
    }

    /// Best min-letter count over finite branches below `node`; `None` when
    /// every branch is cut by omega.
    pub fn profile(&self, letters: &Letters, node: u32) -> Option<u32> {
        let chi = chi_table(self.scheme, letters);
        let mut memo: HashMap<u32, Vec<ValueVec>> = HashMap::new();
        let antichain = branch_antichain(
            &self.tree_nodes,
            self.scheme.omega,
            &chi,
            letters,
            &mut memo,
            node,
        );
        best_min(&antichain)
    }
}

/// χ-vector per terminal: 1 at the terminal's own letter if it is one of the
/// run's letters, importance taken from `letters` (the CLI may override the
/// scheme's declaration).
fn chi_table(scheme: &Scheme, letters: &Letters) -> Vec<ValueVec> {
    scheme
        .terminals
        .iter()
        .map(|t| match letters.index(&t.name) {
            Some(i) => ValueVec::chi(ProdSet::singleton(i), letters),
            None => ValueVec::zero(letters),
        })
        .collect()
}

/// Pareto-maximal letter-count vectors over finite branches of the subtree.
fn branch_antichain(
    nodes: &[(ConstId, Vec<u32>)],
    omega: ConstId,
    chi: &[ValueVec],
    letters: &Letters,
    memo: &mut HashMap<u32, Vec<ValueVec>>,
    n: u32,
) -> Vec<ValueVec> {
    if let Some(hit) = memo.get(&n) {
        return hit.clone();
    }
    let (label, kids) = &nodes[n as usize];
    let own = &chi[label.0 as usize];
    let result = if *label == omega {
        Vec::new()
    } else if kids.is_empty() {
        vec![own.clone()]
    } else {
        let mut acc: Vec<ValueVec> = Vec::new();
        for &k in kids {
            for v in branch_antichain(nodes, omega, chi, letters, memo, k) {
                let w = v.add(own);
                if acc.iter().any(|u| u.dominates(&w)) {
                    continue;
                }
                acc.retain(|u| !w.dominates(u));
                acc.push(w);
            }
        }
        acc
    };
    memo.insert(n, result.clone());
    result
}

fn best_min(antichain: &[ValueVec]) -> Option<u32> {
    antichain
        .iter()
        .map(|v| v.0.iter().copied().min().unwrap_or(0))
        .max()
}

/// Expand the start symbol's tree to the given node depth.
pub fn expand_tree(scheme: &Scheme, depth: u32) -> ApproxTree {
    let mut ex = Expander::new(scheme);
    let root = ex.expand_root(depth);
    ApproxTree { nodes: ex.tree_nodes, root, depth }
}

/// Cut a tree down to a depth budget, replacing deeper nodes with omega.
pub fn restrict_tree(scheme: &Scheme, t: &ApproxTree, depth: u32) -> ApproxTree {
    struct St<'b> {
        src: &'b [(ConstId, Vec<u32>)],
        nodes: Vec<(ConstId, Vec<u32>)>,
        intern: HashMap<(ConstId, Vec<u32>), u32>,
        memo: HashMap<(u32, u32), u32>,
        omega: ConstId,
    }
    impl St<'_> {
        fn intern(&mut self, label: ConstId, kids: Vec<u32>) -> u32 {
            if let Some(&id) = self.intern.get(&(label, kids.clone())) {
                return id;
            }
            let id = self.nodes.len() as u32;
            self.nodes.push((label, kids.clone()));
            self.intern.insert((label, kids), id);
            id
        }
        fn go(&mut self, n: u32, remaining: u32) -> u32 {
            if remaining == 0 {
                return self.intern(self.omega, Vec::new());
            }
            if let Some(&id) = self.memo.get(&(n, remaining)) {
                return id;
            }
            let (label, kids) = self.src[n as usize].clone();
            let kids: Vec<u32> = kids.iter().map(|&k| self.go(k, remaining - 1)).collect();
            let id = self.intern(label, kids);
            self.memo.insert((n, remaining), id);
            id
        }
    }
    let mut st = St {
        src: &t.nodes,
        nodes: Vec::new(),
        intern: HashMap::new(),
        memo: HashMap::new(),
        omega: scheme.omega,
    };
    let root = st.go(t.root, depth);
    ApproxTree { nodes: st.nodes, root, depth: depth.min(t.depth) }
}

/// Structural equality across arenas, linear in the shared DAGs.
pub fn tree_eq(a: &ApproxTree, b: &ApproxTree) -> bool {
    fn go(
        a: &ApproxTree,
        na: u32,
        b: &ApproxTree,
        nb: u32,
        seen: &mut HashSet<(u32, u32)>,
    ) -> bool {
        if !seen.insert((na, nb)) {
            return true;
        }
        let (la, ka) = &a.nodes[na as usize];
        let (lb, kb) = &b.nodes[nb as usize];
        la == lb
            && ka.len() == kb.len()
            && ka.iter().zip(kb).all(|(&x, &y)| go(a, x, b, y, seen))
    }
    go(a, a.root, b, b.root, &mut HashSet::new())
}

/// Letter profile of one expansion depth: the best min-letter count over
/// finite branches, `None` when no branch escapes omega.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BranchProfile {
    pub depth: u32,
    pub f: Option<u32>,
}

/// Profile of a materialized tree.
pub fn branch_profile(scheme: &Scheme, letters: &Letters, t: &ApproxTree) -> BranchProfile {
    let chi = chi_table(scheme, letters);
    let mut memo = HashMap::new();
    let antichain =
        branch_antichain(&t.nodes, scheme.omega, &chi, letters, &mut memo, t.root);
    BranchProfile { depth: t.depth, f: best_min(&antichain) }
}

/// What an expansion sweep found. Confirmation means some depth's best
/// finite branch carried at least `threshold` of every letter; the sweep can
/// never refute unboundedness.
#[derive(Clone, Debug)]
pub struct Evidence {
    pub confirmed: bool,
    /// Best min-letter count seen across the sweep.
    pub max_f: u32,
    /// Depth at which the threshold was reached, or the budget.
    pub depth: u32,
    /// One profile per swept depth, for CSV dumps.
    pub profiles: Vec<BranchProfile>,
}

/// Sweep depths 1..=budget, stopping early once the threshold is reached.
pub fn oracle_unbounded_evidence(
    scheme: &Scheme,
    letters: &Letters,
    depth_budget: u32,
    threshold: u32,
) -> Evidence {
    let mut ex = Expander::new(scheme);
    let mut profiles = Vec::new();
    let mut max_f = 0;
    let mut confirmed = false;
    let mut depth = depth_budget;
    for d in 1..=depth_budget {
        let root = ex.expand_root(d);
        let f = ex.profile(letters, root);
        profiles.push(BranchProfile { depth: d, f });
        if let Some(v) = f {
            max_f = max_f.max(v);
            if v >= threshold {
                confirmed = true;
                depth = d;
                break;
            }
        }
    }
    Evidence { confirmed, max_f, depth, profiles }
}

/// The naive reference saturator's output: its own interner and table.
pub struct NaiveSaturation {
    pub tys: TyInterner,
    pub table: BindingTable,
}

/// Enumerate every (flag, type) pair for every parameter sort up front, then
/// re-type all rules against the growing binding set until nothing changes.
/// Exact but doubly exponential — refuses schemes above order 2 unless
/// overridden.
pub fn naive_saturate(
    scheme: &Scheme,
    letters: &Letters,
    allow_high_order: bool,
    deadline: Option<Instant>,
) -> Result<NaiveSaturation, String> {
    let order = scheme.order();
    if order > 2 && !allow_high_order {
        return Err(format!(
            "naive saturation refused: scheme order {order} exceeds 2 and the full \
             type space is doubly exponential; pass the override to force it"
        ));
    }
    let mut tys = TyInterner::new();
    let mut table = BindingTable::default();
    for nt in 0..scheme.nt_count() {
        let x = NtId(nt as u32);
        for &p in scheme.params(x) {
            let mut pairs = BTreeSet::new();
            for ty in enumerate_types(&mut tys, &scheme.sorts, scheme.var_sort(p), letters) {
                for set in ProdSet::all(letters) {
                    pairs.insert((set, ty));
                }
            }
            table.candidates.insert(p, pairs);
        }
    }
    let mut steps = 0u64;
    loop {
        if let Some(dl) = deadline {
            if Instant::now() >= dl {
                return Err("naive saturation exceeded the time limit".into());
            }
        }
        let mut changed = false;
        for nt in 0..scheme.nt_count() {
            let x = NtId(nt as u32);
            let derivs = {
                let view = TableView {
                    bindings: &table.bindings,
                    candidates: &table.candidates,
                };
                type_rule(
                    scheme,
                    letters,
                    &mut tys,
                    view,
                    PairSource::Candidates,
                    Marker::None,
                    x,
                    &mut steps,
                )
            };
            for d in derivs {
                if table.bindings.entry(x).or_default().insert((d.prod, d.ty)) {
                    changed = true;
                }
                table.insert_record((x, d.prod, d.ty), d.asms, d.value);
            }
        }
        if !changed {
            break;
        }
    }
    Ok(NaiveSaturation { tys, table })
}

/// The verdict the naive table yields, through the same graph criterion.
pub fn naive_verdict(scheme: &Scheme, letters: &Letters, n: &NaiveSaturation) -> Verdict {
    let graph = build_graph(&n.table);
    decide(scheme, letters, &n.tys, &graph)
}
