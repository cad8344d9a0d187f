//! Applicative terms over terminals, variables and nonterminals.
//!
//! Terms live in a per-scheme arena; every syntactic position gets its own
//! node, so a `TermId` doubles as an occurrence identifier for the flow
//! analysis. Rule right-hand sides are stored with their λ-binders as `Abs`
//! nodes wrapping a lambda-free body.

use crate::scheme::Scheme;
use crate::sort::SortId;
use std::collections::BTreeSet;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TermId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ConstId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VarId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NtId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TermNode {
    Const(ConstId),
    Var(VarId),
    Nt(NtId),
    App(TermId, TermId),
    Abs(VarId, TermId),
}

/// Arena of term nodes plus the sort of every node.
#[derive(Default)]
pub struct TermStore {
    nodes: Vec<TermNode>,
    sorts: Vec<Option<SortId>>,
}

impl TermStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, node: TermNode) -> TermId {
        let id = TermId(self.nodes.len() as u32);
        self.nodes.push(node);
        self.sorts.push(None);
        id
    }

    pub fn node(&self, id: TermId) -> TermNode {
        self.nodes[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn set_sort(&mut self, id: TermId, sort: SortId) {
        self.sorts[id.0 as usize] = Some(sort);
    }

    /// Sort of a node; panics if sorts have not been assigned yet.
    pub fn sort(&self, id: TermId) -> SortId {
        self.sorts[id.0 as usize].expect("term sort not assigned")
    }

    /// Decomposes `H N₁ … Nₘ` into head `H` (not an application) and the
    /// argument list in left-to-right order.
    pub fn spine(&self, id: TermId) -> (TermId, Vec<TermId>) {
        let mut args = Vec::new();
        let mut cur = id;
        while let TermNode::App(f, a) = self.node(cur) {
            args.push(a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    /// All nodes of the subterm rooted at `id`, including `id` itself.
    pub fn subterms(&self, id: TermId) -> Vec<TermId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(t) = stack.pop() {
            out.push(t);
            match self.node(t) {
                TermNode::App(f, a) => {
                    stack.push(a);
                    stack.push(f);
                }
                TermNode::Abs(_, b) => stack.push(b),
                _ => {}
            }
        }
        out
    }

    /// Free variables of a subterm (nonterminals are not variables here).
    pub fn free_vars(&self, id: TermId) -> BTreeSet<VarId> {
        fn go(ts: &TermStore, id: TermId, bound: &mut Vec<VarId>, out: &mut BTreeSet<VarId>) {
            match ts.node(id) {
                TermNode::Var(v) => {
                    if !bound.contains(&v) {
                        out.insert(v);
                    }
                }
                TermNode::App(f, a) => {
                    go(ts, f, bound, out);
                    go(ts, a, bound, out);
                }
                TermNode::Abs(v, b) => {
                    bound.push(v);
                    go(ts, b, bound, out);
                    bound.pop();
                }
                _ => {}
            }
        }
        let mut out = BTreeSet::new();
        go(self, id, &mut Vec::new(), &mut out);
        out
    }

    /// Whether the subterm mentions the nonterminal anywhere.
    pub fn mentions_nt(&self, id: TermId, nt: NtId) -> bool {
        self.subterms(id).iter().any(|&t| matches!(self.node(t), TermNode::Nt(n) if n == nt))
    }

    /// Whether the subterm mentions the variable anywhere (free or bound).
    pub fn mentions_var(&self, id: TermId, v: VarId) -> bool {
        self.subterms(id)
            .iter()
            .any(|&t| matches!(self.node(t), TermNode::Var(w) if w == v))
    }
}

/// Complexity of a term: the maximal order among subterms that are *not* of
/// the form `a M₁ … Mₖ` with `a` a terminal (k ≥ 0), or 0 if every subterm
/// has that form.
pub fn term_complexity(scheme: &Scheme, id: TermId) -> u32 {
    let ts = &scheme.terms;
    let mut max = 0;
    for t in ts.subterms(id) {
        let (head, _) = ts.spine(t);
        if matches!(ts.node(head), TermNode::Const(_)) {
            continue;
        }
        max = max.max(scheme.sorts.order(ts.sort(t)));
    }
    max
}

/// Superficial safety: `ord(M) ≤ ord(x)` for every free variable `x` of `M`.
/// Nonterminals count as constants, not as free variables.
pub fn is_superficially_safe(scheme: &Scheme, id: TermId) -> bool {
    let ord_m = scheme.sorts.order(scheme.terms.sort(id));
    scheme
        .terms
        .free_vars(id)
        .iter()
        .all(|&v| scheme.sorts.order(scheme.var_sort(v)) >= ord_m)
}

/// Safety: the term is superficially safe and for every subterm of the form
/// `K L₁ … Lₖ` (`K` not an application, k ≥ 1), each of `K, L₁, …, Lₖ` is
/// superficially safe. Checking maximal spines covers every prefix
/// decomposition, since a prefix's members are a subset of the spine's.
pub fn is_safe(scheme: &Scheme, id: TermId) -> bool {
    if !is_superficially_safe(scheme, id) {
        return false;
    }
    let ts = &scheme.terms;
    // Maximal application nodes: App nodes that are not the function part of
    // a parent App.
    let mut fun_position: BTreeSet<TermId> = BTreeSet::new();
    for t in ts.subterms(id) {
        if let TermNode::App(f, _) = ts.node(t) {
            fun_position.insert(f);
        }
    }
    for t in ts.subterms(id) {
        if !matches!(ts.node(t), TermNode::App(..)) || fun_position.contains(&t) {
            continue;
        }
        let (head, args) = ts.spine(t);
        if !is_superficially_safe(scheme, head) {
            return false;
        }
        if args.iter().any(|&a| !is_superficially_safe(scheme, a)) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::SchemeBuilder;

    // λy:(o→o). λz:o. y (y (a z)) — the running example term, wrapped as a
    // rule so it lives in a scheme.
    fn worked_example() -> (Scheme, TermId) {
        let mut b = SchemeBuilder::new();
        let a = b.terminal("a", 1);
        let c = b.terminal("c", 0);
        let o = b.base();
        let oo = b.arrow(o, o);
        let w_sort = b.arrows(&[oo, o], o);
        let s = b.nonterminal("S", o);
        let w = b.nonterminal("W", w_sort);
        let y = b.param(w, "y", oo);
        let z = b.param(w, "z", o);
        let body = {
            let ta = b.tconst(a);
            let tz = b.tvar(z);
            let az = b.tapp(ta, tz);
            let ty = b.tvar(y);
            let yaz = b.tapp(ty, az);
            let ty2 = b.tvar(y);
            b.tapp(ty2, yaz)
        };
        b.set_body(w, vec![y, z], body);
        let s_body = {
            let ta = b.tconst(a);
            let tc = b.tconst(c);
            b.tapp(ta, tc)
        };
        b.set_body(s, vec![], s_body);
        let scheme = b.finish("S").expect("valid scheme");
        let rule = scheme.rule_term(scheme.nt_by_name("W").unwrap());
        (scheme, rule)
    }

    #[test]
    fn complexity_of_worked_example_is_two() {
        let (scheme, rule) = worked_example();
        assert_eq!(term_complexity(&scheme, rule), 2);
    }

    #[test]
    fn complexity_of_constant_tree_is_zero() {
        let (scheme, _) = worked_example();
        let s = scheme.nt_by_name("S").unwrap();
        // a c: every subterm is constant-headed.
        assert_eq!(term_complexity(&scheme, scheme.body(s)), 0);
    }

    #[test]
    fn worked_example_is_safe() {
        let (scheme, rule) = worked_example();
        assert!(is_superficially_safe(&scheme, rule));
        assert!(is_safe(&scheme, rule));
    }
}
