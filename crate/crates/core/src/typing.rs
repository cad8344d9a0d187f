//! The derivation engine: enumerating type judgments `Γ ⊢ M : (v, τ)` for
//! applicative terms.
//!
//! Judgments are produced in synthesis mode — all derivable (type, judgment)
//! pairs for a subterm — with argument positions checked against the pairs
//! demanded by the head's type. The rules:
//!
//! * variables are axioms `x:(A,σ) ⊢ x : (0, σ)`, with candidate pairs
//!   taken either from the saturation's flow-fed tables or, in demand mode,
//!   from the application shape itself;
//! * a nonterminal is used as a priced assumption `∅ ⊢ Y : (χ_A, σ)`, one
//!   per table binding (A, σ), recorded for the derivation graph;
//! * a terminal of arity r derives exactly one child (the other positions
//!   are ⊤ and their subterms are not derived at all) and adds its
//!   characteristic vector when it is an important letter;
//! * at applications the environments union as s-multisets and the value
//!   gains the duplication factor — per letter, the number of flagged
//!   bindings lost to the capped union.
//!
//! A judgment's flag set is `{a | v(a) > 0 or some environment binding is
//! flagged with a}`; the (@) rule demands that each argument copy's flag set
//! equal the productivity set written in the head's argument pair.

use crate::scheme::Scheme;
use crate::term::{NtId, TermId, TermNode, VarId};
use crate::types::{
    flag_of, index_multisets_exact, smultiset_union, Letters, ProdSet, TyEnv, TyId, TyInterner,
    TyPair, ValueVec,
};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

/// A nonterminal binding used as an assumption: (nonterminal, productivity
/// set, type).
pub type AsmKey = (NtId, ProdSet, TyId);

/// Assumptions used by a derivation, with usage counts.
pub type AsmMultiset = BTreeMap<AsmKey, u32>;

/// One derivation for a (term, type) target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgment {
    pub env: TyEnv,
    pub asms: AsmMultiset,
    pub value: ValueVec,
    /// Whether the run's marker item (new binding or new candidate pair)
    /// occurs in this derivation. Constrained re-typings keep only marked
    /// derivations; everything else was already found earlier.
    pub used: bool,
}

impl Judgment {
    pub fn leaf(value: ValueVec) -> Self {
        Judgment { env: TyEnv::empty(), asms: AsmMultiset::new(), value, used: false }
    }

    /// Flag set: letters with positive value or a flagged environment
    /// binding.
    pub fn flag(&self) -> ProdSet {
        flag_of(&self.value).union(self.env.flagged_letters())
    }
}

/// Where variable candidate pairs come from.
///
/// `Candidates` reads the flow-fed per-parameter tables. `Demand` types a
/// rule body without any tables: argument-position variables take exactly
/// the pair the application demands, and variables directly under a
/// terminal get every productivity set over the atom. Demand mode is only
/// sound when no parameter occurs in head position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairSource {
    Candidates,
    Demand,
}

/// The item a constrained re-typing must use at least once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Marker {
    None,
    Binding(AsmKey),
    Pair(VarId, TyPair),
}

/// Read-only view of the saturation state the engine consults.
#[derive(Clone, Copy)]
pub struct TableView<'a> {
    /// Derived bindings per nonterminal.
    pub bindings: &'a BTreeMap<NtId, BTreeSet<TyPair>>,
    /// Candidate pairs per rule parameter.
    pub candidates: &'a BTreeMap<VarId, BTreeSet<TyPair>>,
}

/// A rule derivation, ready to become a table binding and graph record:
/// `∅ ⊢ R(X) : (value, ty)` with productivity set `prod` and the assumptions
/// it used.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleDeriv {
    pub prod: ProdSet,
    pub ty: TyId,
    pub asms: AsmMultiset,
    pub value: ValueVec,
}

pub struct Engine<'a> {
    pub scheme: &'a Scheme,
    pub letters: &'a Letters,
    pub tys: &'a mut TyInterner,
    pub view: TableView<'a>,
    pub source: PairSource,
    pub marker: Marker,
    memo: HashMap<TermId, Rc<Vec<(TyId, Judgment)>>>,
    pub steps: u64,
}

impl<'a> Engine<'a> {
    pub fn new(
        scheme: &'a Scheme,
        letters: &'a Letters,
        tys: &'a mut TyInterner,
        view: TableView<'a>,
        source: PairSource,
        marker: Marker,
    ) -> Self {
        Engine { scheme, letters, tys, view, source, marker, memo: HashMap::new(), steps: 0 }
    }

    /// All derivable (type, judgment) pairs for a term, collapsed to the
    /// per-(type, env, assumptions, flag) value antichain.
    pub fn synth(&mut self, t: TermId) -> Rc<Vec<(TyId, Judgment)>> {
        if let Some(r) = self.memo.get(&t) {
            return r.clone();
        }
        self.steps += 1;
        let raw = self.compute(t);
        let out = Rc::new(collapse(raw));
        self.memo.insert(t, out.clone());
        out
    }

    /// Derivations of `t` at exactly the given pair: type matches and the
    /// judgment's flag set equals the pair's productivity set.
    pub fn check_pair(&mut self, t: TermId, pair: TyPair) -> Vec<Judgment> {
        if let TermNode::Var(x) = self.scheme.terms.node(t) {
            return match self.source {
                PairSource::Demand => vec![self.axiom(x, pair)],
                PairSource::Candidates => {
                    if self.candidates_of(x).contains(&pair) {
                        vec![self.axiom(x, pair)]
                    } else {
                        Vec::new()
                    }
                }
            };
        }
        self.synth(t)
            .iter()
            .filter(|(ty, j)| *ty == pair.1 && j.flag() == pair.0)
            .map(|(_, j)| j.clone())
            .collect()
    }

    fn candidates_of(&self, x: VarId) -> BTreeSet<TyPair> {
        self.view.candidates.get(&x).cloned().unwrap_or_default()
    }

    fn axiom(&self, x: VarId, pair: TyPair) -> Judgment {
        Judgment {
            env: TyEnv::singleton(x, pair),
            asms: AsmMultiset::new(),
            value: ValueVec::zero(self.letters),
            used: self.marker == Marker::Pair(x, pair),
        }
    }

    fn compute(&mut self, t: TermId) -> Vec<(TyId, Judgment)> {
        let (head, args) = self.scheme.terms.spine(t);
        match self.scheme.terms.node(head) {
            TermNode::Const(c) => self.constant_spine(c, &args),
            TermNode::Abs(_, _) => unreachable!("rule bodies are applicative"),
            TermNode::Var(x) if args.is_empty() => self.var_leaf(x),
            TermNode::Nt(y) if args.is_empty() => self.nt_leaf(y),
            _ => match self.scheme.terms.node(t) {
                TermNode::App(f, a) => self.apply(f, a),
                _ => unreachable!("non-leaf spine node is an application"),
            },
        }
    }

    fn var_leaf(&mut self, x: VarId) -> Vec<(TyId, Judgment)> {
        let pairs: Vec<TyPair> = match self.source {
            PairSource::Candidates => self.candidates_of(x).into_iter().collect(),
            PairSource::Demand => {
                // A variable can stand bare only directly under a terminal,
                // so its type is the atom; the productivity set is free.
                assert!(
                    matches!(
                        self.scheme.sorts.get(self.scheme.var_sort(x)),
                        crate::sort::Sort::Base
                    ),
                    "demand mode reached a bare non-base variable"
                );
                ProdSet::all(self.letters).map(|p| (p, self.tys.atom())).collect()
            }
        };
        pairs.into_iter().map(|p| (p.1, self.axiom(x, p))).collect()
    }

    fn nt_leaf(&mut self, y: NtId) -> Vec<(TyId, Judgment)> {
        let Some(bindings) = self.view.bindings.get(&y) else {
            return Vec::new();
        };
        bindings
            .iter()
            .map(|&(a, ty)| {
                let key = (y, a, ty);
                let mut asms = AsmMultiset::new();
                asms.insert(key, 1);
                let j = Judgment {
                    env: TyEnv::empty(),
                    asms,
                    value: ValueVec::chi(a, self.letters),
                    used: self.marker == Marker::Binding(key),
                };
                (ty, j)
            })
            .collect()
    }

    /// A terminal-headed spine `a M₁ … Mₖ` where the terminal has arity
    /// r ≥ k. Exactly one position j ∈ 1..=r carries an (A, r) pair: if
    /// j ≤ k the child Mⱼ is derived and A is its flag set; if j > k the
    /// position stays in the residual type with A free. All other positions
    /// are ⊤ and their subterms are not derived.
    fn constant_spine(&mut self, c: crate::term::ConstId, args: &[TermId]) -> Vec<(TyId, Judgment)> {
        if c == self.scheme.omega {
            return Vec::new();
        }
        let arity = self.scheme.terminal(c).arity as usize;
        let k = args.len();
        debug_assert!(k <= arity, "over-applied terminal");
        let base = match self.letters.index(&self.scheme.terminal(c).name) {
            Some(i) => ValueVec::chi(ProdSet::singleton(i), self.letters),
            None => ValueVec::zero(self.letters),
        };
        if arity == 0 {
            return vec![(self.tys.atom(), Judgment::leaf(base))];
        }
        let atom = self.tys.atom();
        let mut out = Vec::new();
        for j in 1..=arity {
            if j <= k {
                // Residual positions k+1..=r are all ⊤.
                let res_ty = self.tops(arity - k);
                for (ty, judgment) in self.synth(args[j - 1]).iter() {
                    if *ty != atom {
                        continue;
                    }
                    let mut out_j = judgment.clone();
                    out_j.value.add_assign(&base);
                    out.push((res_ty, out_j));
                }
            } else {
                // The derived child lies beyond the applied arguments; its
                // productivity set is unconstrained here and will be pinned
                // by whatever consumes the residual type.
                for a in ProdSet::all(self.letters) {
                    let multisets: Vec<Vec<TyPair>> = (k + 1..=arity)
                        .map(|pos| if pos == j { vec![(a, atom)] } else { Vec::new() })
                        .collect();
                    let res_ty = self.tys.arrows(&multisets, atom);
                    out.push((res_ty, Judgment::leaf(base.clone())));
                }
            }
        }
        out
    }

    /// `⊤ → … → ⊤ → r` with n tops.
    fn tops(&mut self, n: usize) -> TyId {
        let atom = self.tys.atom();
        let multisets = vec![Vec::new(); n];
        self.tys.arrows(&multisets, atom)
    }

    fn apply(&mut self, f: TermId, a: TermId) -> Vec<(TyId, Judgment)> {
        let heads = self.synth(f);
        let mut out = Vec::new();
        for (head_ty, head_j) in heads.iter() {
            let (argms, res_ty) = {
                let (ms, r) = self
                    .tys
                    .peel(*head_ty)
                    .expect("well-sorted application peels an arrow");
                (ms.to_vec(), r)
            };
            // Group the multiset into distinct pairs with counts.
            let mut groups: Vec<(TyPair, u32)> = Vec::new();
            for p in argms {
                match groups.last_mut() {
                    Some((q, c)) if *q == p => *c += 1,
                    _ => groups.push((p, 1)),
                }
            }
            let mut partials = vec![head_j.clone()];
            for (pair, count) in groups {
                let ds = self.check_pair(a, pair);
                if ds.is_empty() {
                    partials.clear();
                    break;
                }
                let selections = index_multisets_exact(ds.len(), count as usize);
                let mut next = Vec::new();
                for partial in &partials {
                    for sel in &selections {
                        let mut acc = partial.clone();
                        for &i in sel {
                            acc = merge_application(&acc, &ds[i], self.letters);
                            self.steps += 1;
                        }
                        next.push(acc);
                    }
                }
                partials = next;
            }
            for j in partials {
                out.push((res_ty, j));
            }
        }
        out
    }
}

/// Merges one argument-copy derivation into an accumulated application
/// judgment: environments union as s-multisets, assumptions and values add,
/// and the value gains this merge's share of the duplication factor. Folding
/// over all copies telescopes to the flat per-letter duplication factor
/// `Σⱼ|Γⱼ↾a| − |⋃ⱼΓⱼ↾a|`.
pub fn merge_application(acc: &Judgment, copy: &Judgment, letters: &Letters) -> Judgment {
    let env = smultiset_union(&acc.env, &copy.env, letters.cap());
    let mut value = acc.value.add(&copy.value);
    for i in 0..letters.s() {
        let lost = acc.env.count_for_letter(i) + copy.env.count_for_letter(i)
            - env.count_for_letter(i);
        value.0[i] += lost;
    }
    let mut asms = acc.asms.clone();
    for (k, c) in &copy.asms {
        *asms.entry(*k).or_insert(0) += c;
    }
    Judgment { env, asms, value, used: acc.used || copy.used }
}

/// Collapses a raw judgment list: within each (type, env, assumptions, flag
/// support) group only the Pareto-maximal (value, used) entries survive. A
/// dominated entry yields the same binding and a subset of the productive
/// edges everywhere downstream, so dropping it loses nothing.
fn collapse(raw: Vec<(TyId, Judgment)>) -> Vec<(TyId, Judgment)> {
    type Key = (TyId, TyEnv, Vec<(AsmKey, u32)>, ProdSet);
    let mut groups: BTreeMap<Key, Vec<Judgment>> = BTreeMap::new();
    for (ty, j) in raw {
        let key = (
            ty,
            j.env.clone(),
            j.asms.iter().map(|(k, c)| (*k, *c)).collect(),
            flag_of(&j.value),
        );
        let entry = groups.entry(key).or_default();
        if entry
            .iter()
            .any(|kept| kept.value.dominates(&j.value) && kept.used >= j.used)
        {
            continue;
        }
        entry.retain(|kept| !(j.value.dominates(&kept.value) && j.used >= kept.used));
        entry.push(j);
    }
    groups
        .into_iter()
        .flat_map(|((ty, ..), js)| js.into_iter().map(move |j| (ty, j)))
        .collect()
}

/// Types a rule `X x₁…xₙ -> body`: every body derivation whose environment
/// bindings are moved into the type (per parameter, exactly the used pairs)
/// becomes a candidate binding `∅ ⊢ R(X) : (value, T₁→…→Tₙ→τ)` with
/// productivity set `supp(value)`. Under a marker, only derivations using
/// the marked item survive. Results are collapsed per (binding, assumptions)
/// to the value antichain.
pub fn type_rule(
    scheme: &Scheme,
    letters: &Letters,
    tys: &mut TyInterner,
    view: TableView<'_>,
    source: PairSource,
    marker: Marker,
    x: NtId,
    steps: &mut u64,
) -> Vec<RuleDeriv> {
    let constrained = marker != Marker::None;
    let mut eng = Engine::new(scheme, letters, tys, view, source, marker);
    let body = scheme.body(x);
    let params = scheme.params(x).to_vec();
    let derivations = eng.synth(body);
    *steps += eng.steps;
    let mut raw = Vec::new();
    for (ty, j) in derivations.iter() {
        if constrained && !j.used {
            continue;
        }
        let mut multisets: Vec<Vec<TyPair>> = Vec::with_capacity(params.len());
        for &p in &params {
            let mut flat = Vec::new();
            for (pair, count) in j.env.restrict_var(p) {
                for _ in 0..count {
                    flat.push(pair);
                }
            }
            multisets.push(flat);
        }
        debug_assert_eq!(
            j.env.0.iter().map(|(_, c)| *c).sum::<u32>(),
            multisets.iter().map(|m| m.len() as u32).sum::<u32>(),
            "rule body environment mentions a non-parameter variable"
        );
        let full_ty = eng.tys.arrows(&multisets, *ty);
        raw.push(RuleDeriv {
            prod: flag_of(&j.value),
            ty: full_ty,
            asms: j.asms.clone(),
            value: j.value.clone(),
        });
    }
    collapse_records(raw)
}

/// Keeps, per (binding, assumption multiset), only value-antichain maxima.
fn collapse_records(raw: Vec<RuleDeriv>) -> Vec<RuleDeriv> {
    type Key = (ProdSet, TyId, Vec<(AsmKey, u32)>);
    let mut groups: BTreeMap<Key, Vec<RuleDeriv>> = BTreeMap::new();
    for d in raw {
        let key = (d.prod, d.ty, d.asms.iter().map(|(k, c)| (*k, *c)).collect());
        let entry = groups.entry(key).or_default();
        if entry.iter().any(|kept| kept.value.dominates(&d.value)) {
            continue;
        }
        entry.retain(|kept| !d.value.dominates(&kept.value));
        entry.push(d);
    }
    groups.into_values().flatten().collect()
}

/// Types one occurrence standalone and reports the pairs it realizes —
/// (flag set, type) of each derivation. Under a marker, only derivations
/// using the marked item count.
pub fn type_occurrence(
    scheme: &Scheme,
    letters: &Letters,
    tys: &mut TyInterner,
    view: TableView<'_>,
    marker: Marker,
    t: TermId,
    steps: &mut u64,
) -> Vec<TyPair> {
    let constrained = marker != Marker::None;
    let mut eng = Engine::new(scheme, letters, tys, view, PairSource::Candidates, marker);
    let derivations = eng.synth(t);
    *steps += eng.steps;
    let mut out: BTreeSet<TyPair> = BTreeSet::new();
    for (ty, j) in derivations.iter() {
        if constrained && !j.used {
            continue;
        }
        out.insert((j.flag(), *ty));
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::SchemeBuilder;
    use crate::term::VarId;
    use proptest::prelude::*;

    /// S -> c. W y z -> y (y (a z)). with a:1 important, c:0.
    fn worked_scheme() -> Scheme {
        let mut b = SchemeBuilder::new();
        let o = b.base();
        let oo = b.arrow(o, o);
        let w_sort = b.arrows(&[oo, o], o);
        let a = b.terminal("a", 1);
        let c = b.terminal("c", 0);
        let s = b.nonterminal("S", o);
        let w = b.nonterminal("W", w_sort);
        let y = b.param(w, "y", oo);
        let z = b.param(w, "z", o);
        let body_s = b.tconst(c);
        b.set_body(s, vec![], body_s);
        let az = {
            let at = b.tconst(a);
            let zt = b.tvar(z);
            b.tapp(at, zt)
        };
        let y_az = {
            let yt = b.tvar(y);
            b.tapp(yt, az)
        };
        let body_w = {
            let yt = b.tvar(y);
            b.tapp(yt, y_az)
        };
        b.set_body(w, vec![y, z], body_w);
        b.important("a");
        b.finish("S").unwrap()
    }

    struct Fixture {
        scheme: Scheme,
        letters: Letters,
        tys: TyInterner,
        bindings: BTreeMap<NtId, BTreeSet<TyPair>>,
        candidates: BTreeMap<VarId, BTreeSet<TyPair>>,
    }

    /// Candidate tables giving y both the productive and the nonproductive
    /// (pr, r) → r pair and z the productive atom.
    fn fixture() -> Fixture {
        let scheme = worked_scheme();
        let letters = Letters::new(vec!["a".into()]);
        let mut tys = TyInterner::new();
        let atom = tys.atom();
        let pr = ProdSet(1);
        let np = ProdSet(0);
        let pr_arrow = tys.arrow(vec![(pr, atom)], atom);
        let w = scheme.nt_by_name("W").unwrap();
        let y = scheme.params(w)[0];
        let z = scheme.params(w)[1];
        let mut candidates = BTreeMap::new();
        candidates.insert(y, BTreeSet::from([(pr, pr_arrow), (np, pr_arrow)]));
        candidates.insert(z, BTreeSet::from([(pr, atom)]));
        Fixture { scheme, letters, tys, bindings: BTreeMap::new(), candidates }
    }

    fn subterm_values(fx: &mut Fixture, t: TermId) -> Vec<(String, u32)> {
        let view = TableView { bindings: &fx.bindings, candidates: &fx.candidates };
        let mut eng = Engine::new(
            &fx.scheme,
            &fx.letters,
            &mut fx.tys,
            view,
            PairSource::Candidates,
            Marker::None,
        );
        let out = eng.synth(t);
        let mut rows: Vec<(String, u32)> = out
            .iter()
            .map(|(_, j)| (j.env.render(&fx.scheme, eng.tys, &fx.letters), j.value.0[0]))
            .collect();
        rows.sort();
        rows
    }

    #[test]
    fn innermost_application_has_value_one() {
        let mut fx = fixture();
        let w = fx.scheme.nt_by_name("W").unwrap();
        let body = fx.scheme.body(w);
        // body = y (y (a z)); a z is the argument of the inner y.
        let (_, outer_args) = fx.scheme.terms.spine(body);
        let inner = outer_args[0];
        let (_, inner_args) = fx.scheme.terms.spine(inner);
        let az = inner_args[0];
        let rows = subterm_values(&mut fx, az);
        assert_eq!(rows, vec![("{z:(pr:{a}, r)}".to_string(), 1)]);
    }

    #[test]
    fn single_and_double_y_application_values() {
        let mut fx = fixture();
        let w = fx.scheme.nt_by_name("W").unwrap();
        let body = fx.scheme.body(w);
        let (_, outer_args) = fx.scheme.terms.spine(body);
        let inner = outer_args[0]; // y (a z)
        let inner_rows = subterm_values(&mut fx, inner);
        // One y application: value 1 whichever y pair is used.
        assert!(inner_rows.iter().all(|(_, v)| *v == 1), "{inner_rows:?}");
        assert_eq!(inner_rows.len(), 2);

        let body_rows = subterm_values(&mut fx, body);
        // Both y's productive: dupl 1 → value 2. The nonproductive y pair
        // never duplicates: value stays 1. Mixed pairs also stay at 1.
        assert!(body_rows.contains(&("{y:(pr:{a}, (pr:{a}, r) -> r), z:(pr:{a}, r)}".into(), 2)), "{body_rows:?}");
        assert!(body_rows.contains(&("{y:(np, (pr:{a}, r) -> r), z:(pr:{a}, r)}".into(), 1)), "{body_rows:?}");
        assert_eq!(body_rows.len(), 3, "two uniform choices plus the mixed one");
    }

    #[test]
    fn rule_binding_moves_parameters_into_type() {
        let mut fx = fixture();
        let w = fx.scheme.nt_by_name("W").unwrap();
        let view = TableView { bindings: &fx.bindings, candidates: &fx.candidates };
        let mut steps = 0;
        let derivs = type_rule(
            &fx.scheme,
            &fx.letters,
            &mut fx.tys,
            view,
            PairSource::Candidates,
            Marker::None,
            w,
            &mut steps,
        );
        let rendered: BTreeSet<(String, String, u32)> = derivs
            .iter()
            .map(|d| {
                (
                    d.prod.render(&fx.letters),
                    fx.tys.render(d.ty, &fx.letters),
                    d.value.0[0],
                )
            })
            .collect();
        let both_productive = (
            "pr:{a}".to_string(),
            "(pr:{a}, (pr:{a}, r) -> r) -> (pr:{a}, r) -> r".to_string(),
            2,
        );
        let nonproductive_y = (
            "pr:{a}".to_string(),
            "(np, (pr:{a}, r) -> r) -> (pr:{a}, r) -> r".to_string(),
            1,
        );
        assert!(rendered.contains(&both_productive), "{rendered:?}");
        assert!(rendered.contains(&nonproductive_y), "{rendered:?}");
        // No derivation leaves a parameter binding behind or invents pairs.
        assert!(derivs.iter().all(|d| d.asms.is_empty()));
    }

    #[test]
    fn terminal_spine_derives_exactly_one_child() {
        // br c (a c): deriving the left child gives value 0, the right
        // child gives 1; both judgments are closed.
        let mut b = SchemeBuilder::new();
        let o = b.base();
        let a = b.terminal("a", 1);
        let br = b.terminal("br", 2);
        let c = b.terminal("c", 0);
        let s = b.nonterminal("S", o);
        let body = {
            let brt = b.tconst(br);
            let ct = b.tconst(c);
            let at = b.tconst(a);
            let ct2 = b.tconst(c);
            let ac = b.tapp(at, ct2);
            let bc = b.tapp(brt, ct);
            b.tapp(bc, ac)
        };
        b.set_body(s, vec![], body);
        b.important("a");
        let scheme = b.finish("S").unwrap();
        let letters = Letters::new(vec!["a".into()]);
        let mut tys = TyInterner::new();
        let bindings = BTreeMap::new();
        let candidates = BTreeMap::new();
        let view = TableView { bindings: &bindings, candidates: &candidates };
        let mut eng =
            Engine::new(&scheme, &letters, &mut tys, view, PairSource::Candidates, Marker::None);
        let body = scheme.body(scheme.nt_by_name("S").unwrap());
        let out = eng.synth(body);
        let mut values: Vec<u32> = out.iter().map(|(_, j)| j.value.0[0]).collect();
        values.sort();
        assert_eq!(values, vec![0, 1]);
        assert!(out.iter().all(|(_, j)| j.env.is_empty()));
    }

    #[test]
    fn omega_has_no_derivations_but_hides_under_top() {
        // br omega c: the omega child cannot be derived, but choosing the
        // other position leaves it under ⊤.
        let mut b = SchemeBuilder::new();
        let o = b.base();
        let br = b.terminal("br", 2);
        let c = b.terminal("c", 0);
        let s = b.nonterminal("S", o);
        let om = b.omega_const();
        let body = {
            let brt = b.tconst(br);
            let omt = b.tconst(om);
            let ct = b.tconst(c);
            let b1 = b.tapp(brt, omt);
            b.tapp(b1, ct)
        };
        b.set_body(s, vec![], body);
        let scheme = b.finish("S").unwrap();
        let letters = Letters::new(vec![]);
        let mut tys = TyInterner::new();
        let bindings = BTreeMap::new();
        let candidates = BTreeMap::new();
        let view = TableView { bindings: &bindings, candidates: &candidates };
        let mut eng =
            Engine::new(&scheme, &letters, &mut tys, view, PairSource::Candidates, Marker::None);
        let body = scheme.body(scheme.nt_by_name("S").unwrap());
        let out = eng.synth(body);
        assert_eq!(out.len(), 1, "only the c child can be derived");
    }

    fn arb_env() -> impl Strategy<Value = TyEnv> {
        // Environments over three variables, two letters, atom-typed pairs.
        proptest::collection::vec((0u32..3, 0u16..4, 1u32..3), 0..4).prop_map(|entries| {
            let mut env = TyEnv::empty();
            for (var, mask, count) in entries {
                let single = TyEnv(vec![((VarId(var), ProdSet(mask), TyId(0)), count.min(2))]);
                env = smultiset_union(&env, &single, 2);
            }
            env
        })
    }

    proptest! {
        /// Folding binary merges accumulates exactly the flat duplication
        /// factor over all environments, in any fold order.
        #[test]
        fn binary_merge_matches_flat_dupl(envs in proptest::collection::vec(arb_env(), 1..5)) {
            let letters = Letters::new(vec!["a1".into(), "a2".into()]);
            let judgments: Vec<Judgment> = envs
                .iter()
                .map(|e| Judgment {
                    env: e.clone(),
                    asms: AsmMultiset::new(),
                    value: ValueVec::zero(&letters),
                    used: false,
                })
                .collect();
            let mut acc = judgments[0].clone();
            for j in &judgments[1..] {
                acc = merge_application(&acc, j, &letters);
            }
            let refs: Vec<&TyEnv> = envs.iter().collect();
            let flat = crate::types::dupl(&refs, &letters);
            prop_assert_eq!(acc.value, flat);
        }
    }
}
