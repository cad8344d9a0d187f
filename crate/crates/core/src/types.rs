//! The type domain: productivity sets, per-letter value vectors, hash-consed
//! intersection types with s-bounded argument multisets, and type
//! environments.
//!
//! With important letters Σ_ε = {a₁,…,aₛ}, the types of base sort are just
//! the atom `r`, and an arrow sort α → β gets the types `P_{≤s}(P(Σ_ε) ×
//! T(α)) × T(β)`: an s-multiset of (productivity set, type) pairs for the
//! argument and a type for the result. Values are vectors Σ_ε → ℕ, and a
//! judgment's flag set is `{a | v(a) > 0 or the environment has a binding
//! flagged with a}`.

use crate::sort::{SortId, SortStore};
use crate::term::VarId;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

/// The important letters of a run, in declaration order. `s` is their count;
/// multisets are capped at `max(1, s)` so degenerate runs without letters
/// still have room for singleton argument multisets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Letters {
    names: Vec<String>,
}

impl Letters {
    pub fn new(names: Vec<String>) -> Self {
        assert!(names.len() <= 16, "at most 16 important letters are supported");
        Letters { names }
    }

    pub fn s(&self) -> usize {
        self.names.len()
    }

    /// Multiset capacity: `max(1, s)`.
    pub fn cap(&self) -> u32 {
        (self.s() as u32).max(1)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn full(&self) -> ProdSet {
        ProdSet(((1u32 << self.s()) - 1) as u16)
    }
}

/// A set of important letters, as a bitmask over letter indices.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct ProdSet(pub u16);

impl ProdSet {
    pub const EMPTY: ProdSet = ProdSet(0);

    pub fn singleton(i: usize) -> Self {
        ProdSet(1 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn union(self, other: ProdSet) -> ProdSet {
        ProdSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self, s: usize) -> impl Iterator<Item = usize> {
        (0..s).filter(move |&i| self.contains(i))
    }

    /// All subsets of the full letter set, in increasing bitmask order.
    pub fn all(letters: &Letters) -> impl Iterator<Item = ProdSet> {
        let full = letters.full().0;
        (0..=full).map(ProdSet)
    }

    pub fn render(self, letters: &Letters) -> String {
        if self.is_empty() {
            return "np".into();
        }
        let names: Vec<&str> =
            self.iter(letters.s()).map(|i| letters.name(i)).collect();
        format!("pr:{{{}}}", names.join(","))
    }
}

/// A per-letter natural-number value vector of length `s`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ValueVec(pub Vec<u32>);

impl ValueVec {
    pub fn zero(letters: &Letters) -> Self {
        ValueVec(vec![0; letters.s()])
    }

    /// Characteristic vector of a letter set: 1 where the letter is present.
    pub fn chi(set: ProdSet, letters: &Letters) -> Self {
        ValueVec((0..letters.s()).map(|i| set.contains(i) as u32).collect())
    }

    pub fn add(&self, other: &ValueVec) -> ValueVec {
        ValueVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn add_assign(&mut self, other: &ValueVec) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn scale(&self, k: u32) -> ValueVec {
        ValueVec(self.0.iter().map(|a| a * k).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Componentwise ≥.
    pub fn dominates(&self, other: &ValueVec) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    /// Strictly greater in every component.
    pub fn strictly_dominates(&self, other: &ValueVec) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a > b)
    }

    pub fn render(&self, letters: &Letters) -> String {
        if letters.s() == 1 {
            return self.0[0].to_string();
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{}:{}", letters.name(i), v))
            .collect();
        format!("{{{}}}", parts.join(","))
    }
}

/// Flag set of a value vector: the letters with a strictly positive entry.
pub fn flag_of(value: &ValueVec) -> ProdSet {
    let mut set = ProdSet::EMPTY;
    for (i, &v) in value.0.iter().enumerate() {
        if v > 0 {
            set.insert(i);
        }
    }
    set
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TyId(pub u32);

/// A (productivity set, type) pair — an argument requirement or a candidate
/// for a variable.
pub type TyPair = (ProdSet, TyId);

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum TyData {
    Atom,
    /// Argument multiset in canonical order (sorted, repeats allowed, each
    /// pair at most `cap` times) and result type.
    Arrow { args: Vec<TyPair>, result: TyId },
}

/// Hash-consed type store. Each distinct type is stored once; `TyId`
/// equality is structural equality. Single-threaded by construction — every
/// analysis owns its interner, which makes interning trivially linearizable.
pub struct TyInterner {
    items: Vec<TyData>,
    index: HashMap<TyData, TyId>,
}

impl Default for TyInterner {
    fn default() -> Self {
        Self::new()
    }
}

impl TyInterner {
    pub fn new() -> Self {
        let mut t = TyInterner { items: Vec::new(), index: HashMap::new() };
        t.intern(TyData::Atom);
        t
    }

    pub fn atom(&self) -> TyId {
        TyId(0)
    }

    fn intern(&mut self, data: TyData) -> TyId {
        if let Some(&id) = self.index.get(&data) {
            return id;
        }
        let id = TyId(self.items.len() as u32);
        self.items.push(data.clone());
        self.index.insert(data, id);
        id
    }

    /// Interns an arrow type; the argument multiset is canonicalized by
    /// sorting.
    pub fn arrow(&mut self, mut args: Vec<TyPair>, result: TyId) -> TyId {
        args.sort();
        self.intern(TyData::Arrow { args, result })
    }

    /// `⊤ → … (singleton at one position) … → result`, built from
    /// right to left.
    pub fn arrows(&mut self, arg_multisets: &[Vec<TyPair>], result: TyId) -> TyId {
        let mut acc = result;
        for ms in arg_multisets.iter().rev() {
            acc = self.arrow(ms.clone(), acc);
        }
        acc
    }

    pub fn get(&self, id: TyId) -> &TyData {
        &self.items[id.0 as usize]
    }

    /// Splits an arrow type into (argument multiset, result); `None` on the
    /// atom.
    pub fn peel(&self, id: TyId) -> Option<(&[TyPair], TyId)> {
        match self.get(id) {
            TyData::Atom => None,
            TyData::Arrow { args, result } => Some((args, *result)),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the atom is always present
    }

    /// Structural rendering, canonical across interner instances: argument
    /// multisets are printed in the order of their rendered form.
    pub fn render(&self, id: TyId, letters: &Letters) -> String {
        match self.get(id) {
            TyData::Atom => "r".into(),
            TyData::Arrow { args, result } => {
                let mut rendered: Vec<String> = args
                    .iter()
                    .map(|&(p, t)| format!("({}, {})", p.render(letters), self.render(t, letters)))
                    .collect();
                rendered.sort();
                let lhs = match rendered.len() {
                    0 => "T".to_string(),
                    1 => rendered.pop().unwrap(),
                    _ => format!("/\\{{{}}}", rendered.join(", ")),
                };
                format!("{} -> {}", lhs, self.render(*result, letters))
            }
        }
    }
}

/// A type environment: an s-multiset of (variable, productivity set, type)
/// bindings, stored sorted with explicit counts.
pub type EnvKey = (VarId, ProdSet, TyId);

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct TyEnv(pub Vec<(EnvKey, u32)>);

impl TyEnv {
    pub fn empty() -> Self {
        TyEnv(Vec::new())
    }

    pub fn singleton(var: VarId, pair: TyPair) -> Self {
        TyEnv(vec![((var, pair.0, pair.1), 1)])
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total count of bindings whose productivity set contains the letter.
    pub fn count_for_letter(&self, letter: usize) -> u32 {
        self.0
            .iter()
            .filter(|((_, p, _), _)| p.contains(letter))
            .map(|(_, c)| c)
            .sum()
    }

    /// Bindings restricted to one variable, as a pair multiset.
    pub fn restrict_var(&self, var: VarId) -> Vec<(TyPair, u32)> {
        self.0
            .iter()
            .filter(|((v, _, _), _)| *v == var)
            .map(|&((_, p, t), c)| ((p, t), c))
            .collect()
    }

    /// The letters for which some binding is flagged.
    pub fn flagged_letters(&self) -> ProdSet {
        self.0
            .iter()
            .fold(ProdSet::EMPTY, |acc, ((_, p, _), _)| acc.union(*p))
    }

    pub fn render(&self, scheme: &crate::scheme::Scheme, tys: &TyInterner, letters: &Letters) -> String {
        let mut out = String::from("{");
        let mut first = true;
        for ((v, p, t), c) in &self.0 {
            for _ in 0..*c {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                let _ = write!(
                    out,
                    "{}:({}, {})",
                    scheme.var(*v).name,
                    p.render(letters),
                    tys.render(*t, letters)
                );
            }
        }
        out.push('}');
        out
    }
}

/// s-multiset union: counts add but are capped at `cap`.
pub fn smultiset_union(a: &TyEnv, b: &TyEnv, cap: u32) -> TyEnv {
    let mut merged: BTreeMap<EnvKey, u32> = BTreeMap::new();
    for &(k, c) in a.0.iter().chain(b.0.iter()) {
        let e = merged.entry(k).or_insert(0);
        *e = (*e + c).min(cap);
    }
    TyEnv(merged.into_iter().collect())
}

/// Restriction of an environment to bindings flagged with `letter` — the
/// per-letter count used by the duplication factor.
pub fn env_restrict(env: &TyEnv, letter: usize) -> u32 {
    env.count_for_letter(letter)
}

/// Duplication factor over a family of environments, per letter: the sum of
/// the per-environment flagged counts minus the flagged count of the capped
/// union. Zero on a single environment.
pub fn dupl(envs: &[&TyEnv], letters: &Letters) -> ValueVec {
    let cap = letters.cap();
    let mut union = TyEnv::empty();
    for e in envs {
        union = smultiset_union(&union, e, cap);
    }
    let mut out = ValueVec::zero(letters);
    for i in 0..letters.s() {
        let total: u32 = envs.iter().map(|e| env_restrict(e, i)).sum();
        out.0[i] = total - env_restrict(&union, i);
    }
    out
}

/// All types of a sort under the s-multiset bound. Doubly exponential in the
/// sort order — callers bound the sorts they pass in.
pub fn enumerate_types(tys: &mut TyInterner, sorts: &SortStore, sort: SortId, letters: &Letters) -> Vec<TyId> {
    match sorts.get(sort) {
        crate::sort::Sort::Base => vec![tys.atom()],
        crate::sort::Sort::Arrow(a, b) => {
            let arg_tys = enumerate_types(tys, sorts, a, letters);
            let mut pairs: Vec<TyPair> = Vec::new();
            for p in ProdSet::all(letters) {
                for &t in &arg_tys {
                    pairs.push((p, t));
                }
            }
            let multisets = multisets_up_to(&pairs, letters.cap() as usize);
            let res_tys = enumerate_types(tys, sorts, b, letters);
            let mut out = Vec::new();
            for ms in &multisets {
                for &r in &res_tys {
                    out.push(tys.arrow(ms.clone(), r));
                }
            }
            out.sort();
            out.dedup();
            out
        }
    }
}

/// All multisets over `items` of size at most `max_size`, as non-decreasing
/// index selections.
pub fn multisets_up_to<T: Clone>(items: &[T], max_size: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    collect_multisets(items.len(), max_size, 0, &mut current, &mut out);
    out.into_iter()
        .map(|idx| idx.into_iter().map(|i| items[i].clone()).collect())
        .collect()
}

fn collect_multisets(
    n: usize,
    remaining: usize,
    from: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    out.push(current.clone());
    if remaining == 0 {
        return;
    }
    for i in from..n {
        current.push(i);
        collect_multisets(n, remaining - 1, i, current, out);
        current.pop();
    }
}

/// All index multisets over `0..n` of exactly size `k`, as non-decreasing
/// index vectors.
pub fn index_multisets_exact(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut all = Vec::new();
    let mut current = Vec::new();
    collect_multisets(n, k, 0, &mut current, &mut all);
    all.into_iter().filter(|v| v.len() == k).collect()
}

/// Choose-with-repetition count, used to cross-check `enumerate_types`.
pub fn multiset_count(n: u64, k: u64) -> u64 {
    // C(n + k - 1, k)
    if k == 0 {
        return 1;
    }
    if n == 0 {
        return 0;
    }
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num *= n + i;
        den *= i + 1;
    }
    num / den
}
