//! Simple sorts over a single base sort `o`, interned per scheme.
//!
//! `ord(o) = 0` and `ord(α → β) = max(1 + ord(α), ord(β))`; the order of a
//! sort bounds how deeply partial applications of that sort can nest.

use std::collections::HashMap;

/// Handle into a [`SortStore`]. Equality of handles is equality of sorts.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SortId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Sort {
    Base,
    Arrow(SortId, SortId),
}

/// Interner for sorts. The base sort is always present at a fixed handle.
pub struct SortStore {
    items: Vec<Sort>,
    orders: Vec<u32>,
    index: HashMap<Sort, SortId>,
}

impl Default for SortStore {
    fn default() -> Self {
        Self::new()
    }
}

impl SortStore {
    pub fn new() -> Self {
        let mut s = SortStore { items: Vec::new(), orders: Vec::new(), index: HashMap::new() };
        s.intern(Sort::Base);
        s
    }

    fn intern(&mut self, sort: Sort) -> SortId {
        if let Some(&id) = self.index.get(&sort) {
            return id;
        }
        let id = SortId(self.items.len() as u32);
        let ord = match sort {
            Sort::Base => 0,
            Sort::Arrow(a, b) => (1 + self.order(a)).max(self.order(b)),
        };
        self.items.push(sort);
        self.orders.push(ord);
        self.index.insert(sort, id);
        id
    }

    pub fn base(&self) -> SortId {
        SortId(0)
    }

    pub fn arrow(&mut self, arg: SortId, res: SortId) -> SortId {
        self.intern(Sort::Arrow(arg, res))
    }

    /// `α₁ → … → αₖ → res`, built right-associatively.
    pub fn arrows(&mut self, args: &[SortId], res: SortId) -> SortId {
        let mut acc = res;
        for &a in args.iter().rev() {
            acc = self.arrow(a, acc);
        }
        acc
    }

    pub fn get(&self, id: SortId) -> Sort {
        self.items[id.0 as usize]
    }

    pub fn order(&self, id: SortId) -> u32 {
        self.orders[id.0 as usize]
    }

    /// Number of top-level arrows.
    pub fn arity(&self, id: SortId) -> u32 {
        let mut n = 0;
        let mut cur = id;
        while let Sort::Arrow(_, res) = self.get(cur) {
            n += 1;
            cur = res;
        }
        n
    }

    /// Splits `α₁ → … → αₖ → o` into (`[α₁, …, αₖ]`, result).
    pub fn args_result(&self, id: SortId) -> (Vec<SortId>, SortId) {
        let mut args = Vec::new();
        let mut cur = id;
        while let Sort::Arrow(a, res) = self.get(cur) {
            args.push(a);
            cur = res;
        }
        (args, cur)
    }

    /// The sort of a terminal with `arity` base-sort children.
    pub fn constant_sort(&mut self, arity: u32) -> SortId {
        let base = self.base();
        let args = vec![base; arity as usize];
        self.arrows(&args, base)
    }

    /// A sort is homogeneous when written as `α₁ → … → αₖ → o` the argument
    /// orders are weakly decreasing and every argument is itself homogeneous.
    pub fn is_homogeneous(&self, id: SortId) -> bool {
        let (args, _) = self.args_result(id);
        for w in args.windows(2) {
            if self.order(w[0]) < self.order(w[1]) {
                return false;
            }
        }
        args.iter().all(|&a| self.is_homogeneous(a))
    }

    pub fn render(&self, id: SortId) -> String {
        let mut out = String::new();
        self.render_into(id, &mut out);
        out
    }

    fn render_into(&self, id: SortId, out: &mut String) {
        match self.get(id) {
            Sort::Base => out.push('o'),
            Sort::Arrow(a, b) => {
                if matches!(self.get(a), Sort::Arrow(..)) {
                    out.push('(');
                    self.render_into(a, out);
                    out.push(')');
                } else {
                    self.render_into(a, out);
                }
                out.push_str(" -> ");
                self.render_into(b, out);
            }
        }
    }
}

/// Order of a sort: 0 for the base sort, `max(1 + ord(arg), ord(res))` for arrows.
pub fn sort_order(store: &SortStore, id: SortId) -> u32 {
    store.order(id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_small_sorts() {
        let mut s = SortStore::new();
        let o = s.base();
        assert_eq!(s.order(o), 0);
        let oo = s.arrow(o, o);
        assert_eq!(s.order(oo), 1);
        let l = s.arrow(oo, oo); // (o -> o) -> o -> o
        assert_eq!(s.order(l), 2);
        let r2 = s.arrow(o, oo); // o -> o -> o: still order 1
        assert_eq!(s.order(r2), 1);
    }

    #[test]
    fn arity_and_split() {
        let mut s = SortStore::new();
        let o = s.base();
        let t = s.constant_sort(3);
        assert_eq!(s.arity(t), 3);
        let (args, res) = s.args_result(t);
        assert_eq!(args, vec![o, o, o]);
        assert_eq!(res, o);
    }

    #[test]
    fn homogeneity_of_sorts() {
        let mut s = SortStore::new();
        let o = s.base();
        let oo = s.arrow(o, o);
        assert!(s.is_homogeneous(oo));
        // o -> (o -> o) -> o: orders 0 then 1, increasing — not homogeneous.
        let bad = {
            let tail = s.arrow(oo, o);
            s.arrow(o, tail)
        };
        assert!(!s.is_homogeneous(bad));
        // (o -> o) -> o -> o: orders 1 then 0 — homogeneous.
        let good = s.arrow(oo, oo);
        assert!(s.is_homogeneous(good));
    }

    #[test]
    fn rendering_parenthesizes_left_nesting() {
        let mut s = SortStore::new();
        let o = s.base();
        let oo = s.arrow(o, o);
        let t = s.arrow(oo, oo);
        assert_eq!(s.render(t), "(o -> o) -> o -> o");
    }
}
