//! Recursion schemes: terminals with arities, one rule per nonterminal,
//! a base-sorted start symbol, and an optional set of important letters.
//!
//! Rule right-hand sides have the shape `λx₁…λxₖ.K` with `K` lambda-free;
//! the body `K` may still have arrow sort (partial application is allowed
//! everywhere except that a rule may not be a bare nonterminal).

use crate::sort::{Sort, SortId, SortStore};
use crate::term::{is_safe, term_complexity, ConstId, NtId, TermId, TermNode, TermStore, VarId};
use std::collections::HashMap;

pub const OMEGA: &str = "omega";

#[derive(Clone, Debug)]
pub struct Terminal {
    pub name: String,
    pub arity: u32,
    pub sort: SortId,
}

#[derive(Clone, Debug)]
pub struct NtDef {
    pub name: String,
    pub sort: SortId,
    pub params: Vec<VarId>,
    /// Lambda-free body `K`.
    pub body: TermId,
    /// The full right-hand side `λx₁…λxₖ.K`.
    pub rule_term: TermId,
}

#[derive(Clone, Debug)]
pub struct VarDef {
    pub name: String,
    pub sort: SortId,
    pub owner: NtId,
    pub index: u32,
}

pub struct Scheme {
    pub sorts: SortStore,
    pub terms: TermStore,
    pub terminals: Vec<Terminal>,
    pub nts: Vec<NtDef>,
    pub vars: Vec<VarDef>,
    pub start: NtId,
    /// Important letters in declaration order.
    pub important: Vec<ConstId>,
    pub omega: ConstId,
    /// Owning rule of every term node.
    owners: Vec<Option<NtId>>,
}

impl Scheme {
    pub fn nt_by_name(&self, name: &str) -> Option<NtId> {
        self.nts.iter().position(|n| n.name == name).map(|i| NtId(i as u32))
    }

    pub fn terminal_by_name(&self, name: &str) -> Option<ConstId> {
        self.terminals.iter().position(|t| t.name == name).map(|i| ConstId(i as u32))
    }

    pub fn nt(&self, id: NtId) -> &NtDef {
        &self.nts[id.0 as usize]
    }

    pub fn nt_name(&self, id: NtId) -> &str {
        &self.nt(id).name
    }

    pub fn body(&self, id: NtId) -> TermId {
        self.nt(id).body
    }

    pub fn rule_term(&self, id: NtId) -> TermId {
        self.nt(id).rule_term
    }

    pub fn params(&self, id: NtId) -> &[VarId] {
        &self.nt(id).params
    }

    pub fn var(&self, id: VarId) -> &VarDef {
        &self.vars[id.0 as usize]
    }

    pub fn var_sort(&self, id: VarId) -> SortId {
        self.var(id).sort
    }

    pub fn terminal(&self, id: ConstId) -> &Terminal {
        &self.terminals[id.0 as usize]
    }

    pub fn is_important(&self, id: ConstId) -> bool {
        self.important.contains(&id)
    }

    pub fn owner(&self, t: TermId) -> Option<NtId> {
        self.owners[t.0 as usize]
    }

    pub fn nt_count(&self) -> usize {
        self.nts.len()
    }

    /// Maximal complexity over all rule right-hand sides; the order of the
    /// scheme.
    pub fn order(&self) -> u32 {
        (0..self.nts.len())
            .map(|i| term_complexity(self, self.rule_term(NtId(i as u32))))
            .max()
            .unwrap_or(0)
    }

    pub fn render_term(&self, id: TermId) -> String {
        let mut out = String::new();
        self.render_term_into(id, false, &mut out);
        out
    }

    fn render_term_into(&self, id: TermId, arg_pos: bool, out: &mut String) {
        match self.terms.node(id) {
            TermNode::Const(c) => out.push_str(&self.terminal(c).name),
            TermNode::Var(v) => out.push_str(&self.var(v).name),
            TermNode::Nt(n) => out.push_str(self.nt_name(n)),
            TermNode::App(f, a) => {
                if arg_pos {
                    out.push('(');
                }
                self.render_term_into(f, false, out);
                out.push(' ');
                self.render_term_into(a, true, out);
                if arg_pos {
                    out.push(')');
                }
            }
            TermNode::Abs(v, b) => {
                if arg_pos {
                    out.push('(');
                }
                out.push('\\');
                out.push_str(&self.var(v).name);
                out.push_str(". ");
                self.render_term_into(b, false, out);
                if arg_pos {
                    out.push(')');
                }
            }
        }
    }

    /// Textual form in the input format. Parameters are printed with their
    /// (parenthesized) sort annotations so printing and reparsing round-trip;
    /// the start symbol's rule is printed first because the format reads the
    /// first rule head as the start.
    pub fn to_text(&self) -> String {
        let mut out = String::from("%BEGING\n");
        let mut order: Vec<usize> = (0..self.nts.len()).collect();
        order.sort_by_key(|&i| (NtId(i as u32) != self.start, i));
        for &i in &order {
            let nt = &self.nts[i];
            out.push_str(&nt.name);
            for &p in &nt.params {
                let v = self.var(p);
                out.push_str(&format!(" ({} : {})", v.name, self.sorts.render(v.sort)));
            }
            out.push_str(" -> ");
            out.push_str(&self.render_term(nt.body));
            out.push_str(".\n");
        }
        out.push_str("%ENDG\n%BEGINT\n");
        for t in &self.terminals {
            if t.name != OMEGA {
                out.push_str(&format!("{} -> {}.\n", t.name, t.arity));
            }
        }
        out.push_str("%ENDT\n");
        if !self.important.is_empty() {
            out.push_str("%BEGINI\n");
            for &c in &self.important {
                out.push_str(&format!("{}.\n", self.terminal(c).name));
            }
            out.push_str("%ENDI\n");
        }
        out
    }
}

/// Every rule term safe (nonterminals count as constants).
pub fn scheme_is_safe(scheme: &Scheme) -> bool {
    (0..scheme.nts.len()).all(|i| is_safe(scheme, scheme.rule_term(NtId(i as u32))))
}

/// Every subterm of every rule has a homogeneous sort.
pub fn scheme_is_homogeneous(scheme: &Scheme) -> bool {
    (0..scheme.nts.len()).all(|i| {
        scheme
            .terms
            .subterms(scheme.rule_term(NtId(i as u32)))
            .iter()
            .all(|&t| scheme.sorts.is_homogeneous(scheme.terms.sort(t)))
    })
}

/// Programmatic scheme construction, used by tests and generators. Sorts are
/// explicit; `finish` assigns node sorts and validates the result.
pub struct SchemeBuilder {
    sorts: SortStore,
    terms: TermStore,
    terminals: Vec<Terminal>,
    t_index: HashMap<String, ConstId>,
    nt_names: Vec<String>,
    nt_sorts: Vec<SortId>,
    nt_index: HashMap<String, NtId>,
    rules: HashMap<NtId, (Vec<VarId>, TermId)>,
    vars: Vec<VarDef>,
    important: Vec<String>,
    omega: ConstId,
}

impl Default for SchemeBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl SchemeBuilder {
    pub fn new() -> Self {
        let mut sorts = SortStore::new();
        let omega_sort = sorts.constant_sort(0);
        let mut b = SchemeBuilder {
            sorts,
            terms: TermStore::new(),
            terminals: Vec::new(),
            t_index: HashMap::new(),
            nt_names: Vec::new(),
            nt_sorts: Vec::new(),
            nt_index: HashMap::new(),
            rules: HashMap::new(),
            vars: Vec::new(),
            important: Vec::new(),
            omega: ConstId(0),
        };
        b.terminals.push(Terminal { name: OMEGA.into(), arity: 0, sort: omega_sort });
        b.t_index.insert(OMEGA.into(), ConstId(0));
        b
    }

    pub fn base(&mut self) -> SortId {
        self.sorts.base()
    }

    /// The divergence constant, registered up front in every builder.
    pub fn omega_const(&self) -> ConstId {
        self.omega
    }

    pub fn arrow(&mut self, a: SortId, b: SortId) -> SortId {
        self.sorts.arrow(a, b)
    }

    pub fn arrows(&mut self, args: &[SortId], res: SortId) -> SortId {
        self.sorts.arrows(args, res)
    }

    pub fn terminal(&mut self, name: &str, arity: u32) -> ConstId {
        if let Some(&id) = self.t_index.get(name) {
            return id;
        }
        let sort = self.sorts.constant_sort(arity);
        let id = ConstId(self.terminals.len() as u32);
        self.terminals.push(Terminal { name: name.into(), arity, sort });
        self.t_index.insert(name.into(), id);
        id
    }

    pub fn nonterminal(&mut self, name: &str, sort: SortId) -> NtId {
        if let Some(&id) = self.nt_index.get(name) {
            return id;
        }
        let id = NtId(self.nt_names.len() as u32);
        self.nt_names.push(name.into());
        self.nt_sorts.push(sort);
        self.nt_index.insert(name.into(), id);
        id
    }

    /// Declares a parameter of `nt`; parameters must be declared in order
    /// before the body references them.
    pub fn param(&mut self, nt: NtId, name: &str, sort: SortId) -> VarId {
        let index = self
            .vars
            .iter()
            .filter(|v| v.owner == nt)
            .count() as u32;
        let id = VarId(self.vars.len() as u32);
        self.vars.push(VarDef { name: name.into(), sort, owner: nt, index });
        id
    }

    pub fn tconst(&mut self, c: ConstId) -> TermId {
        self.terms.push(TermNode::Const(c))
    }

    pub fn tvar(&mut self, v: VarId) -> TermId {
        self.terms.push(TermNode::Var(v))
    }

    pub fn tnt(&mut self, n: NtId) -> TermId {
        self.terms.push(TermNode::Nt(n))
    }

    pub fn tapp(&mut self, f: TermId, a: TermId) -> TermId {
        self.terms.push(TermNode::App(f, a))
    }

    /// `f a₁ … aₙ`
    pub fn tapps(&mut self, f: TermId, args: &[TermId]) -> TermId {
        let mut acc = f;
        for &a in args {
            acc = self.tapp(acc, a);
        }
        acc
    }

    pub fn set_body(&mut self, nt: NtId, params: Vec<VarId>, body: TermId) {
        self.rules.insert(nt, (params, body));
    }

    pub fn important(&mut self, name: &str) {
        if !self.important.iter().any(|n| n == name) {
            self.important.push(name.into());
        }
    }

    fn assign_sorts(&mut self, id: TermId) -> Result<SortId, String> {
        let node = self.terms.node(id);
        let sort = match node {
            TermNode::Const(c) => self.terminals[c.0 as usize].sort,
            TermNode::Var(v) => self.vars[v.0 as usize].sort,
            TermNode::Nt(n) => self.nt_sorts[n.0 as usize],
            TermNode::App(f, a) => {
                let fs = self.assign_sorts(f)?;
                let as_ = self.assign_sorts(a)?;
                match self.sorts.get(fs) {
                    Sort::Arrow(arg, res) if arg == as_ => res,
                    Sort::Arrow(arg, _) => {
                        return Err(format!(
                            "ill-sorted application: argument has sort {} where {} is required",
                            self.sorts.render(as_),
                            self.sorts.render(arg)
                        ))
                    }
                    Sort::Base => return Err("application of a base-sorted term".into()),
                }
            }
            TermNode::Abs(v, b) => {
                let bs = self.assign_sorts(b)?;
                let vs = self.vars[v.0 as usize].sort;
                self.sorts.arrow(vs, bs)
            }
        };
        self.terms.set_sort(id, sort);
        Ok(sort)
    }

    pub fn finish(mut self, start: &str) -> Result<Scheme, String> {
        let start = *self
            .nt_index
            .get(start)
            .ok_or_else(|| format!("start symbol {start} has no rule"))?;
        let mut nts = Vec::new();
        for i in 0..self.nt_names.len() {
            let id = NtId(i as u32);
            let (params, body) = self
                .rules
                .get(&id)
                .cloned()
                .ok_or_else(|| format!("no rule for nonterminal {}", self.nt_names[i]))?;
            if matches!(self.terms.node(body), TermNode::Nt(_)) {
                return Err(format!("rule for {} is a bare nonterminal", self.nt_names[i]));
            }
            let mut rule_term = body;
            for &p in params.iter().rev() {
                rule_term = self.terms.push(TermNode::Abs(p, rule_term));
            }
            let got = self.assign_sorts(rule_term)?;
            let declared = self.nt_sorts[i];
            if got != declared {
                return Err(format!(
                    "rule for {} has sort {} but the nonterminal is declared {}",
                    self.nt_names[i],
                    self.sorts.render(got),
                    self.sorts.render(declared)
                ));
            }
            nts.push(NtDef {
                name: self.nt_names[i].clone(),
                sort: declared,
                params,
                body,
                rule_term,
            });
        }
        if self.nt_sorts[start.0 as usize] != self.sorts.base() {
            return Err("start symbol must have base sort".into());
        }
        let mut important = Vec::new();
        for name in &self.important {
            let id = *self
                .t_index
                .get(name)
                .ok_or_else(|| format!("important letter {name} is not a declared terminal"))?;
            if id == self.omega {
                return Err("omega cannot be an important letter".into());
            }
            important.push(id);
        }
        let mut owners = vec![None; self.terms.len()];
        for (i, nt) in nts.iter().enumerate() {
            for t in self.terms.subterms(nt.rule_term) {
                owners[t.0 as usize] = Some(NtId(i as u32));
            }
        }
        Ok(Scheme {
            sorts: self.sorts,
            terms: self.terms,
            terminals: self.terminals,
            nts,
            vars: self.vars,
            start,
            important,
            omega: self.omega,
            owners,
        })
    }
}
