//! The saturation loop: a least fixpoint over nonterminal bindings and
//! occurrence pairs.
//!
//! State grows monotonically in two tables: bindings `(X, A, τ)` derived for
//! nonterminals, and candidate pairs per rule parameter, fed by typing the
//! occurrence terms the flow analysis says may reach that parameter. Every
//! rule typing also deposits derivation records — (assumptions used, value)
//! — per binding; these become the derivation graph's edges and are pure
//! outputs: new records never re-trigger work.
//!
//! Re-typing is incremental. When a new binding or candidate pair appears,
//! only the rules and occurrences that syntactically contain the relevant
//! nonterminal or parameter are re-typed, and — with the corresponding
//! option on — the re-typing is constrained to derivations that actually use
//! the new item at least once. Completeness is semi-naive: any derivation
//! absent from a constrained run uses some other new item and is found by
//! that item's own constrained run.
//!
//! Rules whose parameters never occur in head position can be typed in
//! demand mode, reading argument pairs off the application shapes instead of
//! the flow-fed tables; such rules skip re-typing on new candidate pairs
//! entirely. This may derive bindings no start derivation can use — the
//! verdict only reads the part of the graph reachable from the start
//! binding, where all option combinations agree.

use crate::flow::{self, FlowAnalysis};
use crate::scheme::Scheme;
use crate::term::{NtId, TermId, TermNode, VarId};
use crate::types::{Letters, TyInterner, TyPair, ValueVec};
use crate::typing::{
    type_occurrence, type_rule, AsmKey, AsmMultiset, Marker, PairSource, TableView,
};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::Instant;

/// One derivation of a rule at a binding: the assumptions it used, with
/// multiplicities, and its value vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub asms: AsmMultiset,
    pub value: ValueVec,
}

#[derive(Debug, Default, Clone)]
pub struct BindingTable {
    /// Derived bindings per nonterminal: the saturated type table.
    pub bindings: BTreeMap<NtId, BTreeSet<TyPair>>,
    /// Derivation records per binding, value-antichain per assumption
    /// multiset.
    pub records: BTreeMap<AsmKey, Vec<Record>>,
    /// Candidate pairs per rule parameter.
    pub candidates: BTreeMap<VarId, BTreeSet<TyPair>>,
    /// Pairs realized by each typed occurrence.
    pub occ_pairs: BTreeMap<TermId, BTreeSet<TyPair>>,
}

impl BindingTable {
    pub fn has_binding(&self, key: AsmKey) -> bool {
        self.bindings
            .get(&key.0)
            .is_some_and(|set| set.contains(&(key.1, key.2)))
    }

    pub fn binding_count(&self) -> usize {
        self.bindings.values().map(|s| s.len()).sum()
    }

    pub(crate) fn insert_record(&mut self, key: AsmKey, asms: AsmMultiset, value: ValueVec) {
        let records = self.records.entry(key).or_default();
        if records
            .iter()
            .any(|r| r.asms == asms && r.value.dominates(&value))
        {
            return;
        }
        records.retain(|r| !(r.asms == asms && value.dominates(&r.value)));
        records.push(Record { asms, value });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExplorationOrder {
    Normal,
    Reversed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorklistOrder {
    Fifo,
    Lifo,
}

#[derive(Clone, Debug)]
pub struct Options {
    /// Constrain re-typing after a new candidate pair to derivations using
    /// that pair.
    pub ftty: bool,
    /// Constrain re-typing after a new binding to derivations using that
    /// binding.
    pub fntty: bool,
    /// Type head-variable-free rules in demand mode.
    pub hvo: bool,
    pub exploration: ExplorationOrder,
    pub worklist: WorklistOrder,
    /// Wall-clock cutoff checked between work items.
    pub deadline: Option<Instant>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            ftty: true,
            fntty: true,
            hvo: true,
            exploration: ExplorationOrder::Normal,
            worklist: WorklistOrder::Fifo,
            deadline: None,
        }
    }
}

#[derive(Debug, Default, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Stats {
    pub bindings: usize,
    pub edges: usize,
    pub productive_edges: usize,
    pub iterations: u64,
    pub ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeout;

impl std::fmt::Display for Timeout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "saturation exceeded the time limit")
    }
}

impl std::error::Error for Timeout {}

/// The saturated state: interner, tables, flow results, and counters.
pub struct Saturation {
    pub tys: TyInterner,
    pub table: BindingTable,
    pub flows: FlowAnalysis,
    pub stats: Stats,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Constraint {
    Free,
    UseBinding(AsmKey),
    UsePair(VarId, TyPair),
}

impl Constraint {
    fn marker(&self) -> Marker {
        match self {
            Constraint::Free => Marker::None,
            Constraint::UseBinding(k) => Marker::Binding(*k),
            Constraint::UsePair(v, p) => Marker::Pair(*v, *p),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Work {
    Rule(NtId, Constraint),
    Occ(TermId, Constraint),
}

struct Saturator<'a> {
    scheme: &'a Scheme,
    letters: &'a Letters,
    options: &'a Options,
    tys: TyInterner,
    table: BindingTable,
    flows: FlowAnalysis,
    occurrences: Vec<TermId>,
    /// Rules typable in demand mode: no parameter in head position.
    demand_rules: BTreeSet<NtId>,
    /// Rules / occurrences whose term mentions a given nonterminal.
    rules_with_nt: BTreeMap<NtId, Vec<NtId>>,
    occs_with_nt: BTreeMap<NtId, Vec<TermId>>,
    queue: VecDeque<Work>,
    pending: BTreeSet<Work>,
    iterations: u64,
    steps: u64,
}

pub fn saturate(
    scheme: &Scheme,
    letters: &Letters,
    options: &Options,
) -> Result<Saturation, Timeout> {
    let start = Instant::now();
    let flows = flow::analyze(scheme);
    let occurrences: Vec<TermId> = flows.occurrences().into_iter().collect();

    let mut demand_rules = BTreeSet::new();
    if options.hvo {
        for i in 0..scheme.nt_count() {
            let x = NtId(i as u32);
            if !has_var_head(scheme, scheme.body(x)) {
                demand_rules.insert(x);
            }
        }
    }

    let mut rules_with_nt: BTreeMap<NtId, Vec<NtId>> = BTreeMap::new();
    let mut occs_with_nt: BTreeMap<NtId, Vec<TermId>> = BTreeMap::new();
    for i in 0..scheme.nt_count() {
        let y = NtId(i as u32);
        for j in 0..scheme.nt_count() {
            let z = NtId(j as u32);
            if scheme.terms.mentions_nt(scheme.body(z), y) {
                rules_with_nt.entry(y).or_default().push(z);
            }
        }
        for &o in &occurrences {
            if scheme.terms.mentions_nt(o, y) {
                occs_with_nt.entry(y).or_default().push(o);
            }
        }
    }

    let mut sat = Saturator {
        scheme,
        letters,
        options,
        tys: TyInterner::new(),
        table: BindingTable::default(),
        flows,
        occurrences,
        demand_rules,
        rules_with_nt,
        occs_with_nt,
        queue: VecDeque::new(),
        pending: BTreeSet::new(),
        iterations: 0,
        steps: 0,
    };
    sat.seed();
    sat.run()?;
    let stats = Stats {
        bindings: sat.table.binding_count(),
        edges: 0,
        productive_edges: 0,
        iterations: sat.iterations,
        ms: start.elapsed().as_millis() as u64,
    };
    Ok(Saturation { tys: sat.tys, table: sat.table, flows: sat.flows, stats })
}

/// Whether any spine head inside the term is a variable (a bare variable
/// body counts: it is its own head).
fn has_var_head(scheme: &Scheme, t: TermId) -> bool {
    let (head, args) = scheme.terms.spine(t);
    if matches!(scheme.terms.node(head), TermNode::Var(_)) {
        return true;
    }
    args.iter().any(|&a| has_var_head(scheme, a))
}

impl<'a> Saturator<'a> {
    fn seed(&mut self) {
        let mut items: Vec<Work> = (0..self.scheme.nt_count())
            .map(|i| Work::Rule(NtId(i as u32), Constraint::Free))
            .chain(
                self.occurrences
                    .iter()
                    .map(|&o| Work::Occ(o, Constraint::Free)),
            )
            .collect();
        if self.options.exploration == ExplorationOrder::Reversed {
            items.reverse();
        }
        for w in items {
            self.push(w);
        }
    }

    fn push(&mut self, w: Work) {
        if self.pending.insert(w.clone()) {
            self.queue.push_back(w);
        }
    }

    fn pop(&mut self) -> Option<Work> {
        let w = match self.options.worklist {
            WorklistOrder::Fifo => self.queue.pop_front(),
            WorklistOrder::Lifo => self.queue.pop_back(),
        }?;
        self.pending.remove(&w);
        Some(w)
    }

    fn run(&mut self) -> Result<(), Timeout> {
        while let Some(w) = self.pop() {
            if let Some(deadline) = self.options.deadline {
                if Instant::now() > deadline {
                    return Err(Timeout);
                }
            }
            self.iterations += 1;
            match w {
                Work::Rule(x, c) => self.do_rule(x, c),
                Work::Occ(o, c) => self.do_occ(o, c),
            }
        }
        Ok(())
    }

    fn do_rule(&mut self, x: NtId, constraint: Constraint) {
        let source = if self.demand_rules.contains(&x) {
            PairSource::Demand
        } else {
            PairSource::Candidates
        };
        let view = TableView {
            bindings: &self.table.bindings,
            candidates: &self.table.candidates,
        };
        let derivs = type_rule(
            self.scheme,
            self.letters,
            &mut self.tys,
            view,
            source,
            constraint.marker(),
            x,
            &mut self.steps,
        );
        for d in derivs {
            let key = (x, d.prod, d.ty);
            if !self.table.has_binding(key) {
                self.table
                    .bindings
                    .entry(x)
                    .or_default()
                    .insert((d.prod, d.ty));
                self.on_new_binding(key);
            }
            self.table.insert_record(key, d.asms, d.value);
        }
    }

    fn do_occ(&mut self, o: TermId, constraint: Constraint) {
        let view = TableView {
            bindings: &self.table.bindings,
            candidates: &self.table.candidates,
        };
        let pairs = type_occurrence(
            self.scheme,
            self.letters,
            &mut self.tys,
            view,
            constraint.marker(),
            o,
            &mut self.steps,
        );
        for pair in pairs {
            if !self.table.occ_pairs.entry(o).or_default().insert(pair) {
                continue;
            }
            // Feed every parameter this occurrence flows into.
            let targets: Vec<(NtId, u32)> = self
                .flows
                .flows
                .iter()
                .filter(|(_, terms)| terms.contains(&o))
                .map(|(&k, _)| k)
                .collect();
            for (z, i) in targets {
                if (i as usize) >= self.scheme.params(z).len() {
                    continue; // over-application flow, no parameter behind it
                }
                let var = self.scheme.params(z)[i as usize];
                if self.table.candidates.entry(var).or_default().insert(pair) {
                    self.on_new_pair(z, var, pair);
                }
            }
        }
    }

    fn on_new_binding(&mut self, key: AsmKey) {
        let constraint = if self.options.fntty {
            Constraint::UseBinding(key)
        } else {
            Constraint::Free
        };
        for z in self.rules_with_nt.get(&key.0).cloned().unwrap_or_default() {
            self.push(Work::Rule(z, constraint.clone()));
        }
        for o in self.occs_with_nt.get(&key.0).cloned().unwrap_or_default() {
            self.push(Work::Occ(o, constraint.clone()));
        }
    }

    fn on_new_pair(&mut self, z: NtId, var: VarId, pair: TyPair) {
        let constraint = if self.options.ftty {
            Constraint::UsePair(var, pair)
        } else {
            Constraint::Free
        };
        if !self.demand_rules.contains(&z) {
            self.push(Work::Rule(z, constraint.clone()));
        }
        let touched: Vec<TermId> = self
            .occurrences
            .iter()
            .copied()
            .filter(|&o| {
                self.scheme.owner(o) == Some(z) && self.scheme.terms.mentions_var(o, var)
            })
            .collect();
        for o in touched {
            self.push(Work::Occ(o, constraint.clone()));
        }
    }
}

/// Re-types every rule and occurrence unconstrained and reports whether
/// anything new would appear — false means the state was not a fixpoint.
pub fn verify_fixpoint(scheme: &Scheme, letters: &Letters, sat: &mut Saturation) -> bool {
    let mut steps = 0;
    for i in 0..scheme.nt_count() {
        let x = NtId(i as u32);
        let source = PairSource::Candidates;
        let view = TableView {
            bindings: &sat.table.bindings,
            candidates: &sat.table.candidates,
        };
        let derivs = type_rule(
            scheme,
            letters,
            &mut sat.tys,
            view,
            source,
            Marker::None,
            x,
            &mut steps,
        );
        for d in derivs {
            if !sat.table.has_binding((x, d.prod, d.ty)) {
                return false;
            }
            let known = sat
                .table
                .records
                .get(&(x, d.prod, d.ty))
                .is_some_and(|rs| {
                    rs.iter()
                        .any(|r| r.asms == d.asms && r.value.dominates(&d.value))
                });
            if !known {
                return false;
            }
        }
    }
    for o in sat.flows.occurrences() {
        let view = TableView {
            bindings: &sat.table.bindings,
            candidates: &sat.table.candidates,
        };
        let pairs = type_occurrence(
            scheme,
            letters,
            &mut sat.tys,
            view,
            Marker::None,
            o,
            &mut steps,
        );
        for pair in pairs {
            if !sat
                .table
                .occ_pairs
                .get(&o)
                .is_some_and(|ps| ps.contains(&pair))
            {
                return false;
            }
        }
    }
    true
}

/// Canonical, interner-independent rendering of the whole table — one line
/// per binding with its records — for dumps and cross-run comparison.
pub fn render_table(scheme: &Scheme, letters: &Letters, sat: &Saturation) -> Vec<String> {
    let keys = sat
        .table
        .bindings
        .iter()
        .flat_map(|(&nt, pairs)| pairs.iter().map(move |&(prod, ty)| (nt, prod, ty)))
        .collect();
    render_table_for(scheme, letters, &sat.tys, &sat.table, &keys)
}

/// Rendering restricted to the given bindings (e.g. the reachable part).
pub fn render_table_for(
    scheme: &Scheme,
    letters: &Letters,
    tys: &TyInterner,
    table: &BindingTable,
    keys: &BTreeSet<AsmKey>,
) -> Vec<String> {
    let mut lines = Vec::new();
    for &(nt, prod, ty) in keys {
        let mut records: Vec<String> = table
            .records
            .get(&(nt, prod, ty))
            .map(|rs| {
                rs.iter()
                    .map(|r| {
                        let asms: Vec<String> = r
                            .asms
                            .iter()
                            .map(|((n, a, t), c)| {
                                format!(
                                    "{}:({}, {})x{}",
                                    scheme.nt_name(*n),
                                    a.render(letters),
                                    tys.render(*t, letters),
                                    c
                                )
                            })
                            .collect();
                        format!("[{}] v={}", asms.join(", "), r.value.render(letters))
                    })
                    .collect()
            })
            .unwrap_or_default();
        records.sort();
        lines.push(format!(
            "{} : ({}, {}) {}",
            scheme.nt_name(nt),
            prod.render(letters),
            tys.render(ty, letters),
            records.join(" ")
        ));
    }
    lines.sort();
    lines
}
