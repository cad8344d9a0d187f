//! Parsing the scheme input format.
//!
//! A file holds marker-delimited sections: `%BEGING … %ENDG` with the rules,
//! `%BEGINT … %ENDT` with terminal arity declarations, and an optional
//! `%BEGINI … %ENDI` naming the important letters. `//` starts a line
//! comment and every declaration ends with `.`. Nonterminal names start
//! with an uppercase letter; parameters and terminals are lowercase; the
//! first rule's head is the start symbol. Application is left-associative
//! and parentheses group.
//!
//! Parameter sorts are inferred from use by unification. A parameter the
//! rules never constrain needs an explicit annotation in the rule header,
//! written `(x : o -> o)`; the sort grammar is `o` for the base sort and
//! right-associative arrows with parentheses.

use crate::scheme::{Scheme, SchemeBuilder, OMEGA};
use crate::sort::SortId;
use crate::term::{ConstId, NtId, TermId, VarId};
use crate::types::Letters;
use std::collections::HashMap;
use std::fmt;

/// A parse failure with its source position (1-based line and column).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Pos {
    line: u32,
    col: u32,
}

fn perr<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line: pos.line, col: pos.col, msg: msg.into() })
}

fn pe(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError { line: pos.line, col: pos.col, msg: msg.into() }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(u32),
    Marker(String),
    Arrow,
    Dot,
    LParen,
    RParen,
    Colon,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Nat(n) => write!(f, "{n}"),
            Tok::Marker(m) => write!(f, "{m}"),
            Tok::Arrow => write!(f, "->"),
            Tok::Dot => write!(f, "."),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Colon => write!(f, ":"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_part(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn starts_upper(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
            }
            _ if c.is_whitespace() => {
                col += 1;
                i += 1;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                toks.push((Tok::Arrow, pos));
                i += 2;
                col += 2;
            }
            '.' => {
                toks.push((Tok::Dot, pos));
                i += 1;
                col += 1;
            }
            '(' => {
                toks.push((Tok::LParen, pos));
                i += 1;
                col += 1;
            }
            ')' => {
                toks.push((Tok::RParen, pos));
                i += 1;
                col += 1;
            }
            ':' => {
                toks.push((Tok::Colon, pos));
                i += 1;
                col += 1;
            }
            '%' => {
                let start = i;
                i += 1;
                while i < chars.len() && is_ident_part(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                toks.push((Tok::Marker(word), pos));
            }
            _ if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_part(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                toks.push((Tok::Ident(word), pos));
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                let n: u32 = match word.parse() {
                    Ok(n) => n,
                    Err(_) => return perr(pos, format!("number {word} is too large")),
                };
                toks.push((Tok::Nat(n), pos));
            }
            _ => return perr(pos, format!("unexpected character {c:?}")),
        }
    }
    Ok(toks)
}

/// The tokens of one marker-delimited section, with the positions of its
/// opening marker and of the token just past its end (for EOF reporting).
struct Section {
    toks: Vec<(Tok, Pos)>,
    begin: Pos,
    end: Pos,
}

fn split_sections(
    toks: Vec<(Tok, Pos)>,
) -> Result<(Section, Section, Option<Section>), ParseError> {
    let eof = toks.last().map(|&(_, p)| p).unwrap_or(Pos { line: 1, col: 1 });
    let mut g: Option<Section> = None;
    let mut t: Option<Section> = None;
    let mut imp: Option<Section> = None;
    let mut i = 0usize;
    while i < toks.len() {
        let (tok, pos) = &toks[i];
        let Tok::Marker(m) = tok else {
            return perr(*pos, "expected a section marker (%BEGING, %BEGINT, or %BEGINI)");
        };
        let end_m = match m.as_str() {
            "%BEGING" => "%ENDG",
            "%BEGINT" => "%ENDT",
            "%BEGINI" => "%ENDI",
            _ => return perr(*pos, format!("unknown section marker {m}")),
        };
        let begin = *pos;
        i += 1;
        let start_i = i;
        loop {
            match toks.get(i) {
                None => return perr(begin, format!("unclosed {m} section: missing {end_m}")),
                Some((Tok::Marker(m2), p2)) => {
                    if m2 == end_m {
                        break;
                    }
                    return perr(*p2, format!("expected {end_m} before {m2}"));
                }
                Some(_) => i += 1,
            }
        }
        let end = toks[i].1;
        let sec = Section { toks: toks[start_i..i].to_vec(), begin, end };
        let slot = match m.as_str() {
            "%BEGING" => &mut g,
            "%BEGINT" => &mut t,
            _ => &mut imp,
        };
        if slot.is_some() {
            return perr(begin, format!("duplicate {m} section"));
        }
        *slot = Some(sec);
        i += 1;
    }
    let g = g.ok_or_else(|| pe(eof, "missing %BEGING section"))?;
    let t = t.ok_or_else(|| pe(eof, "missing %BEGINT section"))?;
    Ok((g, t, imp))
}

/// Cursor over a token slice; `end` positions errors at the section close.
struct Cur<'a> {
    toks: &'a [(Tok, Pos)],
    i: usize,
    end: Pos,
}

impl<'a> Cur<'a> {
    fn new(toks: &'a [(Tok, Pos)], end: Pos) -> Self {
        Cur { toks, i: 0, end }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map(|&(_, p)| p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<(Tok, Pos)> {
        let r = self.toks.get(self.i).cloned();
        if r.is_some() {
            self.i += 1;
        }
        r
    }

    fn at_end(&self) -> bool {
        self.i >= self.toks.len()
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match self.bump() {
            Some((Tok::Ident(s), p)) => Ok((s, p)),
            Some((t, p)) => perr(p, format!("expected {what}, found {t}")),
            None => perr(self.end, format!("expected {what}")),
        }
    }

    fn nat(&mut self, what: &str) -> Result<(u32, Pos), ParseError> {
        match self.bump() {
            Some((Tok::Nat(n), p)) => Ok((n, p)),
            Some((t, p)) => perr(p, format!("expected {what}, found {t}")),
            None => perr(self.end, format!("expected {what}")),
        }
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<Pos, ParseError> {
        match self.bump() {
            Some((t, p)) if t == *want => Ok(p),
            Some((t, p)) => perr(p, format!("expected {what}, found {t}")),
            None => perr(self.end, format!("expected {what}")),
        }
    }
}

fn parse_terminals(sec: &Section) -> Result<Vec<(String, u32, Pos)>, ParseError> {
    let mut cur = Cur::new(&sec.toks, sec.end);
    let mut out: Vec<(String, u32, Pos)> = Vec::new();
    while !cur.at_end() {
        let (name, pos) = cur.ident("a terminal name")?;
        if starts_upper(&name) {
            return perr(pos, format!("terminal names start with a lowercase letter: {name}"));
        }
        cur.expect(&Tok::Arrow, "'->' in a terminal declaration")?;
        let (arity, apos) = cur.nat("an arity")?;
        cur.expect(&Tok::Dot, "'.' after a terminal declaration")?;
        if out.iter().any(|(n, _, _)| *n == name) {
            return perr(pos, format!("terminal {name} declared twice"));
        }
        if name == OMEGA && arity != 0 {
            return perr(apos, "omega is reserved and must have arity 0");
        }
        out.push((name, arity, pos));
    }
    Ok(out)
}

fn parse_importants(sec: &Section) -> Result<Vec<(String, Pos)>, ParseError> {
    let mut cur = Cur::new(&sec.toks, sec.end);
    let mut out: Vec<(String, Pos)> = Vec::new();
    while !cur.at_end() {
        let (name, pos) = cur.ident("an important letter")?;
        cur.expect(&Tok::Dot, "'.' after an important letter")?;
        if !out.iter().any(|(n, _)| *n == name) {
            out.push((name, pos));
        }
    }
    Ok(out)
}

/// Sort expressions as written in parameter annotations.
#[derive(Clone, Debug)]
enum SortAst {
    Base,
    Arrow(Box<SortAst>, Box<SortAst>),
}

fn parse_sort(cur: &mut Cur<'_>) -> Result<SortAst, ParseError> {
    let a = parse_sort_atom(cur)?;
    if matches!(cur.peek(), Some(Tok::Arrow)) {
        cur.bump();
        let b = parse_sort(cur)?;
        Ok(SortAst::Arrow(Box::new(a), Box::new(b)))
    } else {
        Ok(a)
    }
}

fn parse_sort_atom(cur: &mut Cur<'_>) -> Result<SortAst, ParseError> {
    match cur.bump() {
        Some((Tok::Ident(s), _)) if s == "o" => Ok(SortAst::Base),
        Some((Tok::LParen, _)) => {
            let s = parse_sort(cur)?;
            cur.expect(&Tok::RParen, "')' closing the sort")?;
            Ok(s)
        }
        Some((t, p)) => perr(p, format!("expected a sort ('o' or an arrow), found {t}")),
        None => perr(cur.end, "expected a sort ('o' or an arrow)"),
    }
}

/// An applicative term in spine form: parenthesized heads are flattened, so
/// the head is always an identifier.
struct PTerm {
    name: String,
    pos: Pos,
    args: Vec<PTerm>,
}

fn parse_atom(cur: &mut Cur<'_>) -> Result<PTerm, ParseError> {
    match cur.bump() {
        Some((Tok::Ident(name), pos)) => Ok(PTerm { name, pos, args: Vec::new() }),
        Some((Tok::LParen, _)) => {
            let t = parse_term(cur)?;
            cur.expect(&Tok::RParen, "')' closing the group")?;
            Ok(t)
        }
        Some((t, p)) => perr(p, format!("expected a term, found {t}")),
        None => perr(cur.end, "expected a term"),
    }
}

fn parse_term(cur: &mut Cur<'_>) -> Result<PTerm, ParseError> {
    let mut t = parse_atom(cur)?;
    while matches!(cur.peek(), Some(Tok::Ident(_)) | Some(Tok::LParen)) {
        let a = parse_atom(cur)?;
        t.args.push(a);
    }
    Ok(t)
}

struct RawParam {
    name: String,
    pos: Pos,
    ann: Option<SortAst>,
}

struct RawRule {
    name: String,
    pos: Pos,
    params: Vec<RawParam>,
    body: PTerm,
}

fn split_rules(sec: &Section) -> Result<Vec<(Vec<(Tok, Pos)>, Pos)>, ParseError> {
    let mut rules = Vec::new();
    let mut acc: Vec<(Tok, Pos)> = Vec::new();
    for (tok, pos) in &sec.toks {
        if *tok == Tok::Dot {
            if acc.is_empty() {
                return perr(*pos, "expected a rule before '.'");
            }
            rules.push((std::mem::take(&mut acc), *pos));
        } else {
            acc.push((tok.clone(), *pos));
        }
    }
    if let Some(&(_, pos)) = acc.first() {
        return perr(pos, "rule is not terminated by '.'");
    }
    Ok(rules)
}

fn parse_rule(toks: &[(Tok, Pos)], end: Pos) -> Result<RawRule, ParseError> {
    let mut cur = Cur::new(toks, end);
    let (name, pos) = cur.ident("a rule head")?;
    if !starts_upper(&name) {
        return perr(pos, format!("nonterminal names start with an uppercase letter: {name}"));
    }
    let mut params: Vec<RawParam> = Vec::new();
    loop {
        match cur.peek() {
            Some(Tok::Arrow) => {
                cur.bump();
                break;
            }
            Some(Tok::Ident(_)) => {
                let (pname, ppos) = cur.ident("a parameter")?;
                if starts_upper(&pname) {
                    return perr(
                        ppos,
                        format!("parameter names start with a lowercase letter: {pname}"),
                    );
                }
                params.push(RawParam { name: pname, pos: ppos, ann: None });
            }
            Some(Tok::LParen) => {
                cur.bump();
                let (pname, ppos) = cur.ident("a parameter name")?;
                if starts_upper(&pname) {
                    return perr(
                        ppos,
                        format!("parameter names start with a lowercase letter: {pname}"),
                    );
                }
                cur.expect(&Tok::Colon, "':' in a parameter annotation")?;
                let ann = parse_sort(&mut cur)?;
                cur.expect(&Tok::RParen, "')' closing the annotation")?;
                params.push(RawParam { name: pname, pos: ppos, ann: Some(ann) });
            }
            _ => return perr(cur.pos(), "expected a parameter or '->' in the rule header"),
        }
    }
    for (i, p) in params.iter().enumerate() {
        if params[..i].iter().any(|q| q.name == p.name) {
            return perr(p.pos, format!("duplicate parameter {}", p.name));
        }
    }
    let body = parse_term(&mut cur)?;
    if !cur.at_end() {
        return perr(cur.pos(), format!("unexpected {} after the rule body", cur.peek().unwrap()));
    }
    Ok(RawRule { name, pos, params, body })
}

/// Sort terms for unification: an arena of nodes plus bindings for the
/// metavariables. Node 0 is the base sort.
struct Infer {
    nodes: Vec<SNode>,
    binds: Vec<Option<usize>>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum SNode {
    Base,
    Var(u32),
    Arrow(usize, usize),
}

impl Infer {
    fn new() -> Self {
        Infer { nodes: vec![SNode::Base], binds: Vec::new() }
    }

    fn base(&self) -> usize {
        0
    }

    fn fresh(&mut self) -> usize {
        let v = self.binds.len() as u32;
        self.binds.push(None);
        self.nodes.push(SNode::Var(v));
        self.nodes.len() - 1
    }

    fn arrow(&mut self, a: usize, b: usize) -> usize {
        self.nodes.push(SNode::Arrow(a, b));
        self.nodes.len() - 1
    }

    fn resolve(&self, mut id: usize) -> usize {
        while let SNode::Var(v) = self.nodes[id] {
            match self.binds[v as usize] {
                Some(t) => id = t,
                None => break,
            }
        }
        id
    }

    fn occurs(&self, v: u32, id: usize) -> bool {
        match self.nodes[self.resolve(id)] {
            SNode::Base => false,
            SNode::Var(w) => w == v,
            SNode::Arrow(a, b) => self.occurs(v, a) || self.occurs(v, b),
        }
    }

    /// Structural unification with an occurs check; `Err` means the two
    /// sides are irreconcilable (some bindings may already have been made).
    fn unify(&mut self, a: usize, b: usize) -> Result<(), ()> {
        let a = self.resolve(a);
        let b = self.resolve(b);
        if a == b {
            return Ok(());
        }
        match (self.nodes[a], self.nodes[b]) {
            (SNode::Var(v), _) => {
                if self.occurs(v, b) {
                    return Err(());
                }
                self.binds[v as usize] = Some(b);
                Ok(())
            }
            (_, SNode::Var(w)) => {
                if self.occurs(w, a) {
                    return Err(());
                }
                self.binds[w as usize] = Some(a);
                Ok(())
            }
            (SNode::Base, SNode::Base) => Ok(()),
            (SNode::Arrow(a1, r1), SNode::Arrow(a2, r2)) => {
                self.unify(a1, a2)?;
                self.unify(r1, r2)
            }
            _ => Err(()),
        }
    }

    /// Binds every still-free metavariable to the base sort.
    fn ground_to_base(&mut self) {
        for b in self.binds.iter_mut() {
            if b.is_none() {
                *b = Some(0);
            }
        }
    }

    fn render(&self, id: usize) -> String {
        let mut out = String::new();
        self.render_into(id, false, &mut out);
        out
    }

    fn render_into(&self, id: usize, arg_pos: bool, out: &mut String) {
        match self.nodes[self.resolve(id)] {
            SNode::Base => out.push('o'),
            SNode::Var(_) => out.push('?'),
            SNode::Arrow(a, b) => {
                if arg_pos {
                    out.push('(');
                }
                self.render_into(a, true, out);
                out.push_str(" -> ");
                self.render_into(b, false, out);
                if arg_pos {
                    out.push(')');
                }
            }
        }
    }

    fn from_ast(&mut self, a: &SortAst) -> usize {
        match a {
            SortAst::Base => self.base(),
            SortAst::Arrow(x, y) => {
                let l = self.from_ast(x);
                let r = self.from_ast(y);
                self.arrow(l, r)
            }
        }
    }

    fn lower(&self, id: usize, b: &mut SchemeBuilder) -> SortId {
        match self.nodes[self.resolve(id)] {
            SNode::Base => b.base(),
            SNode::Arrow(x, y) => {
                let l = self.lower(x, b);
                let r = self.lower(y, b);
                b.arrow(l, r)
            }
            SNode::Var(_) => unreachable!("ambiguous sorts are rejected before lowering"),
        }
    }
}

fn occurs_in(t: &PTerm, name: &str) -> bool {
    t.name == name || t.args.iter().any(|a| occurs_in(a, name))
}

fn counted(n: usize, noun: &str) -> String {
    if n == 1 {
        format!("{n} {noun}")
    } else {
        format!("{n} {noun}s")
    }
}

struct BodyCx<'a> {
    inf: &'a mut Infer,
    heads: &'a HashMap<String, usize>,
    nt_node: &'a [usize],
    arities: &'a HashMap<String, u32>,
    params: &'a HashMap<String, usize>,
}

fn infer_term(cx: &mut BodyCx<'_>, t: &PTerm) -> Result<usize, ParseError> {
    let head = if starts_upper(&t.name) {
        match cx.heads.get(&t.name) {
            Some(&i) => cx.nt_node[i],
            None => return perr(t.pos, format!("nonterminal {} has no rule", t.name)),
        }
    } else if let Some(&node) = cx.params.get(&t.name) {
        node
    } else if let Some(&arity) = cx.arities.get(&t.name) {
        if t.args.len() > arity as usize {
            return perr(
                t.pos,
                format!(
                    "terminal {} takes {} but is applied to {}",
                    t.name,
                    counted(arity as usize, "argument"),
                    counted(t.args.len(), "argument")
                ),
            );
        }
        let base = cx.inf.base();
        let mut s = base;
        for _ in 0..arity {
            s = cx.inf.arrow(base, s);
        }
        s
    } else {
        return perr(t.pos, format!("undeclared terminal {}", t.name));
    };
    let mut cur = head;
    for a in &t.args {
        let asort = infer_term(cx, a)?;
        let res = cx.inf.fresh();
        let want = cx.inf.arrow(asort, res);
        if cx.inf.unify(cur, want).is_err() {
            return perr(
                a.pos,
                format!(
                    "sort conflict at the application of {}: a function of sort {} cannot \
                     take an argument of sort {}",
                    t.name,
                    cx.inf.render(cur),
                    cx.inf.render(asort)
                ),
            );
        }
        cur = res;
    }
    Ok(cur)
}

fn lower_term(
    b: &mut SchemeBuilder,
    t: &PTerm,
    vars: &HashMap<String, VarId>,
    nts: &HashMap<String, NtId>,
    consts: &HashMap<String, ConstId>,
) -> TermId {
    let head = if starts_upper(&t.name) {
        b.tnt(nts[&t.name])
    } else if let Some(&v) = vars.get(&t.name) {
        b.tvar(v)
    } else {
        b.tconst(consts[&t.name])
    };
    let args: Vec<TermId> = t.args.iter().map(|a| lower_term(b, a, vars, nts, consts)).collect();
    b.tapps(head, &args)
}

/// Parses a scheme file. The first rule's head is the start symbol; sorts
/// of parameters and nonterminals are inferred by unification, with
/// explicit annotations breaking ties the rules leave open.
pub fn parse_scheme(text: &str) -> Result<Scheme, ParseError> {
    let toks = lex(text)?;
    let (gsec, tsec, isec) = split_sections(toks)?;

    let terminals = parse_terminals(&tsec)?;
    let importants = match &isec {
        Some(sec) => parse_importants(sec)?,
        None => Vec::new(),
    };

    let mut arities: HashMap<String, u32> = HashMap::new();
    arities.insert(OMEGA.to_string(), 0);
    for (name, arity, _) in &terminals {
        arities.insert(name.clone(), *arity);
    }

    let chunks = split_rules(&gsec)?;
    if chunks.is_empty() {
        return perr(gsec.begin, "no rules declared: the start symbol is missing");
    }
    let mut rules: Vec<RawRule> = Vec::new();
    for (toks, dot) in &chunks {
        let rule = parse_rule(toks, *dot)?;
        if rules.iter().any(|r| r.name == rule.name) {
            return perr(rule.pos, format!("duplicate rule for {}", rule.name));
        }
        rules.push(rule);
    }

    let mut heads: HashMap<String, usize> = HashMap::new();
    for (i, r) in rules.iter().enumerate() {
        heads.insert(r.name.clone(), i);
    }

    // Structural checks that need no sorts: parameters may not shadow
    // terminals, and a rule may not be a bare nonterminal.
    for r in &rules {
        for p in &r.params {
            if arities.contains_key(&p.name) {
                return perr(p.pos, format!("parameter {} shadows a terminal", p.name));
            }
        }
        if starts_upper(&r.body.name) && r.body.args.is_empty() {
            return perr(r.body.pos, format!("rule for {} is a bare nonterminal", r.name));
        }
    }

    // Sort inference. Every nonterminal and every unannotated parameter gets
    // a metavariable; each rule contributes the constraint
    // `sort(X) = sort(x₁) → … → sort(xₖ) → sort(body)`.
    let mut inf = Infer::new();
    let nt_node: Vec<usize> = rules.iter().map(|_| inf.fresh()).collect();
    let param_nodes: Vec<Vec<usize>> = rules
        .iter()
        .map(|r| {
            r.params
                .iter()
                .map(|p| match &p.ann {
                    Some(ast) => inf.from_ast(ast),
                    None => inf.fresh(),
                })
                .collect()
        })
        .collect();

    for (i, r) in rules.iter().enumerate() {
        let params: HashMap<String, usize> = r
            .params
            .iter()
            .zip(&param_nodes[i])
            .map(|(p, &n)| (p.name.clone(), n))
            .collect();
        let body_sort = {
            let mut cx = BodyCx {
                inf: &mut inf,
                heads: &heads,
                nt_node: &nt_node,
                arities: &arities,
                params: &params,
            };
            infer_term(&mut cx, &r.body)?
        };
        let mut rhs = body_sort;
        for &p in param_nodes[i].iter().rev() {
            rhs = inf.arrow(p, rhs);
        }
        if inf.unify(nt_node[i], rhs).is_err() {
            return perr(
                r.pos,
                format!(
                    "sort conflict: the rule for {} has sort {} but {} is used with sort {}",
                    r.name,
                    inf.render(rhs),
                    r.name,
                    inf.render(nt_node[i])
                ),
            );
        }
    }

    // The start symbol (the first rule) must have base sort. When its body
    // is an under-applied terminal the honest complaint is the arity.
    let start = &rules[0];
    if !start.params.is_empty() {
        return perr(
            start.pos,
            format!("start symbol {} must have base sort (its rule has parameters)", start.name),
        );
    }
    let base = inf.base();
    if inf.unify(nt_node[0], base).is_err() {
        let b = &start.body;
        if let Some(&arity) = arities.get(&b.name) {
            if !starts_upper(&b.name) && b.args.len() < arity as usize {
                return perr(
                    b.pos,
                    format!(
                        "terminal {} takes {} but is applied to {}",
                        b.name,
                        counted(arity as usize, "argument"),
                        counted(b.args.len(), "argument")
                    ),
                );
            }
        }
        return perr(
            start.pos,
            format!(
                "start symbol {} must have base sort, not {}",
                start.name,
                inf.render(nt_node[0])
            ),
        );
    }

    // A parameter no use constrains needs an annotation. Any metavariable
    // still free after that check is only generically constrained (for
    // example the parameter of `F x -> a (F x)`, which any sort fits) and
    // is grounded to the base sort, the least instance of its shape.
    for r in &rules {
        for p in &r.params {
            if p.ann.is_none() && !occurs_in(&r.body, &p.name) {
                return perr(
                    p.pos,
                    format!(
                        "parameter {} is never used and its sort cannot be inferred; \
                         annotate it, e.g. ({} : o)",
                        p.name, p.name
                    ),
                );
            }
        }
    }
    inf.ground_to_base();

    // Lowering into the builder.
    let mut b = SchemeBuilder::new();
    let mut consts: HashMap<String, ConstId> = HashMap::new();
    consts.insert(OMEGA.to_string(), b.omega_const());
    for (name, arity, _) in &terminals {
        consts.insert(name.clone(), b.terminal(name, *arity));
    }
    let mut nts: HashMap<String, NtId> = HashMap::new();
    for (i, r) in rules.iter().enumerate() {
        let sort = inf.lower(nt_node[i], &mut b);
        nts.insert(r.name.clone(), b.nonterminal(&r.name, sort));
    }
    for (i, r) in rules.iter().enumerate() {
        let nt = nts[&r.name];
        let mut vars: HashMap<String, VarId> = HashMap::new();
        let mut param_ids = Vec::new();
        for (p, &n) in r.params.iter().zip(&param_nodes[i]) {
            let sort = inf.lower(n, &mut b);
            let v = b.param(nt, &p.name, sort);
            vars.insert(p.name.clone(), v);
            param_ids.push(v);
        }
        let body = lower_term(&mut b, &r.body, &vars, &nts, &consts);
        b.set_body(nt, param_ids, body);
    }
    for (name, pos) in &importants {
        if name == OMEGA {
            return perr(*pos, "omega cannot be an important letter");
        }
        if !consts.contains_key(name) {
            return perr(*pos, format!("important letter {name} is not a declared terminal"));
        }
        b.important(name);
    }
    b.finish(&rules[0].name).map_err(|msg| pe(Pos { line: 1, col: 1 }, msg))
}

/// The letters a run analyzes: an explicit override wins, otherwise the
/// file's declared important letters. Declaring none is an error — silently
/// defaulting would change the problem instance.
pub fn letters_for(scheme: &Scheme, override_names: Option<&[String]>) -> Result<Letters, String> {
    let names: Vec<String> = match override_names {
        Some(ns) => {
            let mut out: Vec<String> = Vec::new();
            for n in ns {
                let id = scheme
                    .terminal_by_name(n)
                    .ok_or_else(|| format!("important letter {n} is not a declared terminal"))?;
                if id == scheme.omega {
                    return Err("omega cannot be an important letter".into());
                }
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            out
        }
        None => scheme.important.iter().map(|&c| scheme.terminal(c).name.clone()).collect(),
    };
    if names.is_empty() {
        return Err(
            "no important letters declared: add a %BEGINI section or pass --letters".into()
        );
    }
    if names.len() > 16 {
        return Err(format!("at most 16 important letters are supported, got {}", names.len()));
    }
    Ok(Letters::new(names))
}
