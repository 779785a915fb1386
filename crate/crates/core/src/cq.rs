//! Conjunctive queries, TGD/EGD constraints, homomorphisms, containment and
//! the translations between SPARQL queries and conjunctive queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::chase::{self, ChaseOutcome, Instance, Value};
use crate::error::{Error, Result};
use crate::rdf::lex::{Cursor, Tok};
use crate::rdf::{Term, Variable};
use crate::syntax::{SparqlExpr, SparqlQuery, TriplePattern};

/// Name of the ternary relation used by the triple translation.
pub const TRIPLE_RELATION: &str = "T";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CqTerm {
    Var(String),
    Const(Term),
}

impl CqTerm {
    pub fn var(s: impl Into<String>) -> Self {
        CqTerm::Var(s.into())
    }

    pub fn iri(s: impl Into<String>) -> Self {
        CqTerm::Const(Term::Iri(s.into()))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            CqTerm::Var(v) => Some(v),
            CqTerm::Const(_) => None,
        }
    }

    fn from_rdf(t: &Term) -> CqTerm {
        match t {
            Term::Var(v) => CqTerm::Var(v.0.clone()),
            other => CqTerm::Const(other.clone()),
        }
    }

    fn to_rdf(&self) -> Term {
        match self {
            CqTerm::Var(v) => Term::var(v.clone()),
            CqTerm::Const(c) => c.clone(),
        }
    }
}

impl fmt::Display for CqTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CqTerm::Var(v) => write!(f, "?{v}"),
            CqTerm::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub relation: String,
    pub args: Vec<CqTerm>,
}

impl Atom {
    pub fn new(relation: impl Into<String>, args: Vec<CqTerm>) -> Self {
        Atom { relation: relation.into(), args }
    }

    /// Shorthand: arguments starting with `?` are variables, others IRIs,
    /// quoted ones literals.
    pub fn parse_args(relation: &str, args: &[&str]) -> Self {
        let args = args
            .iter()
            .map(|a| {
                if let Some(v) = a.strip_prefix('?') {
                    CqTerm::var(v)
                } else if a.len() >= 2 && (a.starts_with('\'') || a.starts_with('"')) {
                    CqTerm::Const(Term::lit(&a[1..a.len() - 1]))
                } else {
                    CqTerm::iri(*a)
                }
            })
            .collect();
        Atom::new(relation, args)
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|a| a.as_var())
    }

    pub fn positions(&self) -> impl Iterator<Item = (Position, &CqTerm)> {
        self.args.iter().enumerate().map(|(i, t)| (Position::new(&self.relation, i + 1), t))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

pub fn atoms_vars(atoms: &[Atom]) -> BTreeSet<String> {
    atoms.iter().flat_map(|a| a.vars().map(String::from)).collect()
}

pub fn atoms_constants(atoms: &[Atom]) -> BTreeSet<Term> {
    atoms
        .iter()
        .flat_map(|a| a.args.iter())
        .filter_map(|t| match t {
            CqTerm::Const(c) => Some(c.clone()),
            CqTerm::Var(_) => None,
        })
        .collect()
}

/// A relation position; `index` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct Position {
    pub relation: String,
    pub index: usize,
}

impl Position {
    pub fn new(relation: &str, index: usize) -> Self {
        Position { relation: relation.to_string(), index }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.relation, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cq {
    pub head: Vec<String>,
    pub body: Vec<Atom>,
}

impl Cq {
    pub fn new(head: Vec<String>, body: Vec<Atom>) -> Result<Self> {
        let vars = atoms_vars(&body);
        if let Some(v) = head.iter().find(|v| !vars.contains(*v)) {
            return Err(Error::Constraint(format!("head variable ?{v} does not occur in the body")));
        }
        Ok(Cq { head, body })
    }

    pub fn vars(&self) -> BTreeSet<String> {
        atoms_vars(&self.body)
    }
}

impl fmt::Display for Cq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ans(")?;
        for (i, v) in self.head.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "?{v}")?;
        }
        write!(f, ") <- ")?;
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tgd {
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
    pub existentials: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Egd {
    pub body: Vec<Atom>,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    Tgd(Tgd),
    Egd(Egd),
}

impl Tgd {
    /// Existential variables are the head variables that do not occur in the body.
    pub fn new(body: Vec<Atom>, head: Vec<Atom>) -> Result<Self> {
        let bv = atoms_vars(&body);
        let existentials = atoms_vars(&head).into_iter().filter(|v| !bv.contains(v)).collect();
        Self::with_existentials(body, head, existentials)
    }

    pub fn with_existentials(body: Vec<Atom>, head: Vec<Atom>, existentials: BTreeSet<String>) -> Result<Self> {
        if head.is_empty() {
            return Err(Error::Constraint("TGD head is empty".into()));
        }
        let bv = atoms_vars(&body);
        if let Some(v) = existentials.iter().find(|v| bv.contains(*v)) {
            return Err(Error::Constraint(format!("existential variable ?{v} occurs in the body")));
        }
        let hv = atoms_vars(&head);
        if let Some(v) = hv.iter().find(|v| !bv.contains(*v) && !existentials.contains(*v)) {
            return Err(Error::Constraint(format!("head variable ?{v} is neither in the body nor existential")));
        }
        let existentials = existentials.into_iter().filter(|v| hv.contains(v)).collect();
        Ok(Tgd { body, head, existentials })
    }

    pub fn universals(&self) -> BTreeSet<String> {
        atoms_vars(&self.body)
    }

    /// Universal variables that also occur in the head.
    pub fn frontier(&self) -> BTreeSet<String> {
        let hv = atoms_vars(&self.head);
        self.universals().into_iter().filter(|v| hv.contains(v)).collect()
    }
}

impl Egd {
    pub fn new(body: Vec<Atom>, left: impl Into<String>, right: impl Into<String>) -> Result<Self> {
        let (left, right) = (left.into(), right.into());
        if body.is_empty() {
            return Err(Error::Constraint("EGD body is empty".into()));
        }
        let bv = atoms_vars(&body);
        for v in [&left, &right] {
            if !bv.contains(v) {
                return Err(Error::Constraint(format!("equated variable ?{v} does not occur in the body")));
            }
        }
        Ok(Egd { body, left, right })
    }
}

impl Constraint {
    pub fn body(&self) -> &[Atom] {
        match self {
            Constraint::Tgd(t) => &t.body,
            Constraint::Egd(e) => &e.body,
        }
    }

    pub fn is_tgd(&self) -> bool {
        matches!(self, Constraint::Tgd(_))
    }

    pub fn as_tgd(&self) -> Option<&Tgd> {
        match self {
            Constraint::Tgd(t) => Some(t),
            Constraint::Egd(_) => None,
        }
    }

    pub fn universals(&self) -> BTreeSet<String> {
        atoms_vars(self.body())
    }

    pub fn body_positions(&self) -> BTreeSet<Position> {
        self.body().iter().flat_map(|a| a.positions().map(|(p, _)| p)).collect()
    }

    pub fn all_positions(&self) -> BTreeSet<Position> {
        let mut out = self.body_positions();
        if let Constraint::Tgd(t) = self {
            out.extend(t.head.iter().flat_map(|a| a.positions().map(|(p, _)| p)));
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<Term> {
        let mut out = atoms_constants(self.body());
        if let Constraint::Tgd(t) = self {
            out.extend(atoms_constants(&t.head));
        }
        out
    }

    /// Number of atoms in the body.
    pub fn size(&self) -> usize {
        self.body().len()
    }

    fn fmt_with(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, atoms: &[Atom]| -> fmt::Result {
            for (i, a) in atoms.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            Ok(())
        };
        list(f, self.body())?;
        write!(f, " -> ")?;
        match self {
            Constraint::Tgd(t) => {
                if !t.existentials.is_empty() {
                    let ex: Vec<String> = t.existentials.iter().map(|v| format!("?{v}")).collect();
                    write!(f, "exists {} . ", ex.join(", "))?;
                }
                list(f, &t.head)
            }
            Constraint::Egd(e) => write!(f, "?{} = ?{}", e.left, e.right),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f)
    }
}

/// Renders a constraint set in the file format, with a `const` line when needed.
pub fn format_constraints(sigma: &[Constraint]) -> String {
    let consts: BTreeSet<String> = sigma
        .iter()
        .flat_map(|c| c.constants())
        .filter_map(|t| match t {
            Term::Iri(s) => Some(s),
            _ => None,
        })
        .collect();
    let mut out = String::new();
    if !consts.is_empty() {
        out.push_str(&format!("const {};\n", consts.into_iter().collect::<Vec<_>>().join(", ")));
    }
    for c in sigma {
        out.push_str(&format!("{c}\n"));
    }
    out
}

fn parse_const_decls(c: &mut Cursor, consts: &mut BTreeSet<String>) -> Result<()> {
    while c.is_kw("const") {
        c.next();
        loop {
            match c.next() {
                Some(Tok::Ident(s)) => {
                    consts.insert(s);
                }
                _ => return Err(c.err("expected constant name in declaration")),
            }
            if c.eat_sym(";") {
                break;
            }
            c.expect_sym(",")?;
        }
    }
    Ok(())
}

fn parse_cq_term(c: &mut Cursor, consts: &BTreeSet<String>) -> Result<CqTerm> {
    match c.next() {
        Some(Tok::Var(v)) => Ok(CqTerm::Var(v)),
        Some(Tok::Ident(s)) if consts.contains(&s) => Ok(CqTerm::Const(Term::Iri(s))),
        Some(Tok::Ident(s)) => Ok(CqTerm::Var(s)),
        Some(Tok::Str(s)) => Ok(CqTerm::Const(Term::Literal(s))),
        Some(Tok::Blank(s)) => Ok(CqTerm::Const(Term::Blank(s))),
        _ => {
            c.pos -= 1;
            Err(c.err(format!("expected term, found {}", c.describe())))
        }
    }
}

fn parse_atom(c: &mut Cursor, consts: &BTreeSet<String>) -> Result<Atom> {
    let rel = match c.next() {
        Some(Tok::Ident(s)) => s,
        _ => {
            c.pos -= 1;
            return Err(c.err(format!("expected relation name, found {}", c.describe())));
        }
    };
    c.expect_sym("(")?;
    let mut args = Vec::new();
    if !c.eat_sym(")") {
        loop {
            args.push(parse_cq_term(c, consts)?);
            if c.eat_sym(")") {
                break;
            }
            c.expect_sym(",")?;
        }
    }
    Ok(Atom::new(rel, args))
}

fn parse_atom_list(c: &mut Cursor, consts: &BTreeSet<String>) -> Result<Vec<Atom>> {
    let mut out = vec![parse_atom(c, consts)?];
    while c.eat_sym(",") {
        out.push(parse_atom(c, consts)?);
    }
    Ok(out)
}

fn var_name(t: Tok, c: &Cursor) -> Result<String> {
    match t {
        Tok::Var(v) | Tok::Ident(v) => Ok(v),
        _ => Err(c.err("expected variable")),
    }
}

fn parse_constraint_line(c: &mut Cursor, consts: &BTreeSet<String>) -> Result<Constraint> {
    let body = if c.is_sym("->") { Vec::new() } else { parse_atom_list(c, consts)? };
    c.expect_sym("->")?;
    let egd = matches!(c.peek(), Some(Tok::Var(_) | Tok::Ident(_)))
        && matches!(c.toks.get(c.pos + 1), Some(Tok::Sym("=")))
        && !c.is_kw("exists");
    if egd {
        let l = var_name(c.next().expect("peeked"), c)?;
        c.expect_sym("=")?;
        let r = c.next().ok_or_else(|| c.err("expected variable after '='"))?;
        let r = var_name(r, c)?;
        return Egd::new(body, l, r).map(Constraint::Egd);
    }
    let mut existentials = BTreeSet::new();
    if c.is_kw("exists") {
        c.next();
        loop {
            let t = c.next().ok_or_else(|| c.err("expected existential variable"))?;
            existentials.insert(var_name(t, c)?);
            if c.eat_sym(".") {
                break;
            }
            c.expect_sym(",")?;
        }
    }
    let head = parse_atom_list(c, consts)?;
    let undeclared: Vec<String> = {
        let bv = atoms_vars(&body);
        atoms_vars(&head).into_iter().filter(|v| !bv.contains(v) && !existentials.contains(v)).collect()
    };
    if let Some(v) = undeclared.first() {
        return Err(c.err(format!("head variable {v} is not in the body and not declared with exists")));
    }
    Tgd::with_existentials(body, head, existentials).map(Constraint::Tgd)
}

/// Parses a constraint file: optional `const` declarations then one constraint per line.
pub fn parse_constraints(text: &str) -> Result<Vec<Constraint>> {
    let mut consts = BTreeSet::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = crate::rdf::strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let mut c = Cursor::new(crate::rdf::lex::tokenize(body, i + 1)?, i + 1);
        if c.is_kw("const") {
            parse_const_decls(&mut c, &mut consts)?;
            if c.at_end() {
                continue;
            }
        }
        lines.push(c);
    }
    let mut out = Vec::new();
    for mut c in lines {
        let line = c.current_line();
        let k = parse_constraint_line(&mut c, &consts).map_err(|e| match e {
            Error::Constraint(m) => Error::Constraint(format!("line {line}: {m}")),
            other => other,
        })?;
        if !c.at_end() {
            return Err(c.err(format!("trailing input {}", c.describe())));
        }
        out.push(k);
    }
    Ok(out)
}

/// Parses `ans(x) <- T(x, b, 'l')`, optionally preceded by `const` declarations.
pub fn parse_cq(text: &str) -> Result<Cq> {
    let mut c = Cursor::from_text(text)?;
    let mut consts = BTreeSet::new();
    parse_const_decls(&mut c, &mut consts)?;
    match c.next() {
        Some(Tok::Ident(_)) => {}
        _ => return Err(c.err("expected head atom")),
    }
    c.expect_sym("(")?;
    let mut head = Vec::new();
    if !c.eat_sym(")") {
        loop {
            let t = c.next().ok_or_else(|| c.err("expected head variable"))?;
            head.push(var_name(t, &c)?);
            if c.eat_sym(")") {
                break;
            }
            c.expect_sym(",")?;
        }
    }
    c.expect_sym("<-")?;
    let body = parse_atom_list(&mut c, &consts)?;
    if !c.at_end() {
        return Err(c.err(format!("trailing input {}", c.describe())));
    }
    Cq::new(head, body)
}

// ---------------------------------------------------------------------------
// Homomorphisms

/// Freezes atoms into an instance: each variable becomes a distinct null.
pub(crate) fn freeze(atoms: &[Atom]) -> (Instance, BTreeMap<String, Value>) {
    let mut inst = Instance::new();
    let mut map = BTreeMap::new();
    for v in atoms_vars(atoms) {
        let n = inst.fresh_null();
        map.insert(v, n);
    }
    for a in atoms {
        let args = a
            .args
            .iter()
            .map(|t| match t {
                CqTerm::Var(v) => map[v].clone(),
                CqTerm::Const(c) => Value::Const(c.clone()),
            })
            .collect();
        inst.insert(&a.relation, args);
    }
    (inst, map)
}

/// Finds a homomorphism from `src` to `dst`: constants are fixed, variables
/// of `src` map to terms of `dst`.
pub fn homomorphism(src: &[Atom], dst: &[Atom]) -> Option<BTreeMap<String, CqTerm>> {
    let (inst, map) = freeze(dst);
    let back: BTreeMap<Value, String> = map.into_iter().map(|(k, v)| (v, k)).collect();
    let h = chase::find_homomorphism(src, &inst, &BTreeMap::new())?;
    Some(
        h.into_iter()
            .map(|(k, v)| {
                let t = match &v {
                    Value::Const(c) => CqTerm::Const(c.clone()),
                    Value::Null(_) => CqTerm::Var(back[&v].clone()),
                };
                (k, t)
            })
            .collect(),
    )
}

pub fn homomorphism_exists(src: &[Atom], dst: &[Atom]) -> bool {
    homomorphism(src, dst).is_some()
}

/// Result of a constraint-relative containment check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Containment {
    Holds,
    /// The chase of the left query fails, so it has no answers on models of Σ.
    HoldsVacuously,
    Fails,
    Unknown,
}

impl Containment {
    pub fn holds(self) -> bool {
        matches!(self, Containment::Holds | Containment::HoldsVacuously)
    }
}

/// The chased canonical instance of a CQ, reusable across containment checks.
#[derive(Debug, Clone)]
pub enum ChasedCq {
    Chased { instance: Instance, head: Vec<Value> },
    Failed,
    Unknown,
}

pub fn chase_cq(q: &Cq, sigma: &[Constraint], budget: u64) -> ChasedCq {
    let (inst, map) = freeze(&q.body);
    match chase::chase(&inst, sigma, budget) {
        ChaseOutcome::Terminated { instance, .. } => {
            let head = q.head.iter().map(|v| instance.resolve(&map[v])).collect();
            ChasedCq::Chased { instance, head }
        }
        ChaseOutcome::Failed { .. } => ChasedCq::Failed,
        ChaseOutcome::BudgetExceeded { .. } => ChasedCq::Unknown,
    }
}

/// Whether `q2` maps into an already chased `q` with matching head tuples.
pub fn contained_in_chased(chased: &ChasedCq, q2: &Cq) -> Containment {
    match chased {
        ChasedCq::Failed => Containment::HoldsVacuously,
        ChasedCq::Unknown => Containment::Unknown,
        ChasedCq::Chased { instance, head } => {
            if head.len() != q2.head.len() {
                return Containment::Fails;
            }
            let mut init = BTreeMap::new();
            for (v, val) in q2.head.iter().zip(head) {
                match init.get(v) {
                    Some(prev) if prev != val => return Containment::Fails,
                    _ => {
                        init.insert(v.clone(), val.clone());
                    }
                }
            }
            if chase::find_homomorphism(&q2.body, instance, &init).is_some() {
                Containment::Holds
            } else {
                Containment::Fails
            }
        }
    }
}

/// Decides q ⊑_Σ q2 by chasing the canonical instance of `q`.
pub fn contained_in(q: &Cq, q2: &Cq, sigma: &[Constraint], budget: u64) -> Containment {
    if q.head.len() != q2.head.len() {
        return Containment::Fails;
    }
    contained_in_chased(&chase_cq(q, sigma, budget), q2)
}

/// Σ-equivalence as a three-valued answer: `Some(true/false)` or `None` if undecided.
pub fn equivalent(q: &Cq, q2: &Cq, sigma: &[Constraint], budget: u64) -> Option<bool> {
    let a = contained_in(q, q2, sigma, budget);
    let b = contained_in(q2, q, sigma, budget);
    match (a, b) {
        (Containment::Fails, _) | (_, Containment::Fails) => Some(false),
        (Containment::Unknown, _) | (_, Containment::Unknown) => None,
        _ => Some(true),
    }
}

/// Whether some bijective variable renaming maps `a` onto `b`.
pub fn isomorphic(a: &Cq, b: &Cq) -> bool {
    if a.head.len() != b.head.len() || a.body.len() != b.body.len() {
        return false;
    }
    let sa: BTreeSet<&Atom> = a.body.iter().collect();
    let sb: BTreeSet<&Atom> = b.body.iter().collect();
    if sa.len() != sb.len() || a.vars().len() != b.vars().len() {
        return false;
    }
    let mut m: BTreeMap<String, String> = BTreeMap::new();
    for (x, y) in a.head.iter().zip(&b.head) {
        match m.get(x) {
            Some(z) if z != y => return false,
            _ => {
                m.insert(x.clone(), y.clone());
            }
        }
    }
    let used: BTreeSet<String> = m.values().cloned().collect();
    if used.len() != m.len() {
        return false;
    }
    let atoms: Vec<&Atom> = sa.into_iter().collect();
    let targets: Vec<&Atom> = sb.into_iter().collect();
    fn go(
        i: usize,
        atoms: &[&Atom],
        targets: &[&Atom],
        m: &mut BTreeMap<String, String>,
        used: &mut BTreeSet<String>,
        taken: &mut Vec<bool>,
    ) -> bool {
        if i == atoms.len() {
            return true;
        }
        let a = atoms[i];
        for (j, t) in targets.iter().enumerate() {
            if taken[j] || t.relation != a.relation || t.args.len() != a.args.len() {
                continue;
            }
            let mut added = Vec::new();
            let mut ok = true;
            for (x, y) in a.args.iter().zip(&t.args) {
                match (x, y) {
                    (CqTerm::Const(c), CqTerm::Const(d)) if c == d => {}
                    (CqTerm::Var(v), CqTerm::Var(w)) => match m.get(v) {
                        Some(z) if z == w => {}
                        Some(_) => ok = false,
                        None if used.contains(w) => ok = false,
                        None => {
                            m.insert(v.clone(), w.clone());
                            used.insert(w.clone());
                            added.push(v.clone());
                        }
                    },
                    _ => ok = false,
                }
                if !ok {
                    break;
                }
            }
            if ok {
                taken[j] = true;
                if go(i + 1, atoms, targets, m, used, taken) {
                    return true;
                }
                taken[j] = false;
            }
            for v in added {
                let w = m.remove(&v).expect("added");
                used.remove(&w);
            }
        }
        false
    }
    let mut used = used;
    let mut taken = vec![false; targets.len()];
    go(0, &atoms, &targets, &mut m, &mut used, &mut taken)
}

// ---------------------------------------------------------------------------
// Translations

/// Triple-relation translation of an And-only query.
pub fn c1_translate(q: &SparqlQuery) -> Result<Cq> {
    if !q.body.is_and_only() {
        return Err(Error::Fragment(format!("query body is not And-only: {}", q.body)));
    }
    if q.projection.is_empty() {
        return Err(Error::Fragment("projection is empty".into()));
    }
    let body: Vec<Atom> = q
        .body
        .patterns()
        .into_iter()
        .map(|t| Atom::new(TRIPLE_RELATION, t.terms().iter().map(|x| CqTerm::from_rdf(x)).collect()))
        .collect();
    let head = q.projection.iter().map(|v| v.0.clone()).collect();
    Cq::new(head, body).map_err(|e| Error::Fragment(format!("projection not covered by the body: {e}")))
}

/// Why a CQ has no SPARQL counterpart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Undefined(pub String);

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "undefined: {}", self.0)
    }
}

fn query_from_patterns(head: &[String], pats: Vec<TriplePattern>) -> std::result::Result<SparqlQuery, Undefined> {
    let body = SparqlExpr::and_all(pats.into_iter().map(SparqlExpr::Triple)).ok_or_else(|| Undefined("empty body".into()))?;
    Ok(SparqlQuery::new(head.iter().map(|v| Variable::new(v.clone())), body))
}

pub fn c1_inverse(q: &Cq) -> std::result::Result<SparqlQuery, Undefined> {
    let mut pats = Vec::new();
    for a in &q.body {
        if a.relation != TRIPLE_RELATION || a.arity() != 3 {
            return Err(Undefined(format!("atom {a} is not a triple atom")));
        }
        let t = TriplePattern::new(a.args[0].to_rdf(), a.args[1].to_rdf(), a.args[2].to_rdf())
            .map_err(|_| Undefined(format!("atom {a} violates triple pattern kinds")))?;
        pats.push(t);
    }
    query_from_patterns(&q.head, pats)
}

fn relation_name(t: &Term) -> String {
    match t {
        Term::Iri(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Predicate-relation translation; undefined when a predicate is a variable.
pub fn c2_translate(q: &SparqlQuery) -> std::result::Result<Cq, Undefined> {
    if !q.body.is_and_only() {
        return Err(Undefined(format!("query body is not And-only: {}", q.body)));
    }
    let mut body = Vec::new();
    for t in q.body.patterns() {
        if t.p.is_var() {
            return Err(Undefined(format!("pattern {t} has a variable predicate")));
        }
        body.push(Atom::new(relation_name(&t.p), vec![CqTerm::from_rdf(&t.s), CqTerm::from_rdf(&t.o)]));
    }
    let head = q.projection.iter().map(|v| v.0.clone()).collect();
    Cq::new(head, body).map_err(|e| Undefined(e.to_string()))
}

pub fn c2_inverse(q: &Cq) -> std::result::Result<SparqlQuery, Undefined> {
    let mut pats = Vec::new();
    for a in &q.body {
        if a.arity() != 2 {
            return Err(Undefined(format!("atom {a} is not binary")));
        }
        let t = TriplePattern::new(a.args[0].to_rdf(), Term::Iri(a.relation.clone()), a.args[1].to_rdf())
            .map_err(|_| Undefined(format!("atom {a} violates triple pattern kinds")))?;
        pats.push(t);
    }
    query_from_patterns(&q.head, pats)
}

fn h_image(atoms: &[Atom]) -> Option<Vec<Atom>> {
    let mut out = Vec::new();
    for a in atoms {
        if a.relation != TRIPLE_RELATION || a.arity() != 3 {
            return None;
        }
        if let CqTerm::Const(p) = &a.args[1] {
            out.push(Atom::new(relation_name(p), vec![a.args[0].clone(), a.args[2].clone()]));
        }
    }
    Some(out)
}

/// Relabels each T(a1,a2,a3) atom with a constant a2 as a2(a1,a3) and drops
/// the others. Returns the empty set if any image is not a valid constraint.
pub fn sigma_prime(sigma: &[Constraint]) -> Vec<Constraint> {
    let mut out = Vec::new();
    for c in sigma {
        let image = match c {
            Constraint::Tgd(t) => {
                let (Some(body), Some(head)) = (h_image(&t.body), h_image(&t.head)) else { return Vec::new() };
                let bv = atoms_vars(&body);
                let ex: BTreeSet<String> = t.existentials.iter().filter(|v| !bv.contains(*v)).cloned().collect();
                Tgd::with_existentials(body, head, ex).map(Constraint::Tgd)
            }
            Constraint::Egd(e) => {
                let Some(body) = h_image(&e.body) else { return Vec::new() };
                Egd::new(body, e.left.clone(), e.right.clone()).map(Constraint::Egd)
            }
        };
        match image {
            Ok(k) => out.push(k),
            Err(_) => return Vec::new(),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_select_query;

    fn q1() -> SparqlQuery {
        parse_select_query("SELECT ?x WHERE (?x,b,'l')").unwrap()
    }

    fn q2() -> SparqlQuery {
        parse_select_query("SELECT ?x WHERE (?x,b,'l') AND (?x,a,c)").unwrap()
    }

    #[test]
    fn c1_examples() {
        let c = c1_translate(&q1()).unwrap();
        assert_eq!(c.to_string(), "ans(?x) <- T(?x, b, \"l\")");
        assert_eq!(c1_translate(&q2()).unwrap().body.len(), 2);
        assert_eq!(c1_inverse(&c).unwrap(), q1());
        let bad = Cq::new(vec!["x".into()], vec![Atom::parse_args("T", &["'l'", "b", "?x"])]).unwrap();
        assert!(c1_inverse(&bad).is_err());
        let free = Cq::new(vec!["x".into()], vec![Atom::parse_args("T", &["?x", "?p", "?o"])]).unwrap();
        assert!(c1_inverse(&free).is_ok());
        let opt = parse_select_query("SELECT ?x WHERE (?x,b,c) OPT (?x,d,?e)").unwrap();
        assert!(matches!(c1_translate(&opt), Err(Error::Fragment(_))));
    }

    #[test]
    fn c2_examples() {
        let q = parse_select_query("SELECT ?x WHERE (?x,name,?n) AND (?x,age,?a)").unwrap();
        let c = c2_translate(&q).unwrap();
        assert_eq!(c.to_string(), "ans(?x) <- name(?x, ?n), age(?x, ?a)");
        assert_eq!(c2_inverse(&c).unwrap(), q);
        let v = parse_select_query("SELECT ?x WHERE (?x,?p,?n)").unwrap();
        assert!(c2_translate(&v).is_err());
    }

    #[test]
    fn sigma_prime_examples() {
        let s1 = parse_constraints("const e, d;\nT(e,x1,x2), T(x2,d,d) -> T(x1,x2,x1)").unwrap();
        assert!(sigma_prime(&s1).is_empty());
        let s2 = parse_constraints(
            "const d, e, f, g;
             T(x1,d,x2) -> exists y . T(g,e,y), T(f,d,y)
             T(x1,e,x2) -> exists y . T(g,e,y), T(f,d,y)
             T(x1,d,x2) -> T(x2,e,x1)
             T(x1,e,x2) -> exists y . T(x2,d,y)",
        )
        .unwrap();
        let p = sigma_prime(&s2);
        assert_eq!(p.len(), 4);
        assert_eq!(p[2].to_string(), "d(?x1, ?x2) -> e(?x2, ?x1)");
    }

    #[test]
    fn parse_and_print_constraints() {
        let s = parse_constraints("const p1, p2;\nT(x1,p1,x2) -> exists y . T(x1,p2,y)\nT(x,p,y), T(x,p,z) -> y = z").unwrap();
        assert_eq!(s.len(), 2);
        let Constraint::Tgd(t) = &s[0] else { panic!() };
        assert_eq!(t.existentials, ["y".to_string()].into_iter().collect());
        assert!(matches!(&s[1], Constraint::Egd(e) if e.left == "y" && e.right == "z"));
        assert_eq!(parse_constraints(&format_constraints(&s)).unwrap(), s);
        assert!(parse_constraints("T(x,p,y) -> T(x,p,z)").is_err());
    }

    #[test]
    fn homomorphism_examples() {
        let src = [Atom::parse_args("R", &["?x", "?y"])];
        let dst = [Atom::parse_args("R", &["a", "b"])];
        let h = homomorphism(&src, &dst).unwrap();
        assert_eq!(h["x"], CqTerm::iri("a"));
        assert_eq!(h["y"], CqTerm::iri("b"));
        assert!(!homomorphism_exists(&[Atom::parse_args("R", &["?x", "?x"])], &dst));
    }

    #[test]
    fn noncompleteness_containment() {
        let sigma = parse_constraints("T(x1,x2,x3) -> T(x3,x2,x1)").unwrap();
        let a = c1_translate(&q1()).unwrap();
        let b = c1_translate(&q2()).unwrap();
        assert_eq!(contained_in(&b, &a, &sigma, 1000), Containment::Holds);
        assert_eq!(contained_in(&a, &b, &sigma, 1000), Containment::Fails);
        assert_eq!(contained_in(&a, &a, &[], 1000), Containment::Holds);
    }

    #[test]
    fn egd_failure_is_vacuous() {
        let sigma = parse_constraints("const p;\nT(x,p,y), T(x,p,z) -> y = z").unwrap();
        let q = parse_cq("const p, a, b, s;\nans(x) <- T(x, p, a), T(x, p, b)").unwrap();
        let other = parse_cq("const q;\nans(x) <- T(x, q, x)").unwrap();
        assert_eq!(contained_in(&q, &other, &sigma, 100), Containment::HoldsVacuously);
    }

    #[test]
    fn isomorphism() {
        let a = parse_cq("const p;\nans(x) <- T(x, p, y), T(y, p, z)").unwrap();
        let b = parse_cq("const p;\nans(u) <- T(w, p, v), T(u, p, w)").unwrap();
        let c = parse_cq("const p;\nans(u) <- T(u, p, w), T(u, p, v)").unwrap();
        assert!(isomorphic(&a, &b));
        assert!(!isomorphic(&a, &c));
    }
}
