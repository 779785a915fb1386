//! SPARQL expressions, queries and filter conditions: AST, parser, printer and
//! structural metrics.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::rdf::lex::{Cursor, Tok};
use crate::rdf::{parse_term_triple, term_from_tok, Term, Variable};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FilterCondition {
    Bound(Variable),
    EqConst(Variable, Term),
    EqVar(Variable, Variable),
    Not(Box<FilterCondition>),
    And(Box<FilterCondition>, Box<FilterCondition>),
    Or(Box<FilterCondition>, Box<FilterCondition>),
}

impl FilterCondition {
    pub fn bound(v: &str) -> Self {
        FilterCondition::Bound(Variable::new(v))
    }

    pub fn eq_const(v: &str, c: Term) -> Self {
        assert!(!c.is_var(), "constant expected");
        FilterCondition::EqConst(Variable::new(v), c)
    }

    pub fn eq_var(a: &str, b: &str) -> Self {
        FilterCondition::EqVar(Variable::new(a), Variable::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: FilterCondition) -> Self {
        FilterCondition::Not(Box::new(c))
    }

    pub fn and(a: FilterCondition, b: FilterCondition) -> Self {
        FilterCondition::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: FilterCondition, b: FilterCondition) -> Self {
        FilterCondition::Or(Box::new(a), Box::new(b))
    }

    pub fn vars(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Variable>) {
        match self {
            FilterCondition::Bound(v) | FilterCondition::EqConst(v, _) => {
                out.insert(v.clone());
            }
            FilterCondition::EqVar(a, b) => {
                out.insert(a.clone());
                out.insert(b.clone());
            }
            FilterCondition::Not(c) => c.collect_vars(out),
            FilterCondition::And(a, b) | FilterCondition::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// True for a conjunction of atomic equalities.
    pub fn is_equality_conjunction(&self) -> bool {
        match self {
            FilterCondition::EqConst(..) | FilterCondition::EqVar(..) => true,
            FilterCondition::And(a, b) => a.is_equality_conjunction() && b.is_equality_conjunction(),
            _ => false,
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterCondition::EqConst(..) | FilterCondition::EqVar(..) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

impl fmt::Display for FilterCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterCondition::Bound(v) => write!(f, "bnd({v})"),
            FilterCondition::EqConst(v, c) => write!(f, "{v} = {c}"),
            FilterCondition::EqVar(a, b) => write!(f, "{a} = {b}"),
            FilterCondition::Not(c) => {
                write!(f, "!")?;
                c.fmt_operand(f)
            }
            FilterCondition::And(a, b) => {
                write!(f, "(")?;
                a.fmt_operand(f)?;
                write!(f, " && ")?;
                b.fmt_operand(f)?;
                write!(f, ")")
            }
            FilterCondition::Or(a, b) => {
                write!(f, "(")?;
                a.fmt_operand(f)?;
                write!(f, " || ")?;
                b.fmt_operand(f)?;
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriplePattern {
    pub s: Term,
    pub p: Term,
    pub o: Term,
}

impl TriplePattern {
    pub fn new(s: Term, p: Term, o: Term) -> Result<Self> {
        let t = TriplePattern { s, p, o };
        if !t.s.subject_ok() || !t.p.predicate_ok() {
            return Err(Error::Kind(format!("invalid triple pattern {t}")));
        }
        Ok(t)
    }

    /// Builds a pattern from compact tokens: `?x` variables, `"l"` literals,
    /// `_:b` blanks, anything else an IRI. Panics on kind errors.
    pub fn parse_terms(s: &str, p: &str, o: &str) -> Self {
        fn t(x: &str) -> Term {
            if let Some(v) = x.strip_prefix('?') {
                Term::var(v)
            } else if let Some(b) = x.strip_prefix("_:") {
                Term::Blank(b.into())
            } else if x.len() >= 2 && (x.starts_with('"') || x.starts_with('\'')) {
                Term::lit(&x[1..x.len() - 1])
            } else {
                Term::iri(x)
            }
        }
        Self::new(t(s), t(p), t(o)).expect("well-kinded pattern")
    }

    pub fn vars(&self) -> BTreeSet<Variable> {
        [&self.s, &self.p, &self.o].into_iter().filter_map(|t| t.as_var().cloned()).collect()
    }

    pub fn terms(&self) -> [&Term; 3] {
        [&self.s, &self.p, &self.o]
    }

    /// Replaces every occurrence of variable `from` by `to`.
    pub fn substitute(&self, from: &Variable, to: &Variable) -> Self {
        let f = |t: &Term| match t {
            Term::Var(v) if v == from => Term::Var(to.clone()),
            other => other.clone(),
        };
        TriplePattern { s: f(&self.s), p: f(&self.p), o: f(&self.o) }
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.s, self.p, self.o)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SparqlExpr {
    Triple(TriplePattern),
    And(Box<SparqlExpr>, Box<SparqlExpr>),
    Union(Box<SparqlExpr>, Box<SparqlExpr>),
    Opt(Box<SparqlExpr>, Box<SparqlExpr>),
    Filter(Box<SparqlExpr>, FilterCondition),
    /// Expression whose result is empty on every document.
    Empty,
}

impl SparqlExpr {
    pub fn triple(t: TriplePattern) -> Self {
        SparqlExpr::Triple(t)
    }

    pub fn pat(s: &str, p: &str, o: &str) -> Self {
        SparqlExpr::Triple(TriplePattern::parse_terms(s, p, o))
    }

    pub fn and(a: SparqlExpr, b: SparqlExpr) -> Self {
        SparqlExpr::And(Box::new(a), Box::new(b))
    }

    pub fn union(a: SparqlExpr, b: SparqlExpr) -> Self {
        SparqlExpr::Union(Box::new(a), Box::new(b))
    }

    pub fn opt(a: SparqlExpr, b: SparqlExpr) -> Self {
        SparqlExpr::Opt(Box::new(a), Box::new(b))
    }

    /// Checked constructor enforcing the safe-filter restriction.
    pub fn filter(e: SparqlExpr, r: FilterCondition) -> Result<Self> {
        let ev = e.vars();
        if let Some(v) = r.vars().into_iter().find(|v| !ev.contains(v)) {
            return Err(Error::UnsafeFilter(v.to_string()));
        }
        Ok(SparqlExpr::Filter(Box::new(e), r))
    }

    /// Left-nested conjunction of the given expressions.
    pub fn and_all(items: impl IntoIterator<Item = SparqlExpr>) -> Option<Self> {
        items.into_iter().reduce(SparqlExpr::and)
    }

    pub fn vars(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Variable>) {
        match self {
            SparqlExpr::Triple(t) => out.extend(t.vars()),
            SparqlExpr::And(a, b) | SparqlExpr::Union(a, b) | SparqlExpr::Opt(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            SparqlExpr::Filter(e, r) => {
                e.collect_vars(out);
                out.extend(r.vars());
            }
            SparqlExpr::Empty => {}
        }
    }

    pub fn opt_rank(&self) -> usize {
        match self {
            SparqlExpr::Triple(_) | SparqlExpr::Empty => 0,
            SparqlExpr::Filter(e, _) => e.opt_rank(),
            SparqlExpr::And(a, b) | SparqlExpr::Union(a, b) => a.opt_rank().max(b.opt_rank()),
            SparqlExpr::Opt(a, b) => a.opt_rank().max(b.opt_rank()) + 1,
        }
    }

    pub fn fragment(&self) -> Fragment {
        let mut f = Fragment::default();
        self.scan(&mut f);
        f
    }

    fn scan(&self, f: &mut Fragment) {
        match self {
            SparqlExpr::Triple(_) | SparqlExpr::Empty => {}
            SparqlExpr::And(a, b) => {
                f.and = true;
                a.scan(f);
                b.scan(f);
            }
            SparqlExpr::Union(a, b) => {
                f.union = true;
                a.scan(f);
                b.scan(f);
            }
            SparqlExpr::Opt(a, b) => {
                f.opt = true;
                a.scan(f);
                b.scan(f);
            }
            SparqlExpr::Filter(e, _) => {
                f.filter = true;
                e.scan(f);
            }
        }
    }

    pub fn is_and_only(&self) -> bool {
        let f = self.fragment();
        !f.union && !f.opt && !f.filter && !self.contains_empty()
    }

    fn contains_empty(&self) -> bool {
        match self {
            SparqlExpr::Empty => true,
            SparqlExpr::Triple(_) => false,
            SparqlExpr::And(a, b) | SparqlExpr::Union(a, b) | SparqlExpr::Opt(a, b) => {
                a.contains_empty() || b.contains_empty()
            }
            SparqlExpr::Filter(e, _) => e.contains_empty(),
        }
    }

    /// Triple patterns in left-to-right order.
    pub fn patterns(&self) -> Vec<&TriplePattern> {
        let mut out = Vec::new();
        self.collect_patterns(&mut out);
        out
    }

    fn collect_patterns<'a>(&'a self, out: &mut Vec<&'a TriplePattern>) {
        match self {
            SparqlExpr::Triple(t) => out.push(t),
            SparqlExpr::And(a, b) | SparqlExpr::Union(a, b) | SparqlExpr::Opt(a, b) => {
                a.collect_patterns(out);
                b.collect_patterns(out);
            }
            SparqlExpr::Filter(e, _) => e.collect_patterns(out),
            SparqlExpr::Empty => {}
        }
    }

    /// Textual substitution of `from` by `to` in patterns and filter conditions.
    pub fn substitute(&self, from: &Variable, to: &Variable) -> SparqlExpr {
        let sub = |e: &SparqlExpr| Box::new(e.substitute(from, to));
        match self {
            SparqlExpr::Triple(t) => SparqlExpr::Triple(t.substitute(from, to)),
            SparqlExpr::And(a, b) => SparqlExpr::And(sub(a), sub(b)),
            SparqlExpr::Union(a, b) => SparqlExpr::Union(sub(a), sub(b)),
            SparqlExpr::Opt(a, b) => SparqlExpr::Opt(sub(a), sub(b)),
            SparqlExpr::Filter(e, r) => SparqlExpr::Filter(sub(e), substitute_cond(r, from, to)),
            SparqlExpr::Empty => SparqlExpr::Empty,
        }
    }

    /// Verifies the safe-filter restriction on every Filter node.
    pub fn check_safe(&self) -> Result<()> {
        match self {
            SparqlExpr::Triple(_) | SparqlExpr::Empty => Ok(()),
            SparqlExpr::And(a, b) | SparqlExpr::Union(a, b) | SparqlExpr::Opt(a, b) => {
                a.check_safe()?;
                b.check_safe()
            }
            SparqlExpr::Filter(e, r) => {
                e.check_safe()?;
                let ev = e.vars();
                match r.vars().into_iter().find(|v| !ev.contains(v)) {
                    Some(v) => Err(Error::UnsafeFilter(v.to_string())),
                    None => Ok(()),
                }
            }
        }
    }
}

fn substitute_cond(r: &FilterCondition, from: &Variable, to: &Variable) -> FilterCondition {
    let v = |x: &Variable| if x == from { to.clone() } else { x.clone() };
    match r {
        FilterCondition::Bound(x) => FilterCondition::Bound(v(x)),
        FilterCondition::EqConst(x, c) => FilterCondition::EqConst(v(x), c.clone()),
        FilterCondition::EqVar(a, b) => FilterCondition::EqVar(v(a), v(b)),
        FilterCondition::Not(c) => FilterCondition::Not(Box::new(substitute_cond(c, from, to))),
        FilterCondition::And(a, b) => {
            FilterCondition::and(substitute_cond(a, from, to), substitute_cond(b, from, to))
        }
        FilterCondition::Or(a, b) => FilterCondition::or(substitute_cond(a, from, to), substitute_cond(b, from, to)),
    }
}

impl fmt::Display for SparqlExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SparqlExpr::Triple(t) => write!(f, "{t}"),
            SparqlExpr::And(a, b) => write!(f, "({a} AND {b})"),
            SparqlExpr::Union(a, b) => write!(f, "({a} UNION {b})"),
            SparqlExpr::Opt(a, b) => write!(f, "({a} OPT {b})"),
            SparqlExpr::Filter(e, r) => write!(f, "({e} FILTER {r})"),
            SparqlExpr::Empty => write!(f, "EMPTY"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SparqlQuery {
    pub projection: BTreeSet<Variable>,
    pub body: SparqlExpr,
}

impl SparqlQuery {
    pub fn new(projection: impl IntoIterator<Item = Variable>, body: SparqlExpr) -> Self {
        SparqlQuery { projection: projection.into_iter().collect(), body }
    }

    pub fn vars(&self) -> BTreeSet<Variable> {
        let mut v = self.body.vars();
        v.extend(self.projection.iter().cloned());
        v
    }

    pub fn fragment(&self) -> Fragment {
        Fragment { select: true, ..self.body.fragment() }
    }
}

impl fmt::Display for SparqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SELECT")?;
        for v in &self.projection {
            write!(f, " {v}")?;
        }
        write!(f, " WHERE {}", self.body)
    }
}

/// Query or bare expression, as produced by [`parse_query`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    Query(SparqlQuery),
    Expr(SparqlExpr),
}

impl Parsed {
    pub fn body(&self) -> &SparqlExpr {
        match self {
            Parsed::Query(q) => &q.body,
            Parsed::Expr(e) => e,
        }
    }
}

impl fmt::Display for Parsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parsed::Query(q) => write!(f, "{q}"),
            Parsed::Expr(e) => write!(f, "{e}"),
        }
    }
}

/// Operators used by an expression; `select` marks a top-level projection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct Fragment {
    pub and: bool,
    pub filter: bool,
    pub opt: bool,
    pub union: bool,
    pub select: bool,
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        for (on, c) in [(self.and, 'A'), (self.filter, 'F'), (self.opt, 'O'), (self.union, 'U')] {
            if on {
                s.push(c);
            }
        }
        if s.is_empty() {
            s.push_str("T");
        }
        if self.select {
            s.push('+');
        }
        write!(f, "{s}")
    }
}

pub fn vars(e: &SparqlExpr) -> BTreeSet<Variable> {
    e.vars()
}

pub fn opt_rank(e: &SparqlExpr) -> usize {
    e.opt_rank()
}

pub fn fragment_of(p: &Parsed) -> Fragment {
    match p {
        Parsed::Query(q) => q.fragment(),
        Parsed::Expr(e) => e.fragment(),
    }
}

pub fn parse_query(text: &str) -> Result<Parsed> {
    let mut c = Cursor::from_text(text)?;
    let out = if c.is_kw("SELECT") {
        c.next();
        let mut proj = BTreeSet::new();
        loop {
            match c.peek() {
                Some(Tok::Var(v)) => {
                    proj.insert(Variable::new(v.clone()));
                    c.next();
                }
                Some(Tok::Ident(k)) if k == "WHERE" => {
                    c.next();
                    break;
                }
                _ => return Err(c.err(format!("expected variable or WHERE, found {}", c.describe()))),
            }
        }
        Parsed::Query(SparqlQuery { projection: proj, body: parse_union(&mut c)? })
    } else {
        Parsed::Expr(parse_union(&mut c)?)
    };
    if !c.at_end() {
        return Err(c.err(format!("unexpected trailing input {}", c.describe())));
    }
    Ok(out)
}

pub fn parse_expr(text: &str) -> Result<SparqlExpr> {
    match parse_query(text)? {
        Parsed::Expr(e) => Ok(e),
        Parsed::Query(_) => Err(Error::Syntax { line: 1, msg: "expected an expression, found a query".into() }),
    }
}

pub fn parse_select_query(text: &str) -> Result<SparqlQuery> {
    match parse_query(text)? {
        Parsed::Query(q) => Ok(q),
        Parsed::Expr(_) => Err(Error::Syntax { line: 1, msg: "expected SELECT query".into() }),
    }
}

fn parse_union(c: &mut Cursor) -> Result<SparqlExpr> {
    let mut e = parse_opt(c)?;
    while c.is_kw("UNION") {
        c.next();
        e = SparqlExpr::union(e, parse_opt(c)?);
    }
    Ok(e)
}

fn parse_opt(c: &mut Cursor) -> Result<SparqlExpr> {
    let mut e = parse_and(c)?;
    while c.is_kw("OPT") {
        c.next();
        e = SparqlExpr::opt(e, parse_and(c)?);
    }
    Ok(e)
}

fn parse_and(c: &mut Cursor) -> Result<SparqlExpr> {
    let mut e = parse_filtered(c)?;
    while c.is_kw("AND") {
        c.next();
        e = SparqlExpr::and(e, parse_filtered(c)?);
    }
    Ok(e)
}

fn parse_filtered(c: &mut Cursor) -> Result<SparqlExpr> {
    let mut e = parse_primary(c)?;
    while c.is_kw("FILTER") {
        c.next();
        let line = c.current_line();
        let r = parse_cond(c)?;
        e = SparqlExpr::filter(e, r).map_err(|err| match err {
            Error::UnsafeFilter(v) => Error::UnsafeFilter(format!("{v} (line {line})")),
            other => other,
        })?;
    }
    Ok(e)
}

fn parse_primary(c: &mut Cursor) -> Result<SparqlExpr> {
    if c.is_kw("EMPTY") {
        c.next();
        return Ok(SparqlExpr::Empty);
    }
    if !c.is_sym("(") {
        return Err(c.err(format!("expected '(', found {}", c.describe())));
    }
    let is_pattern = matches!(c.toks.get(c.pos + 1), Some(t) if term_from_tok(t).is_some())
        && matches!(c.toks.get(c.pos + 2), Some(Tok::Sym(",")));
    if is_pattern {
        let line = c.current_line();
        let [s, p, o] = parse_term_triple(c)?;
        return TriplePattern::new(s, p, o)
            .map(SparqlExpr::Triple)
            .map_err(|e| match e {
                Error::Kind(m) => Error::Kind(format!("line {line}: {m}")),
                other => other,
            });
    }
    c.expect_sym("(")?;
    let e = parse_union(c)?;
    c.expect_sym(")")?;
    Ok(e)
}

pub fn parse_condition(text: &str) -> Result<FilterCondition> {
    let mut c = Cursor::from_text(text)?;
    let r = parse_cond(&mut c)?;
    if !c.at_end() {
        return Err(c.err(format!("unexpected trailing input {}", c.describe())));
    }
    Ok(r)
}

fn parse_cond(c: &mut Cursor) -> Result<FilterCondition> {
    let mut r = parse_cond_and(c)?;
    while c.eat_sym("||") {
        r = FilterCondition::or(r, parse_cond_and(c)?);
    }
    Ok(r)
}

fn parse_cond_and(c: &mut Cursor) -> Result<FilterCondition> {
    let mut r = parse_cond_unary(c)?;
    while c.eat_sym("&&") {
        r = FilterCondition::and(r, parse_cond_unary(c)?);
    }
    Ok(r)
}

fn parse_cond_unary(c: &mut Cursor) -> Result<FilterCondition> {
    if c.eat_sym("!") {
        return Ok(FilterCondition::not(parse_cond_unary(c)?));
    }
    if c.eat_sym("(") {
        let r = parse_cond(c)?;
        c.expect_sym(")")?;
        return Ok(r);
    }
    if c.is_kw("bnd") || c.is_kw("bound") {
        c.next();
        c.expect_sym("(")?;
        let v = match c.next() {
            Some(Tok::Var(v)) => Variable::new(v),
            _ => return Err(c.err("expected variable in bnd(...)")),
        };
        c.expect_sym(")")?;
        return Ok(FilterCondition::Bound(v));
    }
    let lhs = match c.next() {
        Some(Tok::Var(v)) => Variable::new(v),
        _ => {
            c.pos -= 1;
            return Err(c.err(format!("expected condition, found {}", c.describe())));
        }
    };
    c.expect_sym("=")?;
    match c.next() {
        Some(Tok::Var(v)) => Ok(FilterCondition::EqVar(lhs, Variable::new(v))),
        Some(t) => match term_from_tok(&t) {
            Some(term) => Ok(FilterCondition::EqConst(lhs, term)),
            None => Err(c.err(format!("expected constant or variable after '=', found {t:?}"))),
        },
        None => Err(c.err("expected constant or variable after '='")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_opt_union_query() {
        let p = parse_query("SELECT ?a WHERE ((0,c,?a) OPT ((?a,c,1) UNION (0,c,?b)))").unwrap();
        let Parsed::Query(q) = &p else { panic!() };
        assert_eq!(q.projection, [Variable::new("a")].into_iter().collect());
        let expected = SparqlExpr::opt(
            SparqlExpr::pat("0", "c", "?a"),
            SparqlExpr::union(SparqlExpr::pat("?a", "c", "1"), SparqlExpr::pat("0", "c", "?b")),
        );
        assert_eq!(q.body, expected);
        let f = q.body.fragment();
        assert!(f.opt && f.union && !f.and && !f.filter);
    }

    #[test]
    fn unsafe_filter_rejected() {
        let err = parse_query("(?x,p,?y) FILTER bnd(?z)").unwrap_err();
        assert!(matches!(err, Error::UnsafeFilter(ref v) if v.starts_with("?z")), "{err}");
    }

    #[test]
    fn precedence() {
        let e = parse_expr("(a,b,?x) AND (a,c,?y) FILTER ?y = 1 OPT (a,d,?z) UNION (a,e,?w)").unwrap();
        let expected = SparqlExpr::union(
            SparqlExpr::opt(
                SparqlExpr::and(
                    SparqlExpr::pat("a", "b", "?x"),
                    SparqlExpr::filter(SparqlExpr::pat("a", "c", "?y"), FilterCondition::eq_const("y", Term::iri("1")))
                        .unwrap(),
                ),
                SparqlExpr::pat("a", "d", "?z"),
            ),
            SparqlExpr::pat("a", "e", "?w"),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn condition_precedence() {
        let r = parse_condition("!bnd(?x) && ?x = 1 || ?y = ?z").unwrap();
        let expected = FilterCondition::or(
            FilterCondition::and(
                FilterCondition::not(FilterCondition::bound("x")),
                FilterCondition::eq_const("x", Term::iri("1")),
            ),
            FilterCondition::eq_var("y", "z"),
        );
        assert_eq!(r, expected);
        assert_eq!(parse_condition(&r.to_string()).unwrap(), r);
    }

    #[test]
    fn vars_and_rank() {
        assert_eq!(SparqlExpr::pat("0", "c", "?a").vars(), [Variable::new("a")].into_iter().collect());
        assert!(SparqlExpr::pat("a", "b", "c").vars().is_empty());
        let t = || SparqlExpr::pat("a", "b", "?c");
        assert_eq!(t().opt_rank(), 0);
        assert_eq!(SparqlExpr::opt(SparqlExpr::opt(t(), t()), t()).opt_rank(), 2);
        assert_eq!(SparqlExpr::and(t(), SparqlExpr::union(t(), t())).opt_rank(), 0);
    }

    #[test]
    fn fragment_labels() {
        let q = parse_query("SELECT ?x WHERE (?x,a,b) AND (?x,c,d)").unwrap();
        assert_eq!(fragment_of(&q).to_string(), "A+");
        let e = parse_query("(?x,a,b) AND (?x,c,d)").unwrap();
        assert_eq!(fragment_of(&e).to_string(), "A");
    }

    #[test]
    fn literal_kinds() {
        assert!(parse_expr("(\"l\", b, ?x)").is_err());
        assert!(parse_expr("(?x, \"l\", ?y)").is_err());
        let e = parse_expr("(?x, b, 'l')").unwrap();
        assert_eq!(e, SparqlExpr::pat("?x", "b", "\"l\""));
    }
}
