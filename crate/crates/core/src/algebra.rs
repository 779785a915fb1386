//! Mapping sets, the algebra operators, translation from syntax and evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::rdf::lex::{Cursor, Tok};
use crate::rdf::{term_from_tok, Document, Term, Variable};
use crate::syntax::{FilterCondition, Parsed, SparqlExpr, SparqlQuery, TriplePattern};

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mapping(BTreeMap<Variable, Term>);

impl Mapping {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a mapping from `(name, value)` pairs; values must not be variables.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Term)>) -> Self {
        let mut m = Mapping::new();
        for (k, v) in pairs {
            m.insert(Variable::new(k), v);
        }
        m
    }

    pub fn insert(&mut self, v: Variable, t: Term) -> Option<Term> {
        assert!(!t.is_var(), "mapping values must be RDF terms");
        self.0.insert(v, t)
    }

    pub fn get(&self, v: &Variable) -> Option<&Term> {
        self.0.get(v)
    }

    pub fn contains(&self, v: &Variable) -> bool {
        self.0.contains_key(v)
    }

    pub fn domain(&self) -> BTreeSet<Variable> {
        self.0.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn compatible(&self, other: &Mapping) -> bool {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.0.iter().all(|(k, v)| large.0.get(k).map_or(true, |w| w == v))
    }

    /// Union of two compatible mappings.
    pub fn merge(&self, other: &Mapping) -> Mapping {
        let mut m = self.clone();
        for (k, v) in &other.0 {
            m.0.insert(k.clone(), v.clone());
        }
        m
    }

    pub fn restrict(&self, s: &BTreeSet<Variable>) -> Mapping {
        Mapping(self.0.iter().filter(|(k, _)| s.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect())
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k} -> {v}")?;
        }
        write!(f, "}}")
    }
}

/// Parses `{?a -> 1, ?b -> "x"}`.
pub fn parse_mapping(text: &str) -> Result<Mapping> {
    let mut c = Cursor::from_text(text)?;
    c.expect_sym("{")?;
    let mut m = Mapping::new();
    if !c.eat_sym("}") {
        loop {
            let v = match c.next() {
                Some(Tok::Var(v)) => Variable::new(v),
                _ => return Err(c.err("expected variable in mapping")),
            };
            c.expect_sym("->")?;
            let t = c
                .next()
                .and_then(|t| term_from_tok(&t))
                .filter(|t| !t.is_var())
                .ok_or_else(|| c.err("expected RDF term in mapping"))?;
            if m.insert(v.clone(), t).is_some() {
                return Err(c.err(format!("variable {v} bound twice")));
            }
            if c.eat_sym("}") {
                break;
            }
            c.expect_sym(",")?;
        }
    }
    if !c.at_end() {
        return Err(c.err("trailing input after mapping"));
    }
    Ok(m)
}

pub type MappingSet = BTreeSet<Mapping>;

pub fn compatible(a: &Mapping, b: &Mapping) -> bool {
    a.compatible(b)
}

pub fn join(l: &MappingSet, r: &MappingSet) -> MappingSet {
    let mut out = MappingSet::new();
    for a in l {
        for b in r {
            if a.compatible(b) {
                out.insert(a.merge(b));
            }
        }
    }
    out
}

pub fn union(l: &MappingSet, r: &MappingSet) -> MappingSet {
    l.union(r).cloned().collect()
}

pub fn minus(l: &MappingSet, r: &MappingSet) -> MappingSet {
    l.iter().filter(|a| !r.iter().any(|b| a.compatible(b))).cloned().collect()
}

pub fn left_outer_join(l: &MappingSet, r: &MappingSet) -> MappingSet {
    let mut out = MappingSet::new();
    for a in l {
        let mut matched = false;
        for b in r {
            if a.compatible(b) {
                matched = true;
                out.insert(a.merge(b));
            }
        }
        if !matched {
            out.insert(a.clone());
        }
    }
    out
}

pub fn project(s: &BTreeSet<Variable>, o: &MappingSet) -> MappingSet {
    o.iter().map(|m| m.restrict(s)).collect()
}

pub fn select(r: &FilterCondition, o: &MappingSet) -> MappingSet {
    o.iter().filter(|m| satisfies(m, r)).cloned().collect()
}

/// Two-valued filter semantics: a check on an unbound variable is false.
pub fn satisfies(m: &Mapping, r: &FilterCondition) -> bool {
    match r {
        FilterCondition::Bound(v) => m.contains(v),
        FilterCondition::EqConst(v, c) => m.get(v) == Some(c),
        FilterCondition::EqVar(a, b) => match (m.get(a), m.get(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
        FilterCondition::Not(c) => !satisfies(m, c),
        FilterCondition::And(a, b) => satisfies(m, a) && satisfies(m, b),
        FilterCondition::Or(a, b) => satisfies(m, a) || satisfies(m, b),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AlgebraExpr {
    Leaf(TriplePattern),
    /// Evaluates to the empty mapping set on every document.
    Empty,
    Join(Box<AlgebraExpr>, Box<AlgebraExpr>),
    Union(Box<AlgebraExpr>, Box<AlgebraExpr>),
    Minus(Box<AlgebraExpr>, Box<AlgebraExpr>),
    LeftJoin(Box<AlgebraExpr>, Box<AlgebraExpr>),
    Project(BTreeSet<Variable>, Box<AlgebraExpr>),
    Select(FilterCondition, Box<AlgebraExpr>),
}

impl AlgebraExpr {
    pub fn leaf(s: &str, p: &str, o: &str) -> Self {
        AlgebraExpr::Leaf(TriplePattern::parse_terms(s, p, o))
    }

    pub fn join(a: AlgebraExpr, b: AlgebraExpr) -> Self {
        AlgebraExpr::Join(Box::new(a), Box::new(b))
    }

    pub fn union(a: AlgebraExpr, b: AlgebraExpr) -> Self {
        AlgebraExpr::Union(Box::new(a), Box::new(b))
    }

    pub fn minus(a: AlgebraExpr, b: AlgebraExpr) -> Self {
        AlgebraExpr::Minus(Box::new(a), Box::new(b))
    }

    pub fn left_join(a: AlgebraExpr, b: AlgebraExpr) -> Self {
        AlgebraExpr::LeftJoin(Box::new(a), Box::new(b))
    }

    pub fn project(s: impl IntoIterator<Item = Variable>, a: AlgebraExpr) -> Self {
        AlgebraExpr::Project(s.into_iter().collect(), Box::new(a))
    }

    pub fn select(r: FilterCondition, a: AlgebraExpr) -> Self {
        AlgebraExpr::Select(r, Box::new(a))
    }

    pub fn children(&self) -> Vec<&AlgebraExpr> {
        match self {
            AlgebraExpr::Leaf(_) | AlgebraExpr::Empty => vec![],
            AlgebraExpr::Join(a, b)
            | AlgebraExpr::Union(a, b)
            | AlgebraExpr::Minus(a, b)
            | AlgebraExpr::LeftJoin(a, b) => vec![a, b],
            AlgebraExpr::Project(_, a) | AlgebraExpr::Select(_, a) => vec![a],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut AlgebraExpr> {
        match self {
            AlgebraExpr::Leaf(_) | AlgebraExpr::Empty => vec![],
            AlgebraExpr::Join(a, b)
            | AlgebraExpr::Union(a, b)
            | AlgebraExpr::Minus(a, b)
            | AlgebraExpr::LeftJoin(a, b) => vec![a, b],
            AlgebraExpr::Project(_, a) | AlgebraExpr::Select(_, a) => vec![a],
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn vars(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Variable>) {
        match self {
            AlgebraExpr::Leaf(t) => out.extend(t.vars()),
            AlgebraExpr::Select(r, a) => {
                out.extend(r.vars());
                a.collect_vars(out);
            }
            AlgebraExpr::Project(s, a) => {
                out.extend(s.iter().cloned());
                a.collect_vars(out);
            }
            _ => {
                for c in self.children() {
                    c.collect_vars(out);
                }
            }
        }
    }

    pub fn safe_vars(&self) -> BTreeSet<Variable> {
        match self {
            AlgebraExpr::Leaf(t) => t.vars(),
            AlgebraExpr::Empty => BTreeSet::new(),
            AlgebraExpr::Join(a, b) => a.safe_vars().union(&b.safe_vars()).cloned().collect(),
            AlgebraExpr::Union(a, b) => a.safe_vars().intersection(&b.safe_vars()).cloned().collect(),
            AlgebraExpr::Minus(a, _) | AlgebraExpr::LeftJoin(a, _) | AlgebraExpr::Select(_, a) => a.safe_vars(),
            AlgebraExpr::Project(s, a) => a.safe_vars().intersection(s).cloned().collect(),
        }
    }

    /// Membership in the union- and projection-free sub-language.
    pub fn is_minus_fragment(&self) -> bool {
        match self {
            AlgebraExpr::Union(..) | AlgebraExpr::Project(..) => false,
            _ => self.children().iter().all(|c| c.is_minus_fragment()),
        }
    }

    pub fn evaluate(&self, d: &Document) -> MappingSet {
        evaluate(self, d)
    }
}

impl fmt::Display for AlgebraExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraExpr::Leaf(t) => write!(f, "{t}"),
            AlgebraExpr::Empty => write!(f, "EMPTY"),
            AlgebraExpr::Join(a, b) => write!(f, "({a} JOIN {b})"),
            AlgebraExpr::Union(a, b) => write!(f, "({a} UNION {b})"),
            AlgebraExpr::Minus(a, b) => write!(f, "({a} MINUS {b})"),
            AlgebraExpr::LeftJoin(a, b) => write!(f, "({a} LEFTJOIN {b})"),
            AlgebraExpr::Project(s, a) => {
                write!(f, "PROJECT[")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]({a})")
            }
            AlgebraExpr::Select(r, a) => write!(f, "SELECT[{r}]({a})"),
        }
    }
}

pub fn translate_expr(e: &SparqlExpr) -> AlgebraExpr {
    match e {
        SparqlExpr::Triple(t) => AlgebraExpr::Leaf(t.clone()),
        SparqlExpr::Empty => AlgebraExpr::Empty,
        SparqlExpr::And(a, b) => AlgebraExpr::join(translate_expr(a), translate_expr(b)),
        SparqlExpr::Union(a, b) => AlgebraExpr::union(translate_expr(a), translate_expr(b)),
        SparqlExpr::Opt(a, b) => AlgebraExpr::left_join(translate_expr(a), translate_expr(b)),
        SparqlExpr::Filter(a, r) => AlgebraExpr::select(r.clone(), translate_expr(a)),
    }
}

pub fn translate_query(q: &SparqlQuery) -> AlgebraExpr {
    AlgebraExpr::Project(q.projection.clone(), Box::new(translate_expr(&q.body)))
}

pub fn translate(p: &Parsed) -> AlgebraExpr {
    match p {
        Parsed::Query(q) => translate_query(q),
        Parsed::Expr(e) => translate_expr(e),
    }
}

/// Converts a Join/Union/LeftJoin/Select tree back into SPARQL syntax.
/// Minus and inner projections have no syntactic counterpart.
pub fn to_sparql(a: &AlgebraExpr) -> Result<SparqlExpr> {
    let bin = |x: &AlgebraExpr, y: &AlgebraExpr| -> Result<(SparqlExpr, SparqlExpr)> { Ok((to_sparql(x)?, to_sparql(y)?)) };
    match a {
        AlgebraExpr::Leaf(t) => Ok(SparqlExpr::Triple(t.clone())),
        AlgebraExpr::Empty => Ok(SparqlExpr::Empty),
        AlgebraExpr::Join(x, y) => bin(x, y).map(|(x, y)| SparqlExpr::and(x, y)),
        AlgebraExpr::Union(x, y) => bin(x, y).map(|(x, y)| SparqlExpr::union(x, y)),
        AlgebraExpr::LeftJoin(x, y) => bin(x, y).map(|(x, y)| SparqlExpr::opt(x, y)),
        AlgebraExpr::Select(r, x) => SparqlExpr::filter(to_sparql(x)?, r.clone()),
        AlgebraExpr::Minus(..) => Err(Error::Fragment("MINUS has no SPARQL counterpart".into())),
        AlgebraExpr::Project(..) => Err(Error::Fragment("projection only allowed at top level".into())),
    }
}

fn match_pattern(t: &TriplePattern, terms: [&Term; 3]) -> Option<Mapping> {
    let mut m = Mapping::new();
    for (p, v) in t.terms().into_iter().zip(terms) {
        match p {
            Term::Var(x) => match m.get(x) {
                Some(w) if w != v => return None,
                Some(_) => {}
                None => {
                    m.insert(x.clone(), v.clone());
                }
            },
            c if c != v => return None,
            _ => {}
        }
    }
    Some(m)
}

pub fn evaluate(a: &AlgebraExpr, d: &Document) -> MappingSet {
    match a {
        AlgebraExpr::Leaf(t) => d.iter().filter_map(|tr| match_pattern(t, tr.terms())).collect(),
        AlgebraExpr::Empty => MappingSet::new(),
        AlgebraExpr::Join(x, y) => join(&evaluate(x, d), &evaluate(y, d)),
        AlgebraExpr::Union(x, y) => union(&evaluate(x, d), &evaluate(y, d)),
        AlgebraExpr::Minus(x, y) => minus(&evaluate(x, d), &evaluate(y, d)),
        AlgebraExpr::LeftJoin(x, y) => left_outer_join(&evaluate(x, d), &evaluate(y, d)),
        AlgebraExpr::Project(s, x) => project(s, &evaluate(x, d)),
        AlgebraExpr::Select(r, x) => select(r, &evaluate(x, d)),
    }
}

pub fn evaluate_query(p: &Parsed, d: &Document) -> MappingSet {
    evaluate(&translate(p), d)
}

pub fn safe_vars(a: &AlgebraExpr) -> BTreeSet<Variable> {
    a.safe_vars()
}

pub fn membership(m: &Mapping, d: &Document, q: &Parsed) -> bool {
    evaluate_query(q, d).contains(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_document;
    use crate::syntax::parse_query;

    fn iri(s: &str) -> Term {
        Term::iri(s)
    }

    #[test]
    fn compatibility() {
        let a1 = Mapping::from_pairs([("a", iri("1"))]);
        let b1 = Mapping::from_pairs([("b", iri("1"))]);
        let a0 = Mapping::from_pairs([("a", iri("0"))]);
        let ab = Mapping::from_pairs([("a", iri("1")), ("b", iri("1"))]);
        assert!(compatible(&a1, &b1));
        assert!(!compatible(&a1, &a0));
        assert!(compatible(&ab, &a1));
    }

    #[test]
    fn operators_with_empty() {
        let o: MappingSet = [Mapping::from_pairs([("a", iri("1"))])].into_iter().collect();
        let e = MappingSet::new();
        assert!(join(&o, &e).is_empty());
        assert_eq!(union(&o, &e), o);
        assert_eq!(minus(&o, &e), o);
        assert_eq!(left_outer_join(&o, &e), o);
        let r: MappingSet = [Mapping::from_pairs([("a", iri("1")), ("b", iri("1"))])].into_iter().collect();
        assert_eq!(left_outer_join(&o, &r), r);
    }

    #[test]
    fn filter_semantics() {
        let m = Mapping::from_pairs([("a", iri("1"))]);
        assert!(satisfies(&m, &FilterCondition::bound("a")));
        assert!(satisfies(&Mapping::new(), &FilterCondition::not(FilterCondition::eq_const("x", iri("1")))));
        let xy = Mapping::from_pairs([("x", iri("1")), ("y", iri("1"))]);
        assert!(satisfies(&xy, &FilterCondition::eq_var("x", "y")));
        assert!(!satisfies(&m, &FilterCondition::eq_var("a", "b")));
    }

    #[test]
    fn opt_over_union_example() {
        let d = parse_document("(0, c, 1)").unwrap();
        let lhs = parse_query("(0,c,?a) OPT ((?a,c,1) UNION (0,c,?b))").unwrap();
        let rhs = parse_query("((0,c,?a) OPT (?a,c,1)) UNION ((0,c,?a) OPT (0,c,?b))").unwrap();
        let ab = Mapping::from_pairs([("a", iri("1")), ("b", iri("1"))]);
        let a = Mapping::from_pairs([("a", iri("1"))]);
        assert_eq!(evaluate_query(&lhs, &d), [ab.clone()].into_iter().collect());
        assert_eq!(evaluate_query(&rhs, &d), [a.clone(), ab].into_iter().collect());
        assert!(!membership(&a, &d, &lhs));
        assert!(membership(&a, &d, &rhs));
        let t = translate(&lhs);
        assert!(matches!(&t, AlgebraExpr::LeftJoin(l, r) if matches!(**l, AlgebraExpr::Leaf(_)) && matches!(**r, AlgebraExpr::Union(..))));
    }

    #[test]
    fn safe_vars_cases() {
        let l = AlgebraExpr::leaf("?a", "p", "?b");
        assert_eq!(l.safe_vars(), l.vars());
        let u = AlgebraExpr::union(AlgebraExpr::leaf("?a", "p", "c"), AlgebraExpr::leaf("?b", "p", "c"));
        assert!(u.safe_vars().is_empty());
    }

    #[test]
    fn mapping_text_round_trip() {
        let m = Mapping::from_pairs([("a", iri("1")), ("b", Term::lit("x y"))]);
        assert_eq!(m.to_string(), "{?a -> 1, ?b -> \"x y\"}");
        assert_eq!(parse_mapping(&m.to_string()).unwrap(), m);
        assert_eq!(parse_mapping("{}").unwrap(), Mapping::new());
    }

    #[test]
    fn leaf_with_repeated_variable() {
        let d = parse_document("(a, p, a)\n(a, p, b)").unwrap();
        let r = evaluate(&AlgebraExpr::leaf("?x", "p", "?x"), &d);
        assert_eq!(r, [Mapping::from_pairs([("x", iri("a"))])].into_iter().collect());
    }
}
