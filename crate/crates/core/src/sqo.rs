//! Semantic query optimization under TGD/EGD constraints: minimization of
//! And-only queries by chase and backchase, and the Opt/Filter rewrites whose
//! preconditions reduce to conjunctive query containment.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;

use crate::chase::{self, instance_from_document, CbOutcome, ChaseOutcome, PlanOutcome, Value};
use crate::cq::{self, c1_inverse, c1_translate, c2_inverse, c2_translate, sigma_prime, Atom, Constraint, Containment, Cq, CqTerm};
use crate::error::{Error, Result};
use crate::rdf::{Document, Term, Triple, Variable};
use crate::syntax::{FilterCondition, SparqlExpr, SparqlQuery};
use crate::termination;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    C1,
    C2,
    #[default]
    Auto,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c1" => Ok(Scheme::C1),
            "c2" => Ok(Scheme::C2),
            "auto" => Ok(Scheme::Auto),
            other => Err(Error::Shape(format!("unknown scheme '{other}' (expected c1, c2 or auto)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChaseStatus {
    Terminated,
    /// The chase failed: the query is empty on every model of Σ.
    Unsatisfiable,
    Unknown,
    NotApplicable,
}

impl fmt::Display for ChaseStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChaseStatus::Terminated => "terminated",
            ChaseStatus::Unsatisfiable => "unsatisfiable",
            ChaseStatus::Unknown => "unknown",
            ChaseStatus::NotApplicable => "not applicable",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeReport {
    pub name: &'static str,
    pub status: ChaseStatus,
    /// Whether a termination condition certifies the constraint set used.
    pub certified: bool,
    pub note: String,
    pub rewrites: Vec<SparqlQuery>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqoReport {
    pub input: SparqlQuery,
    pub schemes: Vec<SchemeReport>,
    /// Minimal Σ-equivalent And-only rewrites, pairwise non-isomorphic.
    pub rewrites: Vec<SparqlQuery>,
    /// Rewrites of the conjunctive query with no SPARQL counterpart.
    pub dropped: usize,
    /// The universal plan maps back to an And-only query.
    pub complete: bool,
    pub steps: Vec<SemanticRewrite>,
}

impl SqoReport {
    pub fn status(&self) -> ChaseStatus {
        if self.schemes.iter().any(|s| s.status == ChaseStatus::Unsatisfiable) {
            ChaseStatus::Unsatisfiable
        } else if self.schemes.iter().any(|s| s.status == ChaseStatus::Terminated) {
            ChaseStatus::Terminated
        } else {
            ChaseStatus::Unknown
        }
    }
}

impl fmt::Display for SqoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input: {}", self.input)?;
        for s in &self.schemes {
            write!(f, "scheme {}: {}", s.name, s.status)?;
            if s.certified {
                write!(f, " (termination certified)")?;
            }
            if !s.note.is_empty() {
                write!(f, " - {}", s.note)?;
            }
            writeln!(f)?;
        }
        writeln!(f, "complete: {}", self.complete)?;
        if self.dropped > 0 {
            writeln!(f, "dropped {} rewrite(s) with no SPARQL counterpart", self.dropped)?;
        }
        writeln!(f, "rewrites ({}):", self.rewrites.len())?;
        for r in &self.rewrites {
            writeln!(f, "  {r}")?;
        }
        if !self.steps.is_empty() {
            writeln!(f, "semantic rewrites:")?;
            for s in &self.steps {
                writeln!(f, "  {s}")?;
            }
        }
        Ok(())
    }
}

fn certified(sigma: &[Constraint]) -> bool {
    termination::analyze(sigma).terminates()
}

fn budget_for(q: &Cq, sigma: &[Constraint], budget: u64, certified: bool) -> u64 {
    if certified {
        let (inst, _) = cq::freeze(&q.body);
        budget.max(chase::default_budget(&inst, sigma))
    } else {
        budget
    }
}

fn run_cb(
    name: &'static str,
    q: &Cq,
    sigma: &[Constraint],
    budget: u64,
    certified: bool,
    back: fn(&Cq) -> std::result::Result<SparqlQuery, cq::Undefined>,
) -> (SchemeReport, usize) {
    let budget = budget_for(q, sigma, budget, certified);
    let mut dropped = 0;
    let (status, note, rewrites) = match chase::cb(q, sigma, budget, chase::CB_ATOM_CAP) {
        CbOutcome::Rewrites(rs) => {
            let mut out = Vec::new();
            for r in rs {
                match back(&r) {
                    Ok(s) => out.push(s),
                    Err(_) => dropped += 1,
                }
            }
            (ChaseStatus::Terminated, String::new(), out)
        }
        CbOutcome::Unsatisfiable => (ChaseStatus::Unsatisfiable, "the chase fails".into(), Vec::new()),
        CbOutcome::Unknown(m) => (ChaseStatus::Unknown, m, Vec::new()),
    };
    (SchemeReport { name, status, certified, note, rewrites }, dropped)
}

/// Minimizes an And-only query under Σ through the triple translation, and
/// the predicate translation when it applies and preserves every constraint.
pub fn optimize_bgp(q: &SparqlQuery, sigma: &[Constraint], budget: u64, scheme: Scheme) -> Result<SqoReport> {
    let q1 = c1_translate(q)?;
    let sigma_p = sigma_prime(sigma);
    let c2 = c2_translate(q).ok().filter(|_| sigma_p.len() == sigma.len());
    let mut schemes = Vec::new();
    let mut dropped = 0;
    let cert1 = certified(sigma);
    let cert2 = c2.is_some() && certified(&sigma_p);
    if scheme != Scheme::C2 {
        let (mut r, d) = run_cb("C1", &q1, sigma, budget, cert1 || cert2, c1_inverse);
        if cert2 && !cert1 {
            r.note = "termination certified through the predicate translation".into();
        }
        r.rewrites.retain(|s| verify(q, s, sigma, budget) == Some(true));
        dropped += d;
        schemes.push(r);
    }
    if scheme != Scheme::C1 {
        match &c2 {
            Some(q2) => {
                let (mut r, _) = run_cb("C2", q2, &sigma_p, budget, cert2, c2_inverse);
                r.rewrites.retain(|s| verify(q, s, sigma, budget) == Some(true));
                schemes.push(r);
            }
            None => schemes.push(SchemeReport {
                name: "C2",
                status: ChaseStatus::NotApplicable,
                certified: false,
                note: if c2_translate(q).is_err() {
                    "a predicate is a variable".into()
                } else {
                    "the predicate translation loses constraints".into()
                },
                rewrites: Vec::new(),
            }),
        }
    }
    let mut rewrites: Vec<SparqlQuery> = Vec::new();
    let mut seen: Vec<Cq> = Vec::new();
    for r in schemes.iter().flat_map(|s| s.rewrites.iter()) {
        let c = c1_translate(r)?;
        if !seen.iter().any(|x| cq::isomorphic(x, &c)) {
            seen.push(c);
            rewrites.push(r.clone());
        }
    }
    if let Some(min) = rewrites.iter().map(|r| r.body.patterns().len()).min() {
        rewrites.retain(|r| r.body.patterns().len() == min);
    }
    let complete = match chase::universal_plan(&q1, sigma, budget_for(&q1, sigma, budget, cert1 || cert2)) {
        PlanOutcome::Plan(u) => c1_inverse(&u).is_ok(),
        _ => false,
    };
    Ok(SqoReport { input: q.clone(), schemes, rewrites, dropped, complete, steps: Vec::new() })
}

/// Σ-equivalence of two And-only queries through the triple translation.
pub fn verify(a: &SparqlQuery, b: &SparqlQuery, sigma: &[Constraint], budget: u64) -> Option<bool> {
    let (x, y) = (c1_translate(a).ok()?, c1_translate(b).ok()?);
    cq::equivalent(&x, &y, sigma, budget)
}

// ---------------------------------------------------------------------------
// Opt and Filter rewrites

/// Why a semantic rewrite does not apply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotApplicable(pub String);

impl fmt::Display for NotApplicable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not applicable: {}", self.0)
    }
}

type Applied<T> = std::result::Result<T, NotApplicable>;

fn body_atoms(e: &SparqlExpr) -> Applied<Vec<Atom>> {
    if !e.is_and_only() {
        return Err(NotApplicable(format!("{e} is not And-only")));
    }
    Ok(e
        .patterns()
        .into_iter()
        .map(|t| {
            let conv = |x: &Term| match x {
                Term::Var(v) => CqTerm::Var(v.0.clone()),
                c => CqTerm::Const(c.clone()),
            };
            Atom::new(cq::TRIPLE_RELATION, vec![conv(&t.s), conv(&t.p), conv(&t.o)])
        })
        .collect())
}

fn names(vs: &BTreeSet<Variable>) -> Vec<String> {
    vs.iter().map(|v| v.0.clone()).collect()
}

fn decide(c: Containment, what: &str) -> Applied<()> {
    match c {
        Containment::Holds | Containment::HoldsVacuously => Ok(()),
        Containment::Fails => Err(NotApplicable(format!("{what} does not hold"))),
        Containment::Unknown => Err(NotApplicable(format!("{what} undecided within the chase budget"))),
    }
}

fn equivalent_cq(a: &Cq, b: &Cq, sigma: &[Constraint], budget: u64, what: &str) -> Applied<()> {
    decide(cq::contained_in(a, b, sigma, budget), what)?;
    decide(cq::contained_in(b, a, sigma, budget), what)
}

/// Q1 ≡_Σ Select_{vars(Q1)}(Q1 And Q2), decided for And-only Q1, Q2.
pub fn implied_extension(q1: &SparqlExpr, q2: &SparqlExpr, sigma: &[Constraint], budget: u64) -> Applied<()> {
    let (b1, b2) = (body_atoms(q1)?, body_atoms(q2)?);
    let head = names(&q1.vars());
    let a = Cq { head: head.clone(), body: b1.clone() };
    let both = Cq { head, body: b1.into_iter().chain(b2).collect() };
    equivalent_cq(&a, &both, sigma, budget, "Q1 ≡ Select_vars(Q1)(Q1 And Q2)")
}

/// Q1 Opt Q2 becomes Q1 And Q2 when every Q1 answer extends to Q2 on models of Σ.
pub fn elim_opt_to_and(q1: &SparqlExpr, q2: &SparqlExpr, sigma: &[Constraint], budget: u64) -> Applied<SparqlExpr> {
    implied_extension(q1, q2, sigma, budget)?;
    Ok(SparqlExpr::and(q1.clone(), q2.clone()))
}

/// Q1 Opt (Q2 And Q3) becomes Q1 Opt Q3 when Q1 ≡_Σ Q1 And Q2.
pub fn elim_opt_redundant_bgp(
    q1: &SparqlExpr,
    q2: &SparqlExpr,
    q3: &SparqlExpr,
    sigma: &[Constraint],
    budget: u64,
) -> Applied<SparqlExpr> {
    let (b1, b2) = (body_atoms(q1)?, body_atoms(q2)?);
    if !q2.vars().is_subset(&q1.vars()) {
        return Err(NotApplicable("vars(Q2) is not contained in vars(Q1)".into()));
    }
    let head = names(&q1.vars());
    let a = Cq { head: head.clone(), body: b1.clone() };
    let both = Cq { head, body: b1.into_iter().chain(b2).collect() };
    equivalent_cq(&a, &both, sigma, budget, "Q1 ≡ Q1 And Q2")?;
    Ok(SparqlExpr::opt(q1.clone(), q3.clone()))
}

fn substituted_cq(q2: &SparqlExpr, head: &[String], x: &Variable, y: &Variable) -> Applied<Cq> {
    let body = body_atoms(&q2.substitute(y, x))?;
    let head = head.iter().map(|h| if *h == y.0 { x.0.clone() } else { h.clone() }).collect();
    Ok(Cq { head, body })
}

/// Select_S(Q2) ≡_Σ Select_S(Q2 with ?y replaced by ?x), for ?y ∉ S.
pub fn select_substitution_equivalent(
    q2: &SparqlExpr,
    x: &Variable,
    y: &Variable,
    s: &BTreeSet<Variable>,
    sigma: &[Constraint],
    budget: u64,
) -> Applied<()> {
    if s.contains(y) {
        return Err(NotApplicable(format!("{y} is projected")));
    }
    let vars = q2.vars();
    if !vars.contains(x) || !vars.contains(y) {
        return Err(NotApplicable(format!("{x} and {y} must occur in Q2")));
    }
    if !s.is_subset(&vars) {
        return Err(NotApplicable("projection not covered by Q2".into()));
    }
    let head = names(s);
    let a = Cq { head: head.clone(), body: body_atoms(q2)? };
    let b = substituted_cq(q2, &head, x, y)?;
    equivalent_cq(&a, &b, sigma, budget, "Select_S(Q2) ≡ Select_S(Q2[?y/?x])")
}

/// Every answer of Q2 on a model of Σ binds ?x and ?y to the same value.
pub fn forces_equality(q2: &SparqlExpr, x: &Variable, y: &Variable, sigma: &[Constraint], budget: u64) -> Applied<()> {
    let vars = q2.vars();
    if !vars.contains(x) || !vars.contains(y) {
        return Err(NotApplicable(format!("{x} and {y} must occur in Q2")));
    }
    let head = names(&vars);
    let a = Cq { head: head.clone(), body: body_atoms(q2)? };
    let b = Cq { head: head.iter().map(|h| if *h == y.0 { x.0.clone() } else { h.clone() }).collect(), body: body_atoms(&q2.substitute(y, x))? };
    decide(cq::contained_in(&a, &b, sigma, budget), "Q2 ⊑ Q2 with ?x and ?y identified")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SemanticRule {
    OptToAnd,
    OptRedundant,
    FilterUnbound,
    FilterEquality,
    FilterInequality,
}

impl fmt::Display for SemanticRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SemanticRule::OptToAnd => "opt-to-and",
            SemanticRule::OptRedundant => "opt-redundant",
            SemanticRule::FilterUnbound => "filter-unbound",
            SemanticRule::FilterEquality => "filter-equality",
            SemanticRule::FilterInequality => "filter-inequality",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticRewrite {
    pub rule: SemanticRule,
    pub site: Vec<usize>,
    pub before: SparqlExpr,
    pub after: SparqlExpr,
    pub result: SparqlQuery,
}

impl fmt::Display for SemanticRewrite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {} => {}", self.rule, crate::rewrite::format_site(&self.site), self.before, self.after)
    }
}

fn children(e: &SparqlExpr) -> Vec<&SparqlExpr> {
    match e {
        SparqlExpr::And(a, b) | SparqlExpr::Union(a, b) | SparqlExpr::Opt(a, b) => vec![a, b],
        SparqlExpr::Filter(a, _) => vec![a],
        _ => Vec::new(),
    }
}

fn sites(e: &SparqlExpr, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    for (i, c) in children(e).into_iter().enumerate() {
        path.push(i);
        sites(c, path, out);
        path.pop();
    }
    out.push(path.clone());
}

fn at<'a>(e: &'a SparqlExpr, site: &[usize]) -> &'a SparqlExpr {
    match site.split_first() {
        None => e,
        Some((&i, rest)) => at(children(e)[i], rest),
    }
}

fn replace(e: &SparqlExpr, site: &[usize], new: &SparqlExpr) -> SparqlExpr {
    let Some((&i, rest)) = site.split_first() else { return new.clone() };
    let sub = |k: usize, c: &SparqlExpr| if k == i { Box::new(replace(c, rest, new)) } else { Box::new(c.clone()) };
    match e {
        SparqlExpr::And(a, b) => SparqlExpr::And(sub(0, a), sub(1, b)),
        SparqlExpr::Union(a, b) => SparqlExpr::Union(sub(0, a), sub(1, b)),
        SparqlExpr::Opt(a, b) => SparqlExpr::Opt(sub(0, a), sub(1, b)),
        SparqlExpr::Filter(a, r) => SparqlExpr::Filter(sub(0, a), r.clone()),
        other => other.clone(),
    }
}

fn site_rewrites(e: &SparqlExpr, top: Option<&BTreeSet<Variable>>, sigma: &[Constraint], budget: u64) -> Vec<(SemanticRule, SparqlExpr)> {
    let mut out = Vec::new();
    match e {
        SparqlExpr::Opt(q1, q2) => {
            if let Ok(r) = elim_opt_to_and(q1, q2, sigma, budget) {
                out.push((SemanticRule::OptToAnd, r));
            }
            if let SparqlExpr::And(a, b) = q2.as_ref() {
                for (x, y) in [(a, b), (b, a)] {
                    if let Ok(r) = elim_opt_redundant_bgp(q1, x, y, sigma, budget) {
                        out.push((SemanticRule::OptRedundant, r));
                        break;
                    }
                }
            }
        }
        SparqlExpr::Filter(inner, FilterCondition::Not(c)) => match (inner.as_ref(), c.as_ref()) {
            (SparqlExpr::Opt(q1, q2), FilterCondition::Bound(x)) if q2.vars().contains(x) => {
                if implied_extension(q1, q2, sigma, budget).is_ok() {
                    out.push((SemanticRule::FilterUnbound, SparqlExpr::Empty));
                }
            }
            (q2, FilterCondition::EqVar(x, y)) => {
                if forces_equality(q2, x, y, sigma, budget).is_ok() {
                    out.push((SemanticRule::FilterInequality, SparqlExpr::Empty));
                }
            }
            _ => {}
        },
        SparqlExpr::Filter(q2, FilterCondition::EqVar(x, y)) => {
            if let Some(s) = top {
                let (x, y) = if s.contains(y) { (y, x) } else { (x, y) };
                if select_substitution_equivalent(q2, x, y, s, sigma, budget).is_ok() {
                    out.push((SemanticRule::FilterEquality, q2.substitute(y, x)));
                }
            }
        }
        _ => {}
    }
    out
}

/// All single-step Opt/Filter rewrites of `q` whose preconditions are
/// established by the chase. Equality filters are only eliminated at the
/// root, directly under the projection.
pub fn semantic_rewrites(q: &SparqlQuery, sigma: &[Constraint], budget: u64) -> Vec<SemanticRewrite> {
    let mut all = Vec::new();
    sites(&q.body, &mut Vec::new(), &mut all);
    let mut out = Vec::new();
    for site in all {
        let e = at(&q.body, &site);
        let top = site.is_empty().then_some(&q.projection);
        for (rule, after) in site_rewrites(e, top, sigma, budget) {
            let body = replace(&q.body, &site, &after);
            out.push(SemanticRewrite {
                rule,
                site: site.clone(),
                before: e.clone(),
                after,
                result: SparqlQuery { projection: q.projection.clone(), body },
            });
        }
    }
    out
}

/// The Filter rewrites among [`semantic_rewrites`].
pub fn filter_rewrites(q: &SparqlQuery, sigma: &[Constraint], budget: u64) -> Vec<SemanticRewrite> {
    semantic_rewrites(q, sigma, budget)
        .into_iter()
        .filter(|r| matches!(r.rule, SemanticRule::FilterUnbound | SemanticRule::FilterEquality | SemanticRule::FilterInequality))
        .collect()
}

// ---------------------------------------------------------------------------
// Test documents

/// Chases the triple instance of `d` with Σ and reads the result back as a
/// document; nulls become fresh IRIs. `None` if the chase does not succeed
/// or the result is not a valid RDF document.
pub fn model_document(d: &Document, sigma: &[Constraint], budget: u64) -> Option<Document> {
    let inst = instance_from_document(d);
    let ChaseOutcome::Terminated { instance, .. } = chase::chase(&inst, sigma, budget) else { return None };
    let term = |v: &Value| match v {
        Value::Const(t) => t.clone(),
        Value::Null(i) => Term::iri(format!("null{i}")),
    };
    let mut out = Document::new();
    for f in instance.tuples(cq::TRIPLE_RELATION) {
        out.insert(Triple::new(term(&f[0]), term(&f[1]), term(&f[2])).ok()?);
    }
    Some(out)
}

/// A random document over `vocab` with at most `max_triples` triples.
pub fn random_document(rng: &mut impl Rng, vocab: &[Term], max_triples: usize) -> Document {
    let n = rng.gen_range(0..=max_triples);
    let mut d = Document::new();
    for _ in 0..n {
        let mut pick = || vocab[rng.gen_range(0..vocab.len())].clone();
        let (s, p, o) = (pick(), pick(), pick());
        if let Ok(t) = Triple::new(s, p, o) {
            d.insert(t);
        }
    }
    d
}

/// Random documents that satisfy Σ, obtained by chasing random seeds.
pub fn random_models(rng: &mut impl Rng, sigma: &[Constraint], vocab: &[Term], count: usize, budget: u64) -> Vec<Document> {
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < count && tries < count * 50 {
        tries += 1;
        if let Some(d) = model_document(&random_document(rng, vocab, 6), sigma, budget) {
            out.push(d);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{evaluate, translate_query};
    use crate::cq::parse_constraints;
    use crate::syntax::{parse_expr, parse_select_query};

    fn evaluate_query(q: &SparqlQuery, d: &Document) -> crate::algebra::MappingSet {
        evaluate(&translate_query(q), d)
    }

    fn inclusion() -> Vec<Constraint> {
        parse_constraints("const p1, p2;\nT(x1,p1,x2) -> exists y1 . T(x1,p2,y1)").unwrap()
    }

    #[test]
    fn inclusion_dependency_minimization() {
        let q = parse_select_query("SELECT ?x WHERE (?x,p1,?a) AND (?x,p2,?b)").unwrap();
        let r = optimize_bgp(&q, &inclusion(), 1000, Scheme::Auto).unwrap();
        let want = parse_select_query("SELECT ?x WHERE (?x,p1,?a)").unwrap();
        assert_eq!(r.rewrites, vec![want.clone()]);
        assert_eq!(verify(&q, &want, &inclusion(), 1000), Some(true));
        assert!(r.complete);
    }

    #[test]
    fn empty_sigma_keeps_minimal_query() {
        let q = parse_select_query("SELECT ?x WHERE (?x,p1,?a)").unwrap();
        let r = optimize_bgp(&q, &[], 100, Scheme::C1).unwrap();
        assert_eq!(r.rewrites, vec![q]);
    }

    #[test]
    fn noncompleteness() {
        let sigma = parse_constraints("T(x1,x2,x3) -> T(x3,x2,x1)").unwrap();
        let q1 = parse_select_query("SELECT ?x WHERE (?x,b,'l')").unwrap();
        let q2 = parse_select_query("SELECT ?x WHERE (?x,b,'l') AND (?x,a,c)").unwrap();
        let r = optimize_bgp(&q1, &sigma, 1000, Scheme::Auto).unwrap();
        assert!(!r.complete);
        assert!(!r.rewrites.contains(&q2));
        assert_eq!(r.rewrites, vec![q1]);
    }

    #[test]
    fn opt_to_and() {
        let q1 = parse_expr("(?x,p1,?a)").unwrap();
        let q2 = parse_expr("(?x,p2,?b)").unwrap();
        assert!(elim_opt_to_and(&q1, &q2, &inclusion(), 100).is_ok());
        assert!(elim_opt_to_and(&q1, &q2, &[], 100).is_err());
        let q3 = parse_expr("(?x,p3,?c)").unwrap();
        let dup = parse_expr("(?x,p1,?a)").unwrap();
        assert_eq!(
            elim_opt_redundant_bgp(&q1, &dup, &q3, &[], 100).unwrap(),
            SparqlExpr::opt(q1.clone(), q3.clone())
        );
        assert!(elim_opt_redundant_bgp(&q1, &q2, &q3, &[], 100).is_err());
    }

    #[test]
    fn filter_unbound_becomes_empty() {
        let q = parse_select_query("SELECT ?x WHERE ((?x,p1,?a) OPT (?x,p2,?b)) FILTER !bnd(?b)").unwrap();
        let rs = filter_rewrites(&q, &inclusion(), 100);
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].result.body, SparqlExpr::Empty);
        assert!(filter_rewrites(&q, &[], 100).is_empty());
    }

    #[test]
    fn filter_equality_by_egd() {
        let sigma = parse_constraints("const p;\nT(x,p,y), T(x,p,z) -> y = z").unwrap();
        let q = parse_select_query("SELECT ?s ?x WHERE ((?s,p,?x) AND (?s,p,?y)) FILTER ?x = ?y").unwrap();
        let rs = filter_rewrites(&q, &sigma, 100);
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].result.to_string(), "SELECT ?s ?x WHERE ((?s, p, ?x) AND (?s, p, ?x))");
        let d = crate::rdf::parse_document("(a,p,b)\n(c,p,d)\n(c,q,e)").unwrap();
        assert_eq!(evaluate_query(&q, &d), evaluate_query(&rs[0].result, &d));
    }

    #[test]
    fn filter_inequality_needs_strengthened_precondition() {
        let q2 = parse_expr("(?s,p,?x) AND (?s,p,?y)").unwrap();
        let (x, y) = (Variable::new("x"), Variable::new("y"));
        let s: BTreeSet<Variable> = [Variable::new("s"), Variable::new("x")].into_iter().collect();
        // The stated precondition holds without constraints ...
        assert!(select_substitution_equivalent(&q2, &x, &y, &s, &[], 100).is_ok());
        // ... yet the negated filter has answers, so the rewrite is refused.
        let q = parse_select_query("SELECT ?s ?x ?y WHERE ((?s,p,?x) AND (?s,p,?y)) FILTER !(?x = ?y)").unwrap();
        let d = crate::rdf::parse_document("(a,p,b)\n(a,p,c)").unwrap();
        assert!(!evaluate_query(&q, &d).is_empty());
        assert!(filter_rewrites(&q, &[], 100).is_empty());
        let egd = parse_constraints("const p;\nT(x,p,y), T(x,p,z) -> y = z").unwrap();
        let rs = filter_rewrites(&q, &egd, 100);
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].after, SparqlExpr::Empty);
    }
}
