//! Reduction instances: QBF and 3SAT encoded as SPARQL evaluation problems,
//! together with brute-force logical oracles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;

use crate::algebra::{membership, Mapping};
use crate::error::{Error, Result};
use crate::rdf::{Document, Term, Triple, Variable};
use crate::syntax::{FilterCondition, Parsed, SparqlExpr, SparqlQuery};

/// Upper bound on propositional variables accepted by the brute-force oracles.
pub const MAX_ORACLE_VARS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub var: String,
    pub positive: bool,
}

impl Literal {
    pub fn pos(v: &str) -> Self {
        Literal { var: v.into(), positive: true }
    }

    pub fn neg(v: &str) -> Self {
        Literal { var: v.into(), positive: false }
    }

    pub fn eval(&self, a: &BTreeMap<String, bool>) -> bool {
        a.get(&self.var).copied().unwrap_or(false) == self.positive
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.var)
        } else {
            write!(f, "!{}", self.var)
        }
    }
}

/// Propositional formula over ∧, ∨, ¬. An empty `And` is true, an empty `Or` false.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Var(String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn var(v: &str) -> Self {
        Formula::Var(v.into())
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn lit(l: &Literal) -> Self {
        if l.positive {
            Formula::var(&l.var)
        } else {
            Formula::not(Formula::var(&l.var))
        }
    }

    /// CNF formula from a clause list.
    pub fn cnf(clauses: &[Vec<Literal>]) -> Self {
        Formula::And(clauses.iter().map(|c| Formula::Or(c.iter().map(Formula::lit).collect())).collect())
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Var(v) => {
                out.insert(v.clone());
            }
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
        }
    }

    pub fn eval(&self, a: &BTreeMap<String, bool>) -> bool {
        match self {
            Formula::Var(v) => a.get(v).copied().unwrap_or(false),
            Formula::Not(f) => !f.eval(a),
            Formula::And(fs) => fs.iter().all(|f| f.eval(a)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(a)),
        }
    }

    fn as_literal(&self) -> Option<Literal> {
        match self {
            Formula::Var(v) => Some(Literal::pos(v)),
            Formula::Not(f) => match f.as_ref() {
                Formula::Var(v) => Some(Literal::neg(v)),
                _ => None,
            },
            _ => None,
        }
    }

    fn as_clause(&self) -> Option<Vec<Literal>> {
        match self {
            Formula::Or(fs) => fs.iter().map(Formula::as_literal).collect(),
            f => f.as_literal().map(|l| vec![l]),
        }
    }

    /// Clause list if the formula is in conjunctive normal form.
    pub fn clauses(&self) -> Option<Vec<Vec<Literal>>> {
        match self {
            Formula::And(fs) => fs.iter().map(Formula::as_clause).collect(),
            f => f.as_clause().map(|c| vec![c]),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Formula::Var(v) => write!(f, "{v}"),
            Formula::Not(g) => {
                write!(f, "!")?;
                g.fmt_prec(f, 3)
            }
            Formula::And(fs) if fs.is_empty() => write!(f, "true"),
            Formula::Or(fs) if fs.is_empty() => write!(f, "false"),
            Formula::And(fs) | Formula::Or(fs) => {
                let (sep, p) = if matches!(self, Formula::And(_)) { (" & ", 2) } else { (" | ", 1) };
                let paren = fs.len() > 1 && prec > p;
                if paren {
                    write!(f, "(")?;
                }
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    g.fmt_prec(f, p + 1)?;
                }
                if paren {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantBlock {
    pub quantifier: Quantifier,
    pub vars: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qbf {
    pub prefix: Vec<QuantBlock>,
    pub matrix: Formula,
}

impl Qbf {
    /// Checks that prefix variables are distinct.
    pub fn new(prefix: Vec<QuantBlock>, matrix: Formula) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for v in prefix.iter().flat_map(|b| &b.vars) {
            if !seen.insert(v.clone()) {
                return Err(Error::Shape(format!("variable {v} is quantified twice")));
            }
        }
        Ok(Qbf { prefix, matrix })
    }

    /// ∀x1∃y1…∀xm∃ym ψ with one variable per block.
    pub fn alternating(pairs: &[(&str, &str)], matrix: Formula) -> Result<Self> {
        let mut prefix = Vec::new();
        for (x, y) in pairs {
            prefix.push(QuantBlock { quantifier: Quantifier::Forall, vars: vec![x.to_string()] });
            prefix.push(QuantBlock { quantifier: Quantifier::Exists, vars: vec![y.to_string()] });
        }
        Qbf::new(prefix, matrix)
    }

    pub fn prefix_vars(&self) -> Vec<String> {
        self.prefix.iter().flat_map(|b| b.vars.iter().cloned()).collect()
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let bound: BTreeSet<String> = self.prefix_vars().into_iter().collect();
        self.matrix.vars().into_iter().filter(|v| !bound.contains(v)).collect()
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// The prefix as m pairs (universal block, existential block); consecutive
    /// blocks with the same quantifier are merged and missing blocks are empty.
    pub fn alternation(&self) -> Vec<(Vec<String>, Vec<String>)> {
        let mut pairs: Vec<(Vec<String>, Vec<String>)> = Vec::new();
        let mut last: Option<Quantifier> = None;
        for b in self.prefix.iter().filter(|b| !b.vars.is_empty()) {
            match b.quantifier {
                Quantifier::Forall => {
                    if last != Some(Quantifier::Forall) {
                        pairs.push((Vec::new(), Vec::new()));
                    }
                    pairs.last_mut().unwrap().0.extend(b.vars.iter().cloned());
                }
                Quantifier::Exists => {
                    if last.is_none() {
                        pairs.push((Vec::new(), Vec::new()));
                    }
                    pairs.last_mut().unwrap().1.extend(b.vars.iter().cloned());
                }
            }
            last = Some(b.quantifier);
        }
        pairs
    }
}

impl fmt::Display for Qbf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for b in self.prefix.iter().filter(|b| !b.vars.is_empty()) {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            let q = match b.quantifier {
                Quantifier::Forall => "forall",
                Quantifier::Exists => "exists",
            };
            write!(f, "{q} {}", b.vars.join(" "))?;
        }
        if !first {
            writeln!(f)?;
        }
        write!(f, "{}", self.matrix)
    }
}

/// 3-CNF formula: every clause has exactly three literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf3 {
    pub vars: Vec<String>,
    pub clauses: Vec<[Literal; 3]>,
}

impl Cnf3 {
    pub fn new(vars: Vec<String>, clauses: Vec<Vec<Literal>>) -> Result<Self> {
        let declared: BTreeSet<&String> = vars.iter().collect();
        let mut out = Vec::new();
        for (i, c) in clauses.into_iter().enumerate() {
            if let Some(l) = c.iter().find(|l| !declared.contains(&l.var)) {
                return Err(Error::Shape(format!("clause {} uses undeclared variable {}", i + 1, l.var)));
            }
            let arr: [Literal; 3] = c
                .try_into()
                .map_err(|c: Vec<Literal>| Error::Shape(format!("clause {} has {} literals, expected 3", i + 1, c.len())))?;
            out.push(arr);
        }
        Ok(Cnf3 { vars, clauses: out })
    }

    pub fn used_vars(&self) -> Vec<String> {
        let used: BTreeSet<&String> = self.clauses.iter().flatten().map(|l| &l.var).collect();
        self.vars.iter().filter(|v| used.contains(v)).cloned().collect()
    }

    pub fn formula(&self) -> Formula {
        let cs: Vec<Vec<Literal>> = self.clauses.iter().map(|c| c.to_vec()).collect();
        Formula::cnf(&cs)
    }
}

/// A generated evaluation instance: the answer is "yes" iff `target` belongs
/// to the result of `query` on `document`.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub document: Document,
    pub query: Parsed,
    pub target: Mapping,
}

impl Encoding {
    pub fn holds(&self) -> bool {
        membership(&self.target, &self.document, &self.query)
    }

    pub fn expr(&self) -> &SparqlExpr {
        self.query.body()
    }
}

fn iri(s: &str) -> Term {
    Term::iri(s)
}

fn triple(s: &str, p: &str, o: &str) -> Triple {
    Triple::new(iri(s), iri(p), iri(o)).expect("IRI triple")
}

fn pat(s: &str, p: &str, o: &str) -> SparqlExpr {
    SparqlExpr::pat(s, p, o)
}

fn and_chain(items: Vec<SparqlExpr>) -> SparqlExpr {
    SparqlExpr::and_all(items).unwrap_or(SparqlExpr::Empty)
}

fn opt_chain(items: Vec<SparqlExpr>) -> SparqlExpr {
    let mut it = items.into_iter();
    let first = it.next().unwrap_or(SparqlExpr::Empty);
    it.fold(first, SparqlExpr::opt)
}

/// The four-triple document shared by the QBF encodings.
pub fn qbf_base_document() -> Document {
    let mut d = Document::new();
    for (p, o) in [("tv", "0"), ("tv", "1"), ("false", "0"), ("true", "1")] {
        d.insert(triple("a", p, o));
    }
    d
}

/// Variable naming for a closed QBF: universals X1, X2, …, existentials
/// Y1, Y2, … numbered in prefix order.
struct Naming {
    pairs: Vec<(Vec<String>, Vec<String>)>,
    names: BTreeMap<String, String>,
}

impl Naming {
    fn new(phi: &Qbf) -> Result<Self> {
        if !phi.is_closed() {
            let free: Vec<String> = phi.free_vars().into_iter().collect();
            return Err(Error::Shape(format!("free variables {}", free.join(", "))));
        }
        if phi.matrix.vars().is_empty() {
            return Err(Error::Shape("matrix has no variables".into()));
        }
        let pairs = phi.alternation();
        let mut names = BTreeMap::new();
        let (mut nx, mut ny) = (0, 0);
        for (xs, ys) in &pairs {
            for x in xs {
                nx += 1;
                names.insert(x.clone(), format!("X{nx}"));
            }
            for y in ys {
                ny += 1;
                names.insert(y.clone(), format!("Y{ny}"));
            }
        }
        Ok(Naming { pairs, names })
    }

    fn var(&self, v: &str) -> &str {
        &self.names[v]
    }

    /// `?name` for a prefix variable.
    fn qvar(&self, v: &str) -> String {
        format!("?{}", self.var(v))
    }

    /// P_i: universal variables of blocks ≤ i, existentials of blocks < i, and the ?A markers.
    fn p_parts(&self, i: usize) -> Vec<SparqlExpr> {
        let mut parts = Vec::new();
        for (xs, _) in &self.pairs[..i] {
            parts.extend(xs.iter().map(|x| pat("a", "tv", &self.qvar(x))));
        }
        for (_, ys) in &self.pairs[..i - 1] {
            parts.extend(ys.iter().map(|y| pat("a", "tv", &self.qvar(y))));
        }
        parts.push(pat("a", "false", &format!("?A{}", i - 1)));
        parts.push(pat("a", "true", &format!("?A{i}")));
        parts
    }

    fn q_parts(&self, i: usize) -> Vec<SparqlExpr> {
        let mut parts = Vec::new();
        for (xs, _) in &self.pairs[..i] {
            parts.extend(xs.iter().map(|x| pat("a", "tv", &self.qvar(x))));
        }
        for (_, ys) in &self.pairs[..i] {
            parts.extend(ys.iter().map(|y| pat("a", "tv", &self.qvar(y))));
        }
        parts.push(pat("a", "false", &format!("?B{}", i - 1)));
        parts.push(pat("a", "true", &format!("?B{i}")));
        parts
    }

    /// (a,true,?B0) Opt (P1 Opt (Q1 Opt (… Opt (Pm Opt inner))))
    fn shell(&self, combine: impl Fn(Vec<SparqlExpr>) -> SparqlExpr, innermost: SparqlExpr) -> SparqlExpr {
        let m = self.pairs.len();
        let mut e = innermost;
        for i in (1..=m).rev() {
            if i < m {
                e = SparqlExpr::opt(combine(self.q_parts(i)), e);
            }
            e = SparqlExpr::opt(combine(self.p_parts(i)), e);
        }
        SparqlExpr::opt(pat("a", "true", "?B0"), e)
    }
}

fn target_b0() -> Mapping {
    Mapping::from_pairs([("B0", iri("1"))])
}

fn filter_of(f: &Formula, n: &Naming) -> Result<FilterCondition> {
    Ok(match f {
        Formula::Var(v) => FilterCondition::eq_const(n.var(v), iri("1")),
        Formula::Not(g) => FilterCondition::not(filter_of(g, n)?),
        Formula::And(fs) | Formula::Or(fs) => {
            let mut conds = fs.iter().map(|g| filter_of(g, n)).collect::<Result<Vec<_>>>()?.into_iter();
            let first = conds.next().ok_or_else(|| Error::Shape("empty conjunction or disjunction in matrix".into()))?;
            if matches!(f, Formula::And(_)) {
                conds.fold(first, FilterCondition::and)
            } else {
                conds.fold(first, FilterCondition::or)
            }
        }
    })
}

/// Encoding with And, Filter and Opt over the four-triple document.
pub fn encode_qbf_afo(phi: &Qbf) -> Result<Encoding> {
    let n = Naming::new(phi)?;
    let vars: Vec<SparqlExpr> = phi.matrix.vars().iter().map(|v| pat("a", "tv", &n.qvar(v))).collect();
    let p_psi = SparqlExpr::filter(and_chain(vars), filter_of(&phi.matrix, &n)?)?;
    let m = n.pairs.len();
    let inner = SparqlExpr::opt(and_chain(n.p_parts(m)), SparqlExpr::and(and_chain(n.q_parts(m)), p_psi));
    let body = n.shell(and_chain, inner);
    Ok(Encoding { document: qbf_base_document(), query: Parsed::Expr(body), target: target_b0() })
}

struct CnfParts {
    naming: Naming,
    document: Document,
    clauses: Vec<Vec<Literal>>,
}

fn cnf_parts(phi: &Qbf) -> Result<CnfParts> {
    let clauses = phi.matrix.clauses().ok_or_else(|| Error::Shape("matrix is not in CNF".into()))?;
    if clauses.is_empty() || clauses.iter().any(|c| c.is_empty()) {
        return Err(Error::Shape("CNF matrix needs at least one clause and no empty clause".into()));
    }
    let naming = Naming::new(phi)?;
    let mut document = qbf_base_document();
    for (i, c) in clauses.iter().enumerate() {
        for l in c {
            document.insert(triple("a", &format!("var{}", i + 1), &value_iri(&naming, &l.var)));
        }
    }
    for v in phi.matrix.vars() {
        let x = value_iri(&naming, &v);
        document.insert(triple("a", &x, &x));
    }
    Ok(CnfParts { naming, document, clauses })
}

/// IRI standing for a propositional variable in the clause encodings.
fn value_iri(n: &Naming, v: &str) -> String {
    n.var(v).to_lowercase()
}

/// P_{C_i}. A clause containing a variable in both polarities is always
/// satisfied and is encoded by its selector pattern alone.
fn clause_expr(i: usize, c: &[Literal], n: &Naming, join: fn(SparqlExpr, SparqlExpr) -> SparqlExpr) -> SparqlExpr {
    let sel = format!("?var{i}");
    let base = pat("a", &format!("var{i}"), &sel);
    let tautology = c.iter().any(|l| c.iter().any(|k| k.var == l.var && k.positive != l.positive));
    if tautology {
        return base;
    }
    let mut ordered: Vec<&Literal> = c.iter().filter(|l| l.positive).collect();
    ordered.extend(c.iter().filter(|l| !l.positive));
    ordered.into_iter().fold(base, |e, l| {
        let tv = if l.positive { "true" } else { "false" };
        let arm = join(pat("a", &value_iri(n, &l.var), &sel), pat("a", tv, &n.qvar(&l.var)));
        SparqlExpr::opt(e, arm)
    })
}

/// Encoding with And and Opt; the matrix must be in CNF.
pub fn encode_qbf_ao(phi: &Qbf) -> Result<Encoding> {
    let CnfParts { naming: n, document, clauses } = cnf_parts(phi)?;
    let p_psi = and_chain(clauses.iter().enumerate().map(|(i, c)| clause_expr(i + 1, c, &n, SparqlExpr::and)).collect());
    let m = n.pairs.len();
    let inner = SparqlExpr::opt(and_chain(n.p_parts(m)), SparqlExpr::and(and_chain(n.q_parts(m)), p_psi));
    let body = n.shell(and_chain, inner);
    Ok(Encoding { document, query: Parsed::Expr(body), target: target_b0() })
}

/// Opt-only encoding; the matrix must be in CNF.
pub fn encode_qbf_o(phi: &Qbf) -> Result<Encoding> {
    let CnfParts { naming: n, document, clauses } = cnf_parts(phi)?;
    let m = n.pairs.len();
    let mut conjuncts = vec![opt_chain(n.q_parts(m))];
    conjuncts.extend(clauses.iter().enumerate().map(|(i, c)| clause_expr(i + 1, c, &n, SparqlExpr::opt)));
    let fresh: Vec<String> = (2..=conjuncts.len()).map(|i| format!("V{i}")).collect();
    let inner = and_elimination(opt_chain(n.p_parts(m)), &conjuncts, &fresh)?.rhs;
    let body = n.shell(opt_chain, inner);
    Ok(Encoding { document, query: Parsed::Expr(body), target: target_b0() })
}

/// Both sides of the And-elimination equation for Q Opt (Q1 And … And Qn).
#[derive(Debug, Clone)]
pub struct AndElimination {
    /// Q′ = (…(Q Opt V2) … Opt Vn)
    pub q_prime: SparqlExpr,
    /// Q′ Opt (Q1 And … And Qn)
    pub lhs: SparqlExpr,
    /// Q′ Opt ((…(Q″ Opt V̄2) …) Opt V̄n)
    pub rhs: SparqlExpr,
    pub fresh: Vec<Variable>,
}

/// Builds the And-free right-hand side using the given fresh variable names
/// (one fewer than the number of conjuncts).
pub fn and_elimination(q: SparqlExpr, conjuncts: &[SparqlExpr], fresh: &[String]) -> Result<AndElimination> {
    if conjuncts.len() < 2 {
        return Err(Error::Shape("need at least two conjuncts".into()));
    }
    if fresh.len() != conjuncts.len() - 1 {
        return Err(Error::Shape(format!("need {} fresh variables, got {}", conjuncts.len() - 1, fresh.len())));
    }
    let mut used = q.vars();
    conjuncts.iter().for_each(|c| used.extend(c.vars()));
    if let Some(v) = fresh.iter().find(|v| used.contains(&Variable::new(v.as_str()))) {
        return Err(Error::Shape(format!("variable ?{v} is not fresh")));
    }
    let v_true = |v: &String| pat("a", "true", &format!("?{v}"));
    let v_false = |v: &String| pat("a", "false", &format!("?{v}"));
    let q_prime = fresh.iter().fold(q, |e, v| SparqlExpr::opt(e, v_true(v)));
    let lhs = SparqlExpr::opt(q_prime.clone(), and_chain(conjuncts.to_vec()));
    let q2 = conjuncts[1..]
        .iter()
        .zip(fresh)
        .fold(conjuncts[0].clone(), |e, (c, v)| SparqlExpr::opt(e, SparqlExpr::opt(c.clone(), v_true(v))));
    let r = fresh.iter().fold(q2, |e, v| SparqlExpr::opt(e, v_false(v)));
    let rhs = SparqlExpr::opt(q_prime.clone(), r);
    Ok(AndElimination { q_prime, lhs, rhs, fresh: fresh.iter().map(|v| Variable::new(v.as_str())).collect() })
}

/// Fresh names V2, V3, … avoiding the variables of the given expressions.
pub fn fresh_v_names(count: usize, avoid: &[&SparqlExpr]) -> Vec<String> {
    let used: BTreeSet<Variable> = avoid.iter().flat_map(|e| e.vars()).collect();
    let mut suffix = String::new();
    loop {
        let names: Vec<String> = (2..count + 2).map(|i| format!("V{suffix}{i}")).collect();
        if names.iter().all(|n| !used.contains(&Variable::new(n.as_str()))) {
            return names;
        }
        suffix.push('_');
    }
}

/// The fixed document of the 3SAT encoding.
pub fn sat_document() -> Document {
    let mut d = Document::new();
    for s in ["0", "1"] {
        for p in ["0", "1"] {
            for o in ["0", "1"] {
                if (s, p, o) != ("0", "0", "0") {
                    d.insert(triple(s, p, o));
                }
            }
        }
    }
    d.insert(triple("0", "c", "1"));
    d.insert(triple("1", "c", "0"));
    d
}

/// And-only body under a projection to ?A.
pub fn encode_3sat(psi: &Cnf3) -> Result<Encoding> {
    if psi.clauses.is_empty() {
        return Err(Error::Shape("formula has no clauses".into()));
    }
    let index: BTreeMap<String, usize> = psi.used_vars().into_iter().enumerate().map(|(i, v)| (v, i + 1)).collect();
    let term = |l: &Literal| {
        let k = index[&l.var];
        if l.positive {
            format!("?X{k}")
        } else {
            format!("?NX{k}")
        }
    };
    let mut parts: Vec<SparqlExpr> = psi.clauses.iter().map(|c| pat(&term(&c[0]), &term(&c[1]), &term(&c[2]))).collect();
    parts.extend(index.values().map(|k| pat(&format!("?X{k}"), "c", &format!("?NX{k}"))));
    parts.push(pat("0", "c", "?A"));
    let query = SparqlQuery::new([Variable::new("A")], and_chain(parts));
    Ok(Encoding { document: sat_document(), query: Parsed::Query(query), target: Mapping::from_pairs([("A", iri("1"))]) })
}

/// Truth value of a closed QBF by exhaustive expansion of the prefix.
pub fn brute_force_qbf(phi: &Qbf) -> Result<bool> {
    if !phi.is_closed() {
        return Err(Error::Shape("brute force needs a closed formula".into()));
    }
    let vars: Vec<(Quantifier, String)> =
        phi.prefix.iter().flat_map(|b| b.vars.iter().map(move |v| (b.quantifier, v.clone()))).collect();
    if vars.len() > MAX_ORACLE_VARS {
        return Err(Error::Size(format!("{} variables, limit {MAX_ORACLE_VARS}", vars.len())));
    }
    fn go(vars: &[(Quantifier, String)], a: &mut BTreeMap<String, bool>, m: &Formula) -> bool {
        let Some(((q, v), rest)) = vars.split_first() else {
            return m.eval(a);
        };
        let branch = |b: bool, a: &mut BTreeMap<String, bool>| {
            a.insert(v.clone(), b);
            go(rest, a, m)
        };
        match q {
            Quantifier::Forall => branch(false, a) && branch(true, a),
            Quantifier::Exists => branch(false, a) || branch(true, a),
        }
    }
    Ok(go(&vars, &mut BTreeMap::new(), &phi.matrix))
}

/// Satisfiability by truth table.
pub fn brute_force_sat(psi: &Cnf3) -> Result<bool> {
    let vars = psi.used_vars();
    if vars.len() > MAX_ORACLE_VARS {
        return Err(Error::Size(format!("{} variables, limit {MAX_ORACLE_VARS}", vars.len())));
    }
    let f = psi.formula();
    Ok((0u32..1 << vars.len()).any(|bits| {
        let a = vars.iter().enumerate().map(|(i, v)| (v.clone(), bits >> i & 1 == 1)).collect();
        f.eval(&a)
    }))
}

// ---------- text formats ----------

#[derive(Debug, Clone, PartialEq)]
enum FTok {
    Id(String),
    Not,
    And,
    Or,
    Imp,
    Iff,
    LParen,
    RParen,
}

fn ftokenize(s: &str, line: usize) -> Result<Vec<FTok>> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        let rest: String = cs[i..].iter().take(3).collect();
        if c.is_whitespace() {
            i += 1;
        } else if rest.starts_with("<->") {
            out.push(FTok::Iff);
            i += 3;
        } else if rest.starts_with("->") {
            out.push(FTok::Imp);
            i += 2;
        } else if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(FTok::Id(cs[start..i].iter().collect()));
        } else {
            out.push(match c {
                '!' | '~' | '-' => FTok::Not,
                '&' => FTok::And,
                '|' => FTok::Or,
                '(' => FTok::LParen,
                ')' => FTok::RParen,
                _ => return Err(Error::Syntax { line, msg: format!("unexpected character '{c}'") }),
            });
            i += 1;
        }
    }
    Ok(out)
}

struct FParser {
    toks: Vec<FTok>,
    pos: usize,
    line: usize,
}

impl FParser {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { line: self.line, msg: msg.into() }
    }

    fn eat(&mut self, t: &FTok) -> bool {
        if self.toks.get(self.pos) == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn iff(&mut self) -> Result<Formula> {
        let l = self.imp()?;
        if self.eat(&FTok::Iff) {
            let r = self.iff()?;
            return Ok(Formula::And(vec![
                Formula::Or(vec![Formula::not(l.clone()), r.clone()]),
                Formula::Or(vec![l, Formula::not(r)]),
            ]));
        }
        Ok(l)
    }

    fn imp(&mut self) -> Result<Formula> {
        let l = self.or()?;
        if self.eat(&FTok::Imp) {
            let r = self.imp()?;
            return Ok(Formula::Or(vec![Formula::not(l), r]));
        }
        Ok(l)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut fs = vec![self.and()?];
        while self.eat(&FTok::Or) {
            fs.push(self.and()?);
        }
        Ok(if fs.len() == 1 { fs.pop().unwrap() } else { Formula::Or(fs) })
    }

    fn and(&mut self) -> Result<Formula> {
        let mut fs = vec![self.unary()?];
        while self.eat(&FTok::And) {
            fs.push(self.unary()?);
        }
        Ok(if fs.len() == 1 { fs.pop().unwrap() } else { Formula::And(fs) })
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.eat(&FTok::Not) {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat(&FTok::LParen) {
            let f = self.iff()?;
            if !self.eat(&FTok::RParen) {
                return Err(self.err("expected ')'"));
            }
            return Ok(f);
        }
        match self.toks.get(self.pos).cloned() {
            Some(FTok::Id(v)) => {
                self.pos += 1;
                Ok(match v.as_str() {
                    "true" => Formula::And(vec![]),
                    "false" => Formula::Or(vec![]),
                    _ => Formula::Var(v),
                })
            }
            _ => Err(self.err("expected a variable, '!' or '('")),
        }
    }
}

/// Parses a propositional formula: `!`, `&`, `|`, `->`, `<->`, parentheses.
pub fn parse_formula(text: &str) -> Result<Formula> {
    parse_formula_at(text, 1)
}

fn parse_formula_at(text: &str, line: usize) -> Result<Formula> {
    let mut p = FParser { toks: ftokenize(text, line)?, pos: 0, line };
    let f = p.iff()?;
    if p.pos < p.toks.len() {
        return Err(p.err("trailing input after formula"));
    }
    Ok(f)
}

/// QBF text format: lines starting with `forall`/`exists` form the prefix
/// (several blocks may share a line), the remaining lines the matrix.
/// `#` starts a comment.
pub fn parse_qbf(text: &str) -> Result<Qbf> {
    let mut prefix = Vec::new();
    let mut matrix = String::new();
    let mut matrix_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let first = line.split_whitespace().next().unwrap_or("");
        if matrix.is_empty() && (first == "forall" || first == "exists") {
            for w in line.split_whitespace() {
                match w {
                    "forall" => prefix.push(QuantBlock { quantifier: Quantifier::Forall, vars: vec![] }),
                    "exists" => prefix.push(QuantBlock { quantifier: Quantifier::Exists, vars: vec![] }),
                    v if v.chars().all(|c| c.is_alphanumeric() || c == '_') => prefix.last_mut().unwrap().vars.push(v.into()),
                    v => return Err(Error::Syntax { line: i + 1, msg: format!("bad variable name '{v}'") }),
                }
            }
        } else {
            if matrix.is_empty() {
                matrix_line = i + 1;
            }
            matrix.push_str(line);
            matrix.push(' ');
        }
    }
    if matrix.trim().is_empty() {
        return Err(Error::Syntax { line: text.lines().count().max(1), msg: "missing matrix".into() });
    }
    Qbf::new(prefix, parse_formula_at(&matrix, matrix_line)?)
}

/// DIMACS CNF: `c` comment lines, an optional `p cnf V C` header, clauses of
/// signed integers terminated by 0. Variable k is named `x{k}`.
pub fn parse_dimacs(text: &str) -> Result<(Vec<String>, Vec<Vec<Literal>>)> {
    let mut declared = None;
    let mut clauses = Vec::new();
    let mut cur = Vec::new();
    let mut max_var = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        let err = |msg: String| Error::Syntax { line: i + 1, msg };
        if line.starts_with('p') {
            let w: Vec<&str> = line.split_whitespace().collect();
            if w.len() != 4 || w[1] != "cnf" {
                return Err(err("expected 'p cnf <vars> <clauses>'".into()));
            }
            declared = Some(w[2].parse::<usize>().map_err(|e| err(e.to_string()))?);
            continue;
        }
        for w in line.split_whitespace() {
            let n: i64 = w.parse().map_err(|_| err(format!("bad literal '{w}'")))?;
            if n == 0 {
                clauses.push(std::mem::take(&mut cur));
            } else {
                let k = n.unsigned_abs() as usize;
                max_var = max_var.max(k);
                cur.push(Literal { var: format!("x{k}"), positive: n > 0 });
            }
        }
    }
    if !cur.is_empty() {
        clauses.push(cur);
    }
    let n = declared.unwrap_or(max_var);
    if max_var > n {
        return Err(Error::Syntax { line: 1, msg: format!("variable {max_var} exceeds declared count {n}") });
    }
    Ok(((1..=n).map(|k| format!("x{k}")).collect(), clauses))
}

pub fn parse_cnf3(text: &str) -> Result<Cnf3> {
    let (vars, clauses) = parse_dimacs(text)?;
    Cnf3::new(vars, clauses)
}

impl Cnf3 {
    pub fn to_dimacs(&self) -> String {
        let idx: BTreeMap<&String, usize> = self.vars.iter().enumerate().map(|(i, v)| (v, i + 1)).collect();
        let mut s = format!("p cnf {} {}\n", self.vars.len(), self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let k = idx[&l.var] as i64;
                s.push_str(&format!("{} ", if l.positive { k } else { -k }));
            }
            s.push_str("0\n");
        }
        s
    }
}

// ---------- random instances ----------

/// Random closed QBF with a CNF matrix: `blocks` ∀∃ pairs, at most `max_vars`
/// variables, 1..=`max_clauses` clauses of 1..=3 literals.
pub fn random_cnf_qbf(rng: &mut impl Rng, max_blocks: usize, max_vars: usize, max_clauses: usize) -> Qbf {
    let blocks = rng.gen_range(1..=max_blocks.max(1));
    let nvars = rng.gen_range(blocks.min(max_vars).max(1)..=max_vars.max(1));
    let mut prefix = Vec::new();
    let mut names = Vec::new();
    for k in 0..nvars {
        let name = format!("v{}", k + 1);
        let slot = if k < 2 * blocks { k } else { rng.gen_range(0..2 * blocks) };
        names.push((slot, name));
    }
    names.sort();
    for slot in 0..2 * blocks {
        let vars: Vec<String> = names.iter().filter(|(s, _)| *s == slot).map(|(_, n)| n.clone()).collect();
        let quantifier = if slot % 2 == 0 { Quantifier::Forall } else { Quantifier::Exists };
        prefix.push(QuantBlock { quantifier, vars });
    }
    let all: Vec<String> = names.into_iter().map(|(_, n)| n).collect();
    let nclauses = rng.gen_range(1..=max_clauses.max(1));
    let clauses: Vec<Vec<Literal>> = (0..nclauses)
        .map(|_| {
            (0..rng.gen_range(1..=3))
                .map(|_| Literal { var: all[rng.gen_range(0..all.len())].clone(), positive: rng.gen_bool(0.5) })
                .collect()
        })
        .collect();
    Qbf::new(prefix, Formula::cnf(&clauses)).expect("distinct prefix variables")
}

/// Random 3-CNF over `nvars` variables with 1..=`max_clauses` clauses.
pub fn random_cnf3(rng: &mut impl Rng, nvars: usize, max_clauses: usize) -> Cnf3 {
    let vars: Vec<String> = (1..=nvars.max(1)).map(|k| format!("x{k}")).collect();
    let n = rng.gen_range(1..=max_clauses.max(1));
    let clauses = (0..n)
        .map(|_| {
            (0..3)
                .map(|_| Literal { var: vars[rng.gen_range(0..vars.len())].clone(), positive: rng.gen_bool(0.5) })
                .collect()
        })
        .collect();
    Cnf3::new(vars, clauses).expect("three literals per clause")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{evaluate, translate_expr, MappingSet};

    fn iff_qbf() -> Qbf {
        Qbf::alternating(&[("x1", "y1")], parse_formula("(x1 | !y1) & (!x1 | y1)").unwrap()).unwrap()
    }

    fn m(pairs: &[(&str, &str)]) -> Mapping {
        Mapping::from_pairs(pairs.iter().map(|(v, t)| (*v, iri(t))))
    }

    #[test]
    fn afo_valid_and_invalid() {
        let phi = Qbf::alternating(&[("x1", "y1")], parse_formula("x1 <-> y1").unwrap()).unwrap();
        assert!(encode_qbf_afo(&phi).unwrap().holds());
        let bad = Qbf::alternating(&[("x1", "y1")], parse_formula("x1 & !y1 & y1").unwrap()).unwrap();
        assert!(!brute_force_qbf(&bad).unwrap());
        assert!(!encode_qbf_afo(&bad).unwrap().holds());
    }

    #[test]
    fn afo_rejects_variable_free_matrix() {
        let phi = Qbf::new(vec![], Formula::And(vec![])).unwrap();
        assert!(matches!(encode_qbf_afo(&phi), Err(Error::Shape(_))));
        assert!(matches!(encode_qbf_ao(&phi), Err(Error::Shape(_))));
    }

    #[test]
    fn ao_worked_example() {
        let phi = iff_qbf();
        let enc = encode_qbf_ao(&phi).unwrap();
        assert_eq!(enc.document.len(), 10);
        assert!(enc.document.contains(&triple("a", "var1", "x1")));
        assert!(enc.document.contains(&triple("a", "y1", "y1")));
        let n = Naming::new(&phi).unwrap();
        let clauses = phi.matrix.clauses().unwrap();
        let p_psi = SparqlExpr::and(
            clause_expr(1, &clauses[0], &n, SparqlExpr::and),
            clause_expr(2, &clauses[1], &n, SparqlExpr::and),
        );
        let got = evaluate(&translate_expr(&p_psi), &enc.document);
        let want: MappingSet = [
            m(&[("var1", "x1"), ("var2", "y1"), ("X1", "1"), ("Y1", "1")]),
            m(&[("var1", "y1"), ("var2", "x1"), ("X1", "0"), ("Y1", "0")]),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, want);
        assert!(enc.holds());
        let fr = enc.expr().fragment();
        assert!(!fr.filter && !fr.union);
    }

    #[test]
    fn o_encoding_is_opt_only() {
        let enc = encode_qbf_o(&iff_qbf()).unwrap();
        fn opt_only(e: &SparqlExpr) -> bool {
            match e {
                SparqlExpr::Triple(_) => true,
                SparqlExpr::Opt(a, b) => opt_only(a) && opt_only(b),
                _ => false,
            }
        }
        assert!(opt_only(enc.expr()));
        assert!(enc.holds());
    }

    #[test]
    fn and_elimination_example() {
        let q = pat("a", "tv", "?a");
        let qs = [pat("a", "true", "?a"), pat("a", "false", "?b")];
        let ae = and_elimination(q, &qs, &["V2".to_string()]).unwrap();
        let d = qbf_base_document();
        let want: MappingSet =
            [m(&[("a", "0"), ("V2", "1")]), m(&[("a", "1"), ("b", "0"), ("V2", "1")])].into_iter().collect();
        assert_eq!(evaluate(&translate_expr(&ae.lhs), &d), want);
        assert_eq!(evaluate(&translate_expr(&ae.rhs), &d), want);
        assert!(and_elimination(pat("a", "tv", "?V2"), &qs, &["V2".to_string()]).is_err());
    }

    #[test]
    fn sat_encoding() {
        let sat = parse_cnf3("p cnf 3 2\n1 -2 3 0\n-1 2 3 0\n").unwrap();
        assert!(brute_force_sat(&sat).unwrap());
        assert!(encode_3sat(&sat).unwrap().holds());
        let mut all = String::from("p cnf 3 8\n");
        for bits in 0..8 {
            for k in 0..3 {
                let s = if bits >> k & 1 == 1 { 1 } else { -1 };
                all.push_str(&format!("{} ", s * (k + 1)));
            }
            all.push_str("0\n");
        }
        let unsat = parse_cnf3(&all).unwrap();
        assert!(!brute_force_sat(&unsat).unwrap());
        assert!(!encode_3sat(&unsat).unwrap().holds());
        let single = parse_cnf3("1 1 1 0").unwrap();
        assert!(encode_3sat(&single).unwrap().holds());
    }

    #[test]
    fn sat_document_with_all_zero_triple_accepts_everything() {
        let unsat = Cnf3::new(
            vec!["x".into()],
            vec![vec![Literal::pos("x"); 3], vec![Literal::neg("x"); 3]],
        )
        .unwrap();
        let mut enc = encode_3sat(&unsat).unwrap();
        assert_eq!(enc.document.len(), 9);
        assert!(!enc.holds());
        enc.document.insert(triple("0", "0", "0"));
        assert!(enc.holds());
    }

    #[test]
    fn cnf3_arity() {
        assert!(matches!(parse_cnf3("1 2 0"), Err(Error::Shape(_))));
    }

    #[test]
    fn oracle_basics() {
        let taut = Qbf::new(
            vec![QuantBlock { quantifier: Quantifier::Forall, vars: vec!["x".into()] }],
            parse_formula("x | !x").unwrap(),
        )
        .unwrap();
        assert!(brute_force_qbf(&taut).unwrap());
        let contra = Qbf::new(
            vec![QuantBlock { quantifier: Quantifier::Exists, vars: vec!["x".into()] }],
            parse_formula("x & !x").unwrap(),
        )
        .unwrap();
        assert!(!brute_force_qbf(&contra).unwrap());
        let open = Qbf::new(vec![], parse_formula("x").unwrap()).unwrap();
        assert!(brute_force_qbf(&open).is_err());
    }

    #[test]
    fn qbf_text_round_trip() {
        let phi = parse_qbf("# example\nforall x1 exists y1\n(x1 | !y1) & (!x1 | y1)\n").unwrap();
        assert_eq!(phi, iff_qbf());
        assert_eq!(parse_qbf(&phi.to_string()).unwrap(), phi);
    }

    #[test]
    fn leading_existential_block() {
        let phi = parse_qbf("exists y forall x\ny | x | !x").unwrap();
        assert_eq!(phi.alternation(), vec![(vec![], vec!["y".to_string()]), (vec!["x".to_string()], vec![])]);
        assert!(encode_qbf_afo(&phi).unwrap().holds());
        assert!(encode_qbf_ao(&phi).unwrap().holds());
        assert!(encode_qbf_o(&phi).unwrap().holds());
    }
}
