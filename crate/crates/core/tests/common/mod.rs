#![allow(dead_code)]

use rand::Rng;
use sparqlopt::algebra::AlgebraExpr;
use sparqlopt::chase::{Instance, Value};
use sparqlopt::cq::{parse_constraints, Constraint};
use sparqlopt::rdf::{parse_document, Document, Term};
use sparqlopt::rewrite::{rewrite_root, Direction, RuleId, Site};
use sparqlopt::sqo::random_document;
use sparqlopt::syntax::{parse_expr, FilterCondition, SparqlExpr, TriplePattern};
use sparqlopt::termination::is_weakly_acyclic;

pub const CONSTS: [&str; 4] = ["0", "1", "c", "d"];
pub const VARS: [&str; 3] = ["x", "y", "z"];

pub fn vocab() -> Vec<Term> {
    CONSTS.iter().map(|c| Term::iri(*c)).collect()
}

pub fn doc(rng: &mut impl Rng) -> Document {
    random_document(rng, &vocab(), 6)
}

fn term(rng: &mut impl Rng, var_bias: f64) -> String {
    if rng.gen_bool(var_bias) {
        format!("?{}", VARS[rng.gen_range(0..VARS.len())])
    } else {
        CONSTS[rng.gen_range(0..CONSTS.len())].to_string()
    }
}

pub fn leaf(rng: &mut impl Rng) -> AlgebraExpr {
    leaf_with(rng, 0.6)
}

pub fn leaf_with(rng: &mut impl Rng, var_bias: f64) -> AlgebraExpr {
    let s = term(rng, var_bias);
    let p = term(rng, var_bias / 3.0);
    let o = term(rng, var_bias);
    AlgebraExpr::Leaf(TriplePattern::parse_terms(&s, &p, &o))
}

pub fn condition(rng: &mut impl Rng, depth: u32) -> FilterCondition {
    let v = |rng: &mut dyn rand::RngCore| VARS[rng.gen_range(0..VARS.len())];
    if depth == 0 || rng.gen_bool(0.6) {
        return match rng.gen_range(0..3) {
            0 => FilterCondition::bound(v(rng)),
            1 => FilterCondition::eq_const(v(rng), Term::iri(CONSTS[rng.gen_range(0..CONSTS.len())])),
            _ => FilterCondition::eq_var(v(rng), v(rng)),
        };
    }
    match rng.gen_range(0..3) {
        0 => FilterCondition::not(condition(rng, depth - 1)),
        1 => FilterCondition::and(condition(rng, depth - 1), condition(rng, depth - 1)),
        _ => FilterCondition::or(condition(rng, depth - 1), condition(rng, depth - 1)),
    }
}

/// Expression generator that reuses earlier subtrees and conditions, so
/// shapes like `A ∪ A` or `σ_R(A1) ∪ σ_R(A2)` show up often.
pub struct ExprGen {
    pub pool: Vec<AlgebraExpr>,
    pub conds: Vec<FilterCondition>,
    pub minus_only: bool,
    pub var_bias: f64,
}

impl ExprGen {
    pub fn new(minus_only: bool) -> Self {
        ExprGen { pool: Vec::new(), conds: Vec::new(), minus_only, var_bias: 0.6 }
    }

    fn cond(&mut self, rng: &mut impl Rng) -> FilterCondition {
        if !self.conds.is_empty() && rng.gen_bool(0.4) {
            return self.conds[rng.gen_range(0..self.conds.len())].clone();
        }
        let c = condition(rng, 1);
        self.conds.push(c.clone());
        c
    }

    pub fn expr(&mut self, rng: &mut impl Rng, depth: u32) -> AlgebraExpr {
        if !self.pool.is_empty() && rng.gen_bool(0.3) {
            return self.pool[rng.gen_range(0..self.pool.len())].clone();
        }
        let e = if depth == 0 || rng.gen_bool(0.25) { leaf_with(rng, self.var_bias) } else { self.op(rng, depth, None) };
        self.pool.push(e.clone());
        e
    }

    /// `kind`: 0 join, 1 union, 2 minus, 3 left join, 4 select, 5 project.
    pub fn op(&mut self, rng: &mut impl Rng, depth: u32, kind: Option<u32>) -> AlgebraExpr {
        let max = if self.minus_only { 5 } else { 6 };
        let mut k = kind.unwrap_or_else(|| rng.gen_range(0..max));
        if self.minus_only && (k == 1 || k == 5) {
            k = 0;
        }
        let d = depth.saturating_sub(1);
        match k {
            0 => AlgebraExpr::join(self.expr(rng, d), self.expr(rng, d)),
            1 => AlgebraExpr::union(self.expr(rng, d), self.expr(rng, d)),
            2 => AlgebraExpr::minus(self.expr(rng, d), self.expr(rng, d)),
            3 => AlgebraExpr::left_join(self.expr(rng, d), self.expr(rng, d)),
            4 => {
                let c = self.cond(rng);
                AlgebraExpr::select(c, self.expr(rng, d))
            }
            _ => {
                let inner = self.expr(rng, d);
                let vars: Vec<_> = inner.vars().into_iter().filter(|_| rng.gen_bool(0.6)).collect();
                AlgebraExpr::project(vars, inner)
            }
        }
    }
}

pub fn random_expr(rng: &mut impl Rng, depth: u32) -> AlgebraExpr {
    ExprGen::new(false).expr(rng, depth)
}

/// A random expression of the minus fragment (no union, no projection).
pub fn random_minus_expr(rng: &mut impl Rng, depth: u32) -> AlgebraExpr {
    let mut g = ExprGen::new(true);
    g.var_bias = 0.85;
    g.op(rng, depth, None)
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum CondShape {
    Any,
    And,
    Or,
    Bound,
    NotBound,
    Equalities,
}

/// Operator kinds at the root and its children that make a rule's source
/// side likely; `left` is the only child of a selection.
#[derive(Clone, Copy)]
pub struct Shape {
    pub root: Option<u32>,
    pub left: Option<u32>,
    pub right: Option<u32>,
    pub cond: CondShape,
    pub minus_only: bool,
}

pub fn shape(rule: RuleId, dir: Direction, rng: &mut impl Rng) -> Shape {
    use CondShape as C;
    use RuleId::*;
    let fwd = dir == Direction::Forward;
    let s = |root: u32, left: Option<u32>, right: Option<u32>, cond: CondShape| Shape { root: Some(root), left, right, cond, minus_only: false };
    let pushable = [0, 2, 3][rng.gen_range(0..3)];
    let mut out = match rule {
        UIdem if fwd => s(1, None, None, C::Any),
        UIdem => Shape { root: None, left: None, right: None, cond: C::Any, minus_only: false },
        JIdem | LIdem if !fwd => Shape { root: None, left: None, right: None, cond: C::Any, minus_only: true },
        JIdem => s(0, None, None, C::Any),
        LIdem => s(3, None, None, C::Any),
        Inv => s(2, None, None, C::Any),
        UAss if fwd => s(1, Some(1), None, C::Any),
        UAss => s(1, None, Some(1), C::Any),
        JAss if fwd => s(0, Some(0), None, C::Any),
        JAss => s(0, None, Some(0), C::Any),
        UComm => s(1, None, None, C::Any),
        JComm => s(0, None, None, C::Any),
        JUDistR | MUDistR | LUDistR => {
            let k = match rule {
                JUDistR => 0,
                MUDistR => 2,
                _ => 3,
            };
            if fwd { s(k, Some(1), None, C::Any) } else { s(1, Some(k), Some(k), C::Any) }
        }
        JUDistL if fwd => s(0, None, Some(1), C::Any),
        JUDistL => s(1, Some(0), Some(0), C::Any),
        SUPush if fwd => s(4, Some(1), None, C::Any),
        SUPush => s(1, Some(4), Some(4), C::Any),
        SDecompI if fwd => s(4, None, None, C::And),
        SDecompI | SReord => s(4, Some(4), None, C::Any),
        SDecompII if fwd => s(4, None, None, C::Or),
        SDecompII => s(1, Some(4), Some(4), C::Any),
        BndI | BndII => s(4, None, None, C::Bound),
        BndIII | BndIV => s(4, None, None, C::NotBound),
        BndV => s(4, Some(3), None, C::Bound),
        NegBndMinus => Shape { minus_only: true, ..s(4, Some(3), None, C::NotBound) },
        SJPush | SMPush | SLPush => {
            let k = match rule {
                SJPush => 0,
                SMPush => 2,
                _ => 3,
            };
            if fwd { s(4, Some(k), None, C::Any) } else { s(k, Some(4), None, C::Any) }
        }
        WeakFilterPush if fwd => s(4, Some(pushable), None, C::Equalities),
        WeakFilterPush => s(pushable, Some(4), None, C::Equalities),
        MReord => s(2, Some(2), None, C::Any),
        MMUCorr if fwd => s(2, Some(2), None, C::Any),
        MMUCorr => s(2, None, Some(1), C::Any),
        MJ if fwd => s(2, None, None, C::Any),
        MJ => s(2, None, Some(0), C::Any),
        LJ if fwd => Shape { minus_only: true, ..s(3, None, None, C::Any) },
        LJ => Shape { minus_only: true, ..s(3, None, Some(0), C::Any) },
    };
    if rng.gen_bool(0.2) {
        out.cond = C::Any;
    }
    out
}

pub fn shaped_condition(rng: &mut impl Rng, c: CondShape) -> FilterCondition {
    let v = |rng: &mut dyn rand::RngCore| VARS[rng.gen_range(0..VARS.len())];
    match c {
        CondShape::Any => condition(rng, 1),
        CondShape::And => FilterCondition::and(condition(rng, 1), condition(rng, 1)),
        CondShape::Or => FilterCondition::or(condition(rng, 1), condition(rng, 1)),
        CondShape::Bound => FilterCondition::bound(v(rng)),
        CondShape::NotBound => FilterCondition::not(FilterCondition::bound(v(rng))),
        CondShape::Equalities => {
            let atom = |rng: &mut dyn rand::RngCore| {
                if rng.gen_bool(0.5) {
                    FilterCondition::eq_const(v(rng), Term::iri(CONSTS[rng.gen_range(0..CONSTS.len())]))
                } else {
                    FilterCondition::eq_var(v(rng), v(rng))
                }
            };
            let first = atom(rng);
            if rng.gen_bool(0.3) { FilterCondition::and(first, atom(rng)) } else { first }
        }
    }
}

impl ExprGen {
    fn child(&mut self, rng: &mut impl Rng, depth: u32, kind: Option<u32>, cond: CondShape) -> AlgebraExpr {
        match kind {
            Some(4) => {
                let c = self.pick_cond(rng, cond);
                let inner = self.expr(rng, depth.saturating_sub(1));
                let e = AlgebraExpr::select(c, inner);
                self.pool.push(e.clone());
                e
            }
            Some(k) => {
                let e = self.op(rng, depth, Some(k));
                self.pool.push(e.clone());
                e
            }
            None => self.expr(rng, depth),
        }
    }

    fn pick_cond(&mut self, rng: &mut impl Rng, cond: CondShape) -> FilterCondition {
        if cond == CondShape::Any {
            return self.cond(rng);
        }
        if !self.conds.is_empty() && rng.gen_bool(0.4) {
            return self.conds[rng.gen_range(0..self.conds.len())].clone();
        }
        let c = shaped_condition(rng, cond);
        self.conds.push(c.clone());
        c
    }

    /// Builds an expression following `s`.
    pub fn shaped(&mut self, rng: &mut impl Rng, depth: u32, s: Shape) -> AlgebraExpr {
        let Some(root) = s.root else { return self.op(rng, depth, None) };
        let d = depth.saturating_sub(1);
        match root {
            4 => {
                let c = self.pick_cond(rng, s.cond);
                let inner = self.child(rng, d, s.left, s.cond);
                AlgebraExpr::select(c, inner)
            }
            k => {
                let l = self.child(rng, d, s.left, s.cond);
                let r = self.child(rng, d, s.right, s.cond);
                match k {
                    0 => AlgebraExpr::join(l, r),
                    1 => AlgebraExpr::union(l, r),
                    2 => AlgebraExpr::minus(l, r),
                    _ => AlgebraExpr::left_join(l, r),
                }
            }
        }
    }
}

/// A random instance of the rule's source side: shaped generation plus
/// rejection on the rule's side conditions.
pub fn rule_instance(rule: RuleId, dir: Direction, rng: &mut impl Rng, attempts: usize) -> Option<AlgebraExpr> {
    for _ in 0..attempts {
        let s = shape(rule, dir, rng);
        let mut g = ExprGen::new(s.minus_only || rng.gen_bool(0.2));
        let e = g.shaped(rng, 3, s);
        if rewrite_root(rule, dir, &e).is_some() {
            return Some(e);
        }
    }
    None
}

/// Puts `e` inside a random context; returns the whole tree and the site of `e`.
pub fn embed(rng: &mut impl Rng, e: AlgebraExpr) -> (AlgebraExpr, Site) {
    let mut cur = e;
    let mut site: Site = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let other = random_expr(rng, 1);
        let (next, idx) = match rng.gen_range(0..6) {
            0 => (AlgebraExpr::join(other, cur), 1),
            1 => (AlgebraExpr::union(cur, other), 0),
            2 => (AlgebraExpr::minus(other, cur), 1),
            3 => (AlgebraExpr::left_join(cur, other), 0),
            4 => (AlgebraExpr::select(condition(rng, 1), cur), 0),
            _ => {
                let vars: Vec<_> = cur.vars().into_iter().take(2).collect();
                (AlgebraExpr::project(vars, cur), 0)
            }
        };
        site.insert(0, idx);
        cur = next;
    }
    (cur, site)
}

pub struct Counterexample {
    pub name: String,
    pub document: Document,
    pub lhs: AlgebraExpr,
    pub rhs: AlgebraExpr,
}

fn ex(text: &str) -> AlgebraExpr {
    sparqlopt::algebra::translate_expr(&parse_expr(text).expect("expression"))
}

/// Equivalences that fail once the stated syntactic conditions are dropped.
pub fn counterexamples() -> Vec<Counterexample> {
    let mut out = Vec::new();
    let d1 = parse_document("(0, c, 1)").unwrap();
    let a = ex("(?x,c,1) UNION (0,c,?y)");
    out.push(Counterexample { name: "JIdem, union".into(), document: d1.clone(), lhs: AlgebraExpr::join(a.clone(), a.clone()), rhs: a.clone() });
    out.push(Counterexample { name: "LIdem, union".into(), document: d1.clone(), lhs: AlgebraExpr::left_join(a.clone(), a.clone()), rhs: a });

    let d2 = parse_document("(0, f, 0)\n(1, t, 1)\n(a, tv, 0)\n(a, tv, 1)").unwrap();
    let inner = ex("((a,tv,?z) OPT (?z,f,?x)) OPT (?z,t,?y)");
    let b = AlgebraExpr::project(["x", "y"].map(sparqlopt::rdf::Variable::new), inner);
    out.push(Counterexample { name: "JIdem, projection".into(), document: d2.clone(), lhs: AlgebraExpr::join(b.clone(), b.clone()), rhs: b.clone() });
    out.push(Counterexample { name: "LIdem, projection".into(), document: d2, lhs: AlgebraExpr::left_join(b.clone(), b.clone()), rhs: b });

    let a1 = ex("(0,c,?a)");
    let a2 = ex("(?a,c,1)");
    let a3 = ex("(0,c,?b)");
    type Op = fn(AlgebraExpr, AlgebraExpr) -> AlgebraExpr;
    let ops: [(&str, Op); 4] = [
        ("join", AlgebraExpr::join),
        ("union", AlgebraExpr::union),
        ("minus", AlgebraExpr::minus),
        ("left join", AlgebraExpr::left_join),
    ];
    // outer op distributed over inner op, from the left and from the right
    let pairs = [(2usize, 1usize), (3, 1), (0, 2), (0, 3), (1, 0), (1, 2), (1, 3), (2, 0), (2, 3), (3, 0), (3, 2)];
    let triples = [(a1.clone(), a2.clone(), a3.clone()), (a2.clone(), a3.clone(), a1.clone()), (a3.clone(), a1.clone(), a2.clone())];
    for (o, i) in pairs {
        let (on, of) = ops[o];
        let (inn, inf) = ops[i];
        for left in [true, false] {
            let side = if left { "left" } else { "right" };
            let found = triples.iter().find_map(|(x, y, z)| {
                let (l, r) = if left {
                    (of(x.clone(), inf(y.clone(), z.clone())), inf(of(x.clone(), y.clone()), of(x.clone(), z.clone())))
                } else {
                    (of(inf(x.clone(), y.clone()), z.clone()), inf(of(x.clone(), z.clone()), of(y.clone(), z.clone())))
                };
                (l.evaluate(&d1) != r.evaluate(&d1)).then_some((l, r))
            });
            if let Some((lhs, rhs)) = found {
                out.push(Counterexample { name: format!("{on} over {inn}, {side}"), document: d1.clone(), lhs, rhs });
            }
        }
    }
    out
}

/// Named constraint sets with known termination classes.
pub fn golden_sets() -> Vec<(&'static str, Vec<Constraint>)> {
    let p = |s: &str| parse_constraints(s).expect("constraints");
    vec![
        ("rs", p("R(x1,x2,x3), S(x2) -> exists y . R(x2,y,x1)")),
        ("gamma", p("T(x1,x2), T(x2,x1) -> exists y1, y2 . T(x1,y1), T(y1,y2), T(y2,x1)")),
        ("pair", p("S(x2,x3), R(x1,x2,x3) -> exists y . R(x2,y,x1)\nR(x1,x2,x3) -> S(x1,x3)")),
        (
            "four",
            p("R1(x1,x2) -> exists y . S(x1,x2,y)
               R1(x1,x2) -> exists y . T(x1,x2,y)
               S(x1,x2,x3), T(x4,x5,x6) -> T(x5,x1,x4)
               S(x1,x2,x3), T(x4,x5,x3) -> T(x1,x3,x3), R1(x3,x1), R2(x3,x1)"),
        ),
        ("rdf-one", p("const e, d;\nT(e,x1,x2), T(x2,d,d) -> T(x1,x2,x1)")),
        (
            "rdf-two",
            p("const d, e, f, g;
               T(x1,d,x2) -> exists y . T(g,e,y), T(f,d,y)
               T(x1,e,x2) -> exists y . T(g,e,y), T(f,d,y)
               T(x1,d,x2) -> T(x2,e,x1)
               T(x1,e,x2) -> exists y . T(x2,d,y)"),
        ),
    ]
}

/// A random instance over the relations of Σ with at most 8 distinct values,
/// drawn from the constants of Σ and fresh ones.
pub fn random_instance(rng: &mut impl Rng, sigma: &[Constraint], max_facts: usize) -> Instance {
    let mut rels: std::collections::BTreeMap<String, usize> = Default::default();
    for c in sigma {
        for pos in c.all_positions() {
            let e = rels.entry(pos.relation.clone()).or_default();
            *e = (*e).max(pos.index);
        }
    }
    let mut values: Vec<Value> = sigma.iter().flat_map(|c| c.constants()).map(Value::Const).collect();
    values.sort();
    values.dedup();
    values.truncate(4);
    let mut k = 0;
    while values.len() < 8 {
        values.push(Value::Const(Term::iri(format!("v{k}"))));
        k += 1;
    }
    let rels: Vec<(String, usize)> = rels.into_iter().collect();
    let mut inst = Instance::new();
    if rels.is_empty() {
        return inst;
    }
    for _ in 0..rng.gen_range(1..=max_facts) {
        let (r, arity) = &rels[rng.gen_range(0..rels.len())];
        let args = (0..*arity).map(|_| values[rng.gen_range(0..values.len())].clone()).collect();
        inst.insert(r, args);
    }
    inst
}

/// Random weakly acyclic constraint sets over R/2, S/2, T/3.
pub fn random_weakly_acyclic(rng: &mut impl Rng) -> Vec<Constraint> {
    loop {
        let mut text = String::new();
        for _ in 0..rng.gen_range(1..=3) {
            text.push_str(&random_constraint_text(rng));
            text.push('\n');
        }
        if let Ok(s) = parse_constraints(&text) {
            if is_weakly_acyclic(&s) {
                return s;
            }
        }
    }
}

fn random_atom(rng: &mut impl Rng, vars: &[&str]) -> String {
    let (r, n) = [("R", 2), ("S", 2), ("T", 3)][rng.gen_range(0..3)];
    let args: Vec<&str> = (0..n).map(|_| vars[rng.gen_range(0..vars.len())]).collect();
    format!("{r}({})", args.join(", "))
}

fn random_constraint_text(rng: &mut impl Rng) -> String {
    let body_vars = ["x1", "x2", "x3"];
    let body: Vec<String> = (0..rng.gen_range(1..=2)).map(|_| random_atom(rng, &body_vars)).collect();
    if rng.gen_bool(0.2) {
        return format!("{} -> x1 = x2", body.join(", "));
    }
    let with_y = rng.gen_bool(0.5);
    let head_vars: &[&str] = if with_y { &["x1", "x2", "x3", "y"] } else { &body_vars };
    let head: Vec<String> = (0..rng.gen_range(1..=2)).map(|_| random_atom(rng, head_vars)).collect();
    let head_text = head.join(", ");
    if with_y && head_text.contains('y') {
        format!("{} -> exists y . {head_text}", body.join(", "))
    } else {
        format!("{} -> {head_text}", body.join(", "))
    }
}

/// Small Opt/And expressions over the QBF base document's vocabulary.
pub fn small_opt_expr(rng: &mut impl Rng) -> SparqlExpr {
    const PREDS: [&str; 3] = ["tv", "true", "false"];
    const NAMES: [&str; 3] = ["?a", "?b", "?c"];
    let leaf = |rng: &mut dyn rand::RngCore| SparqlExpr::pat("a", PREDS[rng.gen_range(0..3)], NAMES[rng.gen_range(0..3)]);
    let mut e = leaf(rng);
    for _ in 0..rng.gen_range(0..2) {
        e = if rng.gen_bool(0.5) { SparqlExpr::and(e, leaf(rng)) } else { SparqlExpr::opt(e, leaf(rng)) };
    }
    e
}

/// Checks And elimination on one random instance.
pub fn and_elimination_holds(rng: &mut impl Rng) -> Result<(), String> {
    use sparqlopt::algebra::{evaluate, translate_expr};
    use sparqlopt::reductions::{and_elimination, fresh_v_names, qbf_base_document};
    let d = qbf_base_document();
    let q = small_opt_expr(rng);
    let n = rng.gen_range(2..=3);
    let qs: Vec<SparqlExpr> = (0..n).map(|_| small_opt_expr(rng)).collect();
    let mut avoid: Vec<&SparqlExpr> = qs.iter().collect();
    avoid.push(&q);
    let fresh = fresh_v_names(n - 1, &avoid);
    let ae = and_elimination(q.clone(), &qs, &fresh).map_err(|e| e.to_string())?;
    let ev = |e: &SparqlExpr| evaluate(&translate_expr(e), &d);
    if ev(&ae.lhs) != ev(&ae.rhs) {
        return Err(format!("equation fails for {q} with {} conjuncts", qs.len()));
    }
    let extended: std::collections::BTreeSet<_> = ev(&q)
        .into_iter()
        .map(|mut m| {
            for v in &ae.fresh {
                m.insert(v.clone(), Term::iri("1"));
            }
            m
        })
        .collect();
    if ev(&ae.q_prime) != extended {
        return Err(format!("extension fails for {q}"));
    }
    Ok(())
}

/// Random 3-CNF over 1–4 variables where literals inside a clause often
/// repeat, so short unsatisfiable formulas like (x|x|x) & (!x|!x|!x) occur.
pub fn skewed_cnf3(rng: &mut impl Rng) -> sparqlopt::reductions::Cnf3 {
    use sparqlopt::reductions::{Cnf3, Literal};
    let n = rng.gen_range(1..=4);
    let vars: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    let clauses = (0..rng.gen_range(1..=4))
        .map(|_| {
            let mut lits: Vec<Literal> = Vec::new();
            for _ in 0..3 {
                let lit = match lits.last() {
                    Some(l) if rng.gen_bool(0.7) => l.clone(),
                    _ => Literal { var: vars[rng.gen_range(0..n)].clone(), positive: rng.gen_bool(0.5) },
                };
                lits.push(lit);
            }
            lits
        })
        .collect();
    Cnf3::new(vars, clauses).expect("three literals per clause")
}
