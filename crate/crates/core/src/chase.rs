//! Instances with labeled nulls and the standard chase.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::cq::{self, Atom, Constraint, Containment, Cq, CqTerm, Egd, Tgd};
use crate::error::{Error, Result};
use crate::rdf::Term;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Const(Term),
    Null(u32),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null(_))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Const(t) => write!(f, "{t}"),
            Value::Null(i) => write!(f, "_n{i}"),
        }
    }
}

/// Variable assignment produced by homomorphism search.
pub type Assignment = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub relation: String,
    pub args: Vec<Value>,
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}({})", self.relation, args.join(", "))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Instance {
    facts: BTreeMap<String, BTreeSet<Vec<Value>>>,
    next_null: u32,
    /// Nulls with a smaller id belong to the instance the chase started from.
    origin_bound: u32,
    merged: BTreeMap<u32, Value>,
}

impl Instance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh_null(&mut self) -> Value {
        let v = Value::Null(self.next_null);
        self.next_null += 1;
        v
    }

    pub fn next_null_id(&self) -> u32 {
        self.next_null
    }

    pub fn insert(&mut self, relation: &str, args: Vec<Value>) -> bool {
        for a in &args {
            if let Value::Null(i) = a {
                self.next_null = self.next_null.max(i + 1);
            }
        }
        self.facts.entry(relation.to_string()).or_default().insert(args)
    }

    pub fn insert_fact(&mut self, f: Fact) -> bool {
        self.insert(&f.relation.clone(), f.args)
    }

    pub fn contains(&self, relation: &str, args: &[Value]) -> bool {
        self.facts.get(relation).is_some_and(|s| s.contains(args))
    }

    pub fn tuples(&self, relation: &str) -> impl Iterator<Item = &Vec<Value>> {
        self.facts.get(relation).into_iter().flat_map(|s| s.iter())
    }

    pub fn facts(&self) -> impl Iterator<Item = Fact> + '_ {
        self.facts
            .iter()
            .flat_map(|(r, s)| s.iter().map(move |a| Fact { relation: r.clone(), args: a.clone() }))
    }

    pub fn len(&self) -> usize {
        self.facts.values().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn domain(&self) -> BTreeSet<Value> {
        self.facts.values().flat_map(|s| s.iter().flatten().cloned()).collect()
    }

    pub fn nulls(&self) -> BTreeSet<u32> {
        self.domain()
            .into_iter()
            .filter_map(|v| match v {
                Value::Null(i) => Some(i),
                Value::Const(_) => None,
            })
            .collect()
    }

    /// Follows EGD substitutions applied to `v` so far.
    pub fn resolve(&self, v: &Value) -> Value {
        let mut cur = v.clone();
        while let Value::Null(i) = cur {
            match self.merged.get(&i) {
                Some(n) => cur = n.clone(),
                None => break,
            }
        }
        cur
    }

    fn is_original(&self, v: &Value) -> bool {
        matches!(v, Value::Null(i) if *i < self.origin_bound)
    }

    /// Replaces every occurrence of null `from` by `to`.
    fn substitute(&mut self, from: u32, to: &Value) {
        let old = Value::Null(from);
        for set in self.facts.values_mut() {
            let hit: Vec<Vec<Value>> = set.iter().filter(|t| t.contains(&old)).cloned().collect();
            for t in hit {
                set.remove(&t);
                set.insert(t.into_iter().map(|x| if x == old { to.clone() } else { x }).collect());
            }
        }
        self.merged.insert(from, to.clone());
    }

    /// Whether the instance satisfies every constraint.
    pub fn satisfies(&self, sigma: &[Constraint]) -> bool {
        sigma.iter().all(|c| first_trigger(self, c, false).is_none())
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in self.facts() {
            writeln!(f, "{fact}")?;
        }
        Ok(())
    }
}

fn unify_args(atom: &Atom, tuple: &[Value], asg: &mut Assignment, added: &mut Vec<String>) -> bool {
    if atom.args.len() != tuple.len() {
        return false;
    }
    for (t, v) in atom.args.iter().zip(tuple) {
        match t {
            CqTerm::Const(c) => {
                if !matches!(v, Value::Const(d) if d == c) {
                    return false;
                }
            }
            CqTerm::Var(x) => match asg.get(x) {
                Some(w) if w != v => return false,
                Some(_) => {}
                None => {
                    asg.insert(x.clone(), v.clone());
                    added.push(x.clone());
                }
            },
        }
    }
    true
}

fn search(atoms: &[Atom], inst: &Instance, asg: &mut Assignment, f: &mut dyn FnMut(&Assignment) -> bool) -> bool {
    let Some((first, rest)) = atoms.split_first() else { return f(asg) };
    for tuple in inst.tuples(&first.relation) {
        let mut added = Vec::new();
        let ok = unify_args(first, tuple, asg, &mut added);
        let cont = !ok || search(rest, inst, asg, f);
        for x in added {
            asg.remove(&x);
        }
        if !cont {
            return false;
        }
    }
    true
}

/// Enumerates homomorphisms extending `init`, in lexicographic order over
/// body atoms; stops when `f` returns false.
pub fn for_each_homomorphism(atoms: &[Atom], inst: &Instance, init: &Assignment, f: &mut dyn FnMut(&Assignment) -> bool) {
    let mut asg = init.clone();
    search(atoms, inst, &mut asg, f);
}

pub fn find_homomorphism(atoms: &[Atom], inst: &Instance, init: &Assignment) -> Option<Assignment> {
    let mut out = None;
    for_each_homomorphism(atoms, inst, init, &mut |a| {
        out = Some(a.clone());
        false
    });
    out
}

/// Whether constraint `c` is applicable at body assignment `h`.
pub fn is_active(inst: &Instance, c: &Constraint, h: &Assignment) -> bool {
    match c {
        Constraint::Tgd(t) => find_homomorphism(&t.head, inst, h).is_none(),
        Constraint::Egd(e) => h[&e.left] != h[&e.right],
    }
}

fn first_trigger(inst: &Instance, c: &Constraint, last: bool) -> Option<Assignment> {
    let mut found = None;
    for_each_homomorphism(c.body(), inst, &Assignment::new(), &mut |h| {
        if is_active(inst, c, h) {
            found = Some(h.clone());
            return last;
        }
        true
    });
    found
}

/// Applies a TGD at `h`, inventing fresh nulls for existential variables.
pub fn tgd_step(inst: &Instance, t: &Tgd, h: &Assignment) -> Result<Instance> {
    let c = Constraint::Tgd(t.clone());
    check_trigger(inst, &c, h)?;
    let mut out = inst.clone();
    let mut asg = h.clone();
    for y in &t.existentials {
        let n = out.fresh_null();
        asg.insert(y.clone(), n);
    }
    for a in &t.head {
        out.insert(&a.relation, ground(a, &asg));
    }
    Ok(out)
}

fn ground(a: &Atom, asg: &Assignment) -> Vec<Value> {
    a.args
        .iter()
        .map(|t| match t {
            CqTerm::Const(c) => Value::Const(c.clone()),
            CqTerm::Var(x) => asg[x].clone(),
        })
        .collect()
}

fn check_trigger(inst: &Instance, c: &Constraint, h: &Assignment) -> Result<()> {
    let maps = c.body().iter().all(|a| {
        a.vars().all(|v| h.contains_key(v)) && inst.contains(&a.relation, &ground(a, h))
    });
    if !maps || !is_active(inst, c, h) {
        return Err(Error::Constraint(format!("constraint {c} is not applicable at the given assignment")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EgdResult {
    Step(Instance),
    /// Two distinct constants were equated.
    Failure(Term, Term),
}

/// Applies an EGD at `h`. The null replaced is the right-hand value unless
/// that would remove a null of the starting instance in favour of a new one.
pub fn egd_step(inst: &Instance, e: &Egd, h: &Assignment) -> Result<EgdResult> {
    let c = Constraint::Egd(e.clone());
    check_trigger(inst, &c, h)?;
    let (a, b) = (h[&e.left].clone(), h[&e.right].clone());
    let (from, to) = match (&a, &b) {
        (Value::Const(x), Value::Const(y)) => return Ok(EgdResult::Failure(x.clone(), y.clone())),
        (_, Value::Null(j)) => {
            if let Value::Null(i) = a {
                if inst.is_original(&b) && !inst.is_original(&a) {
                    (i, b.clone())
                } else {
                    (*j, a.clone())
                }
            } else {
                (*j, a.clone())
            }
        }
        (Value::Null(i), Value::Const(_)) => (*i, b.clone()),
    };
    let mut out = inst.clone();
    out.substitute(from, &to);
    Ok(EgdResult::Step(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FiringOrder {
    /// Constraints round-robin in list order, first active homomorphism.
    #[default]
    RoundRobin,
    /// Constraints round-robin in reverse order, last active homomorphism.
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepEffect {
    Added(Vec<Fact>),
    /// The first value was replaced by the second.
    Merged(Value, Value),
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChaseStep {
    pub constraint: usize,
    pub assignment: Assignment,
    pub effect: StepEffect,
}

impl fmt::Display for ChaseStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.assignment.iter().map(|(k, v)| format!("?{k} -> {v}")).collect();
        write!(f, "constraint {} at {{{}}}: ", self.constraint + 1, parts.join(", "))?;
        match &self.effect {
            StepEffect::Added(fs) => {
                let fs: Vec<String> = fs.iter().map(|x| x.to_string()).collect();
                write!(f, "added {}", fs.join(", "))
            }
            StepEffect::Merged(a, b) => write!(f, "merged {a} into {b}"),
            StepEffect::Fail => write!(f, "FAIL"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChaseOutcome {
    Terminated { instance: Instance, steps: Vec<ChaseStep> },
    Failed { steps: Vec<ChaseStep>, clash: (Term, Term) },
    BudgetExceeded { instance: Instance, steps: Vec<ChaseStep> },
}

impl ChaseOutcome {
    pub fn instance(&self) -> Option<&Instance> {
        match self {
            ChaseOutcome::Terminated { instance, .. } => Some(instance),
            _ => None,
        }
    }

    pub fn steps(&self) -> &[ChaseStep] {
        match self {
            ChaseOutcome::Terminated { steps, .. }
            | ChaseOutcome::Failed { steps, .. }
            | ChaseOutcome::BudgetExceeded { steps, .. } => steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChaseConfig {
    pub budget: u64,
    pub order: FiringOrder,
}

pub const MIN_BUDGET: u64 = 10_000;

/// max(10^4, 4 * n^(p+1)) where n = |dom(I)| and p counts the positions of Σ.
pub fn default_budget(inst: &Instance, sigma: &[Constraint]) -> u64 {
    let n = inst.domain().len() as u64;
    let p: BTreeSet<_> = sigma.iter().flat_map(|c| c.all_positions()).collect();
    let pow = u32::try_from(p.len() + 1).unwrap_or(u32::MAX);
    MIN_BUDGET.max(n.max(1).saturating_pow(pow).saturating_mul(4))
}

pub fn chase(inst: &Instance, sigma: &[Constraint], budget: u64) -> ChaseOutcome {
    chase_with(inst, sigma, ChaseConfig { budget, order: FiringOrder::RoundRobin })
}

pub fn chase_with(inst: &Instance, sigma: &[Constraint], cfg: ChaseConfig) -> ChaseOutcome {
    let mut cur = inst.clone();
    cur.origin_bound = cur.next_null;
    let mut steps = Vec::new();
    let n = sigma.len();
    let mut next = 0usize;
    loop {
        let mut trigger = None;
        for k in 0..n {
            let idx = match cfg.order {
                FiringOrder::RoundRobin => (next + k) % n,
                FiringOrder::Reverse => (n - 1) - (next + k) % n,
            };
            if let Some(h) = first_trigger(&cur, &sigma[idx], cfg.order == FiringOrder::Reverse) {
                trigger = Some((idx, h, k));
                break;
            }
        }
        let Some((idx, h, k)) = trigger else {
            return ChaseOutcome::Terminated { instance: cur, steps };
        };
        if steps.len() as u64 >= cfg.budget {
            return ChaseOutcome::BudgetExceeded { instance: cur, steps };
        }
        next = (next + k + 1) % n;
        let (new, effect) = match &sigma[idx] {
            Constraint::Tgd(t) => {
                let new = tgd_step(&cur, t, &h).expect("active trigger");
                let added = new.facts().filter(|x| !cur.contains(&x.relation, &x.args)).collect();
                (new, StepEffect::Added(added))
            }
            Constraint::Egd(e) => match egd_step(&cur, e, &h).expect("active trigger") {
                EgdResult::Step(new) => {
                    let (a, b) = (h[&e.left].clone(), h[&e.right].clone());
                    let remaining = new.domain();
                    let effect = if remaining.contains(&b) { StepEffect::Merged(a, b) } else { StepEffect::Merged(b, a) };
                    (new, effect)
                }
                EgdResult::Failure(a, b) => {
                    steps.push(ChaseStep { constraint: idx, assignment: h, effect: StepEffect::Fail });
                    return ChaseOutcome::Failed { steps, clash: (a, b) };
                }
            },
        };
        steps.push(ChaseStep { constraint: idx, assignment: h, effect });
        cur = new;
    }
}

/// A homomorphism from `a` to `b`: nulls of `a` map to values of `b`,
/// constants to themselves. Keys are null ids of `a`.
pub fn instance_homomorphism(a: &Instance, b: &Instance) -> Option<BTreeMap<u32, Value>> {
    let atoms: Vec<Atom> = a
        .facts()
        .map(|f| {
            let args = f
                .args
                .iter()
                .map(|v| match v {
                    Value::Const(c) => CqTerm::Const(c.clone()),
                    Value::Null(i) => CqTerm::Var(format!("n{i}")),
                })
                .collect();
            Atom::new(f.relation, args)
        })
        .collect();
    let h = find_homomorphism(&atoms, b, &Assignment::new())?;
    Some(h.into_iter().map(|(k, v)| (k[1..].parse().expect("null variable"), v)).collect())
}

/// Homomorphisms exist in both directions.
pub fn homomorphically_equivalent(a: &Instance, b: &Instance) -> bool {
    instance_homomorphism(a, b).is_some() && instance_homomorphism(b, a).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanOutcome {
    Plan(Cq),
    /// The chase failed: the query is empty on every model of Σ.
    Unsatisfiable,
    Unknown(String),
}

fn unfreeze(inst: &Instance, head: &[String], frozen: &BTreeMap<String, Value>) -> std::result::Result<Cq, String> {
    let mut names: BTreeMap<Value, String> = BTreeMap::new();
    for (v, n) in frozen {
        let r = inst.resolve(n);
        if r.is_null() {
            names.entry(r).or_insert_with(|| v.clone());
        }
    }
    let used: BTreeSet<String> = frozen.keys().cloned().collect();
    let name_of = |val: &Value, names: &mut BTreeMap<Value, String>| -> CqTerm {
        match val {
            Value::Const(c) => CqTerm::Const(c.clone()),
            Value::Null(i) => {
                let n = names.entry(val.clone()).or_insert_with(|| {
                    let mut s = format!("y{i}");
                    while used.contains(&s) {
                        s.push('_');
                    }
                    s
                });
                CqTerm::Var(n.clone())
            }
        }
    };
    let mut body = Vec::new();
    for f in inst.facts() {
        let args = f.args.iter().map(|a| name_of(a, &mut names)).collect();
        body.push(Atom::new(f.relation, args));
    }
    let mut h = Vec::new();
    for v in head {
        match inst.resolve(&frozen[v]) {
            Value::Const(c) => return Err(format!("head variable ?{v} is forced equal to constant {c}")),
            n => h.push(names[&n].clone()),
        }
    }
    Cq::new(h, body).map_err(|e| e.to_string())
}

/// The universal plan: the chase of q's canonical instance read back as a CQ.
pub fn universal_plan(q: &Cq, sigma: &[Constraint], budget: u64) -> PlanOutcome {
    let (inst, frozen) = cq::freeze(&q.body);
    match chase(&inst, sigma, budget) {
        ChaseOutcome::Terminated { instance, .. } => match unfreeze(&instance, &q.head, &frozen) {
            Ok(p) => PlanOutcome::Plan(p),
            Err(m) => PlanOutcome::Unknown(m),
        },
        ChaseOutcome::Failed { .. } => PlanOutcome::Unsatisfiable,
        ChaseOutcome::BudgetExceeded { steps, .. } => {
            PlanOutcome::Unknown(format!("chase exceeded the budget of {} steps", steps.len()))
        }
    }
}

pub const CB_ATOM_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CbOutcome {
    /// Minimal Σ-equivalent sub-queries of the universal plan, up to isomorphism.
    Rewrites(Vec<Cq>),
    Unsatisfiable,
    Unknown(String),
}

fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if cur.len() == k {
        return f(cur);
    }
    for i in start..n {
        if n - i < k - cur.len() {
            break;
        }
        cur.push(i);
        let go = subsets(n, k, i + 1, cur, f);
        cur.pop();
        if !go {
            return false;
        }
    }
    true
}

/// Chase and backchase: searches sub-queries of the universal plan by
/// increasing size and returns those of minimum size equivalent to `q` under Σ.
pub fn cb(q: &Cq, sigma: &[Constraint], budget: u64, atom_cap: usize) -> CbOutcome {
    let plan = match universal_plan(q, sigma, budget) {
        PlanOutcome::Plan(p) => p,
        PlanOutcome::Unsatisfiable => return CbOutcome::Unsatisfiable,
        PlanOutcome::Unknown(m) => return CbOutcome::Unknown(m),
    };
    let n = plan.body.len();
    if n > atom_cap {
        return CbOutcome::Unknown(format!("universal plan has {n} atoms, above the cap of {atom_cap}"));
    }
    let chased_q = cq::chase_cq(q, sigma, budget);
    let head: BTreeSet<&String> = plan.head.iter().collect();
    let mut unknown = false;
    for k in 1..=n {
        let mut found: Vec<Cq> = Vec::new();
        subsets(n, k, 0, &mut Vec::new(), &mut |idx| {
            let body: Vec<Atom> = idx.iter().map(|&i| plan.body[i].clone()).collect();
            let vars = cq::atoms_vars(&body);
            if !head.iter().all(|v| vars.contains(*v)) {
                return true;
            }
            let cand = Cq { head: plan.head.clone(), body };
            let fwd = cq::contained_in_chased(&chased_q, &cand);
            if fwd == Containment::Fails {
                return true;
            }
            let back = cq::contained_in(&cand, q, sigma, budget);
            if back == Containment::Fails {
                return true;
            }
            if fwd == Containment::Unknown || back == Containment::Unknown {
                unknown = true;
                return true;
            }
            if !found.iter().any(|f| cq::isomorphic(f, &cand)) {
                found.push(cand);
            }
            true
        });
        if unknown {
            return CbOutcome::Unknown("a containment check exceeded the chase budget".into());
        }
        if !found.is_empty() {
            return CbOutcome::Rewrites(found);
        }
    }
    // The full plan is always equivalent; reaching here means it is not.
    CbOutcome::Unknown("no equivalent sub-query found".into())
}

/// Builds an instance from ground atoms; variables are rejected.
pub fn instance_from_atoms(atoms: &[Atom]) -> Result<Instance> {
    let mut inst = Instance::new();
    for a in atoms {
        let mut args = Vec::new();
        for t in &a.args {
            match t {
                CqTerm::Const(c) => args.push(Value::Const(c.clone())),
                CqTerm::Var(v) => return Err(Error::Constraint(format!("fact {a} contains variable ?{v}"))),
            }
        }
        inst.insert(&a.relation, args);
    }
    Ok(inst)
}

/// The triple instance T(s,p,o) of an RDF document.
pub fn instance_from_document(d: &crate::rdf::Document) -> Instance {
    let mut inst = Instance::new();
    for t in d.iter() {
        let args = t.terms().iter().map(|x| Value::Const((*x).clone())).collect();
        inst.insert(cq::TRIPLE_RELATION, args);
    }
    inst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cq::{parse_constraints, parse_cq};

    fn fact(r: &str, args: &[&str]) -> Atom {
        Atom::parse_args(r, args)
    }

    #[test]
    fn tgd_chase_terminates() {
        let sigma = parse_constraints("const p1, p2;\nT(x1,p1,x2) -> exists y . T(x1,p2,y)").unwrap();
        let inst = instance_from_atoms(&[fact("T", &["a", "p1", "b"])]).unwrap();
        let out = chase(&inst, &sigma, 100);
        let i = out.instance().unwrap();
        assert_eq!(i.len(), 2);
        assert!(i.satisfies(&sigma));
        assert_eq!(out.steps().len(), 1);
    }

    #[test]
    fn budget_exceeded() {
        let sigma = parse_constraints("R(x,y) -> exists z . R(y,z)").unwrap();
        let inst = instance_from_atoms(&[fact("R", &["a", "b"])]).unwrap();
        assert!(matches!(chase(&inst, &sigma, 50), ChaseOutcome::BudgetExceeded { steps, .. } if steps.len() == 50));
    }

    #[test]
    fn egd_failure_and_merge() {
        let sigma = parse_constraints("R(x,y), R(x,z) -> y = z").unwrap();
        let inst = instance_from_atoms(&[fact("R", &["a", "b"]), fact("R", &["a", "c"])]).unwrap();
        assert!(matches!(chase(&inst, &sigma, 10), ChaseOutcome::Failed { .. }));
        let mut inst = Instance::new();
        let n = inst.fresh_null();
        inst.insert("R", vec![Value::Const(Term::iri("a")), n.clone()]);
        inst.insert("R", vec![Value::Const(Term::iri("a")), Value::Const(Term::iri("b"))]);
        let out = chase(&inst, &sigma, 10);
        let i = out.instance().unwrap();
        assert_eq!(i.len(), 1);
        assert_eq!(i.resolve(&n), Value::Const(Term::iri("b")));
    }

    #[test]
    fn egd_keeps_original_null() {
        let sigma = parse_constraints("A(x) -> exists y . S(x,y)\nS(x,y) -> R(x,y)\nR(x,y), R(x,z) -> y = z").unwrap();
        let mut inst = Instance::new();
        let n0 = inst.fresh_null();
        let a = Value::Const(Term::iri("a"));
        inst.insert("A", vec![a.clone()]);
        inst.insert("R", vec![a.clone(), n0.clone()]);
        for order in [FiringOrder::RoundRobin, FiringOrder::Reverse] {
            let out = chase_with(&inst, &sigma, ChaseConfig { budget: 100, order });
            let i = out.instance().unwrap();
            assert_eq!(i.resolve(&n0), n0);
            assert!(i.tuples("R").all(|t| t[1] == n0));
        }
    }

    #[test]
    fn order_independence_simple() {
        let sigma = parse_constraints("const p;\nT(x,p,y) -> T(y,p,x)\nT(x,p,y), T(y,p,z) -> T(x,p,z)").unwrap();
        let inst = instance_from_atoms(&[fact("T", &["a", "p", "b"]), fact("T", &["b", "p", "c"])]).unwrap();
        let a = chase(&inst, &sigma, 1000);
        let b = chase_with(&inst, &sigma, ChaseConfig { budget: 1000, order: FiringOrder::Reverse });
        assert_eq!(a.instance().unwrap(), b.instance().unwrap());
    }

    #[test]
    fn universal_plan_and_cb() {
        let sigma = parse_constraints("const a, b;\nT(x,a,y) -> T(x,b,y)").unwrap();
        let q = parse_cq("const a, b;\nans(x) <- T(x,a,y), T(x,b,y)").unwrap();
        let PlanOutcome::Plan(u) = universal_plan(&q, &sigma, 100) else { panic!() };
        assert_eq!(u.body.len(), 2);
        let CbOutcome::Rewrites(rs) = cb(&q, &sigma, 100, CB_ATOM_CAP) else { panic!() };
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].to_string(), "ans(?x) <- T(?x, a, ?y)");
    }

    #[test]
    fn default_budget_floor() {
        assert_eq!(default_budget(&Instance::new(), &[]), MIN_BUDGET);
    }
}
