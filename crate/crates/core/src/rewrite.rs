//! Algebraic equivalence rules over [`AlgebraExpr`] trees, single-site
//! application, and two rewriting strategies.

use std::collections::BTreeSet;
use std::fmt;

use crate::algebra::AlgebraExpr;
use crate::error::{Error, Result};
use crate::rdf::Variable;
use crate::syntax::FilterCondition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    UIdem,
    JIdem,
    LIdem,
    Inv,
    UAss,
    JAss,
    UComm,
    JComm,
    JUDistR,
    JUDistL,
    MUDistR,
    LUDistR,
    SUPush,
    SDecompI,
    SDecompII,
    SReord,
    BndI,
    BndII,
    BndIII,
    BndIV,
    BndV,
    SJPush,
    SMPush,
    SLPush,
    MReord,
    MMUCorr,
    MJ,
    LJ,
    NegBndMinus,
    WeakFilterPush,
}

impl RuleId {
    pub const ALL: [RuleId; 30] = [
        RuleId::UIdem,
        RuleId::JIdem,
        RuleId::LIdem,
        RuleId::Inv,
        RuleId::UAss,
        RuleId::JAss,
        RuleId::UComm,
        RuleId::JComm,
        RuleId::JUDistR,
        RuleId::JUDistL,
        RuleId::MUDistR,
        RuleId::LUDistR,
        RuleId::SUPush,
        RuleId::SDecompI,
        RuleId::SDecompII,
        RuleId::SReord,
        RuleId::BndI,
        RuleId::BndII,
        RuleId::BndIII,
        RuleId::BndIV,
        RuleId::BndV,
        RuleId::SJPush,
        RuleId::SMPush,
        RuleId::SLPush,
        RuleId::MReord,
        RuleId::MMUCorr,
        RuleId::MJ,
        RuleId::LJ,
        RuleId::NegBndMinus,
        RuleId::WeakFilterPush,
    ];

    /// Directions in which the rule can be applied as a rewrite. Rules whose
    /// right-hand side loses information (e.g. `A \ A` to EMPTY) only run forward.
    pub fn directions(self) -> &'static [Direction] {
        use RuleId::*;
        match self {
            Inv | BndI | BndII | BndIII | BndIV | BndV | NegBndMinus => &[Direction::Forward],
            _ => &[Direction::Forward, Direction::Backward],
        }
    }

    pub fn name(self) -> &'static str {
        use RuleId::*;
        match self {
            UIdem => "UIdem",
            JIdem => "JIdem",
            LIdem => "LIdem",
            Inv => "Inv",
            UAss => "UAss",
            JAss => "JAss",
            UComm => "UComm",
            JComm => "JComm",
            JUDistR => "JUDistR",
            JUDistL => "JUDistL",
            MUDistR => "MUDistR",
            LUDistR => "LUDistR",
            SUPush => "SUPush",
            SDecompI => "SDecompI",
            SDecompII => "SDecompII",
            SReord => "SReord",
            BndI => "BndI",
            BndII => "BndII",
            BndIII => "BndIII",
            BndIV => "BndIV",
            BndV => "BndV",
            SJPush => "SJPush",
            SMPush => "SMPush",
            SLPush => "SLPush",
            MReord => "MReord",
            MMUCorr => "MMUCorr",
            MJ => "MJ",
            LJ => "LJ",
            NegBndMinus => "NegBndMinus",
            WeakFilterPush => "WeakFilterPush",
        }
    }

    pub fn from_name(s: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// Left-hand side to right-hand side.
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "->",
            Direction::Backward => "<-",
        })
    }
}

/// Path of child indices from the root.
pub type Site = Vec<usize>;

pub fn format_site(s: &[usize]) -> String {
    if s.is_empty() {
        "root".into()
    } else {
        s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteStep {
    pub rule: RuleId,
    pub direction: Direction,
    pub site: Site,
    pub before: AlgebraExpr,
    pub after: AlgebraExpr,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RewriteTrace {
    pub steps: Vec<RewriteStep>,
}

impl RewriteTrace {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// Re-applies every step to `source`.
    pub fn replay(&self, source: &AlgebraExpr) -> Result<AlgebraExpr> {
        let mut cur = source.clone();
        for s in &self.steps {
            cur = apply(s.rule, s.direction, &cur, &s.site)?;
        }
        Ok(cur)
    }
}

impl fmt::Display for RewriteTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(f, "{}. {} {} at {}", i + 1, s.rule, s.direction, format_site(&s.site))?;
            writeln!(f, "   before: {}", s.before)?;
            writeln!(f, "   after:  {}", s.after)?;
        }
        Ok(())
    }
}

fn b(e: &AlgebraExpr) -> Box<AlgebraExpr> {
    Box::new(e.clone())
}

fn subset(a: &BTreeSet<Variable>, b: &BTreeSet<Variable>) -> bool {
    a.is_subset(b)
}

fn push_ok(r: &FilterCondition, a1: &AlgebraExpr) -> bool {
    subset(&r.vars(), &a1.safe_vars())
}

fn weak_push_ok(r: &FilterCondition, a1: &AlgebraExpr, a2: &AlgebraExpr) -> bool {
    if !r.is_equality_conjunction() {
        return false;
    }
    let rv = r.vars();
    let safe = a1.safe_vars();
    subset(&rv, &a1.vars()) && a2.vars().intersection(&rv).all(|v| safe.contains(v))
}

fn bound_var(r: &FilterCondition) -> Option<&Variable> {
    match r {
        FilterCondition::Bound(x) => Some(x),
        _ => None,
    }
}

fn neg_bound_var(r: &FilterCondition) -> Option<&Variable> {
    match r {
        FilterCondition::Not(inner) => bound_var(inner),
        _ => None,
    }
}

/// Rewrites `e` at its root, or `None` if the rule does not match there.
pub fn rewrite_root(rule: RuleId, dir: Direction, e: &AlgebraExpr) -> Option<AlgebraExpr> {
    use AlgebraExpr as A;
    use Direction::*;
    use RuleId::*;
    match (rule, dir) {
        (UIdem, Forward) => match e {
            A::Union(x, y) if x == y => Some((**x).clone()),
            _ => None,
        },
        (UIdem, Backward) => Some(A::Union(b(e), b(e))),
        (JIdem, Forward) => match e {
            A::Join(x, y) if x == y && x.is_minus_fragment() => Some((**x).clone()),
            _ => None,
        },
        (JIdem, Backward) => e.is_minus_fragment().then(|| A::Join(b(e), b(e))),
        (LIdem, Forward) => match e {
            A::LeftJoin(x, y) if x == y && x.is_minus_fragment() => Some((**x).clone()),
            _ => None,
        },
        (LIdem, Backward) => e.is_minus_fragment().then(|| A::LeftJoin(b(e), b(e))),
        (Inv, Forward) => match e {
            A::Minus(x, y) if x == y => Some(A::Empty),
            _ => None,
        },
        (UAss, Forward) => match e {
            A::Union(l, c) => match &**l {
                A::Union(a, bb) => Some(A::Union(a.clone(), Box::new(A::Union(bb.clone(), c.clone())))),
                _ => None,
            },
            _ => None,
        },
        (UAss, Backward) => match e {
            A::Union(a, r) => match &**r {
                A::Union(bb, c) => Some(A::Union(Box::new(A::Union(a.clone(), bb.clone())), c.clone())),
                _ => None,
            },
            _ => None,
        },
        (JAss, Forward) => match e {
            A::Join(l, c) => match &**l {
                A::Join(a, bb) => Some(A::Join(a.clone(), Box::new(A::Join(bb.clone(), c.clone())))),
                _ => None,
            },
            _ => None,
        },
        (JAss, Backward) => match e {
            A::Join(a, r) => match &**r {
                A::Join(bb, c) => Some(A::Join(Box::new(A::Join(a.clone(), bb.clone())), c.clone())),
                _ => None,
            },
            _ => None,
        },
        (UComm, _) => match e {
            A::Union(x, y) => Some(A::Union(y.clone(), x.clone())),
            _ => None,
        },
        (JComm, _) => match e {
            A::Join(x, y) => Some(A::Join(y.clone(), x.clone())),
            _ => None,
        },
        (JUDistR | MUDistR | LUDistR, Forward) => {
            let (l, r) = binary_of(rule, e)?;
            match l {
                A::Union(a1, a2) => Some(A::Union(
                    Box::new(make_binary(rule, a1, r)),
                    Box::new(make_binary(rule, a2, r)),
                )),
                _ => None,
            }
        }
        (JUDistR | MUDistR | LUDistR, Backward) => match e {
            A::Union(x, y) => {
                let (a1, a3) = binary_of(rule, x)?;
                let (a2, a3b) = binary_of(rule, y)?;
                (a3 == a3b).then(|| make_binary(rule, &A::union(a1.clone(), a2.clone()), a3))
            }
            _ => None,
        },
        (JUDistL, Forward) => match e {
            A::Join(a1, r) => match &**r {
                A::Union(a2, a3) => Some(A::union(
                    A::Join(a1.clone(), a2.clone()),
                    A::Join(a1.clone(), a3.clone()),
                )),
                _ => None,
            },
            _ => None,
        },
        (JUDistL, Backward) => match e {
            A::Union(x, y) => match (&**x, &**y) {
                (A::Join(a1, a2), A::Join(a1b, a3)) if a1 == a1b => {
                    Some(A::Join(a1.clone(), Box::new(A::Union(a2.clone(), a3.clone()))))
                }
                _ => None,
            },
            _ => None,
        },
        (SUPush, Forward) => match e {
            A::Select(r, inner) => match &**inner {
                A::Union(a1, a2) => Some(A::union(A::Select(r.clone(), a1.clone()), A::Select(r.clone(), a2.clone()))),
                _ => None,
            },
            _ => None,
        },
        (SUPush, Backward) => match e {
            A::Union(x, y) => match (&**x, &**y) {
                (A::Select(r1, a1), A::Select(r2, a2)) if r1 == r2 => {
                    Some(A::Select(r1.clone(), Box::new(A::Union(a1.clone(), a2.clone()))))
                }
                _ => None,
            },
            _ => None,
        },
        (SDecompI, Forward) => match e {
            A::Select(FilterCondition::And(r1, r2), a) => {
                Some(A::Select((**r1).clone(), Box::new(A::Select((**r2).clone(), a.clone()))))
            }
            _ => None,
        },
        (SDecompI, Backward) => match e {
            A::Select(r1, inner) => match &**inner {
                A::Select(r2, a) => Some(A::Select(FilterCondition::and(r1.clone(), r2.clone()), a.clone())),
                _ => None,
            },
            _ => None,
        },
        (SDecompII, Forward) => match e {
            A::Select(FilterCondition::Or(r1, r2), a) => Some(A::union(
                A::Select((**r1).clone(), a.clone()),
                A::Select((**r2).clone(), a.clone()),
            )),
            _ => None,
        },
        (SDecompII, Backward) => match e {
            A::Union(x, y) => match (&**x, &**y) {
                (A::Select(r1, a1), A::Select(r2, a2)) if a1 == a2 => {
                    Some(A::Select(FilterCondition::or(r1.clone(), r2.clone()), a1.clone()))
                }
                _ => None,
            },
            _ => None,
        },
        (SReord, _) => match e {
            A::Select(r1, inner) => match &**inner {
                A::Select(r2, a) => Some(A::Select(r2.clone(), Box::new(A::Select(r1.clone(), a.clone())))),
                _ => None,
            },
            _ => None,
        },
        (BndI, Forward) => match e {
            A::Select(r, a) => bound_var(r).filter(|x| a.safe_vars().contains(*x)).map(|_| (**a).clone()),
            _ => None,
        },
        (BndII, Forward) => match e {
            A::Select(r, a) => bound_var(r).filter(|x| !a.vars().contains(*x)).map(|_| A::Empty),
            _ => None,
        },
        (BndIII, Forward) => match e {
            A::Select(r, a) => neg_bound_var(r).filter(|x| a.safe_vars().contains(*x)).map(|_| A::Empty),
            _ => None,
        },
        (BndIV, Forward) => match e {
            A::Select(r, a) => neg_bound_var(r).filter(|x| !a.vars().contains(*x)).map(|_| (**a).clone()),
            _ => None,
        },
        (BndV, Forward) => match e {
            A::Select(r, inner) => match (bound_var(r), &**inner) {
                (Some(x), A::LeftJoin(a1, a2)) if a2.safe_vars().contains(x) && !a1.vars().contains(x) => {
                    Some(A::Join(a1.clone(), a2.clone()))
                }
                _ => None,
            },
            _ => None,
        },
        (SJPush | SMPush | SLPush, Forward) => match e {
            A::Select(r, inner) => {
                let (a1, a2) = binary_of(rule, inner)?;
                push_ok(r, a1).then(|| make_binary(rule, &A::Select(r.clone(), b(a1)), a2))
            }
            _ => None,
        },
        (SJPush | SMPush | SLPush, Backward) => {
            let (l, a2) = binary_of(rule, e)?;
            match l {
                A::Select(r, a1) if push_ok(r, a1) => Some(A::Select(r.clone(), Box::new(make_binary(rule, a1, a2)))),
                _ => None,
            }
        }
        (WeakFilterPush, Forward) => match e {
            A::Select(r, inner) => {
                let (a1, a2) = any_pushable_binary(inner)?;
                weak_push_ok(r, a1, a2).then(|| rebuild_binary(inner, A::Select(r.clone(), b(a1)), a2.clone()))
            }
            _ => None,
        },
        (WeakFilterPush, Backward) => {
            let (l, a2) = any_pushable_binary(e)?;
            match l {
                A::Select(r, a1) if weak_push_ok(r, a1, a2) => {
                    Some(A::Select(r.clone(), Box::new(rebuild_binary(e, (**a1).clone(), a2.clone()))))
                }
                _ => None,
            }
        }
        (MReord, _) => match e {
            A::Minus(l, a3) => match &**l {
                A::Minus(a1, a2) => Some(A::minus(A::Minus(a1.clone(), a3.clone()), (**a2).clone())),
                _ => None,
            },
            _ => None,
        },
        (MMUCorr, Forward) => match e {
            A::Minus(l, a3) => match &**l {
                A::Minus(a1, a2) => Some(A::Minus(a1.clone(), Box::new(A::Union(a2.clone(), a3.clone())))),
                _ => None,
            },
            _ => None,
        },
        (MMUCorr, Backward) => match e {
            A::Minus(a1, r) => match &**r {
                A::Union(a2, a3) => Some(A::Minus(Box::new(A::Minus(a1.clone(), a2.clone())), a3.clone())),
                _ => None,
            },
            _ => None,
        },
        (MJ, Forward) => match e {
            A::Minus(a1, a2) => Some(A::Minus(a1.clone(), Box::new(A::Join(a1.clone(), a2.clone())))),
            _ => None,
        },
        (MJ, Backward) => match e {
            A::Minus(a1, r) => match &**r {
                A::Join(a1b, a2) if a1 == a1b => Some(A::Minus(a1.clone(), a2.clone())),
                _ => None,
            },
            _ => None,
        },
        (LJ, Forward) => match e {
            A::LeftJoin(a1, a2) if a1.is_minus_fragment() && a2.is_minus_fragment() => {
                Some(A::LeftJoin(a1.clone(), Box::new(A::Join(a1.clone(), a2.clone()))))
            }
            _ => None,
        },
        (LJ, Backward) => match e {
            A::LeftJoin(a1, r) => match &**r {
                A::Join(a1b, a2) if a1 == a1b && a1.is_minus_fragment() && a2.is_minus_fragment() => {
                    Some(A::LeftJoin(a1.clone(), a2.clone()))
                }
                _ => None,
            },
            _ => None,
        },
        (NegBndMinus, Forward) => match e {
            A::Select(r, inner) => match (neg_bound_var(r), &**inner) {
                (Some(x), A::LeftJoin(a1, a2))
                    if a1.is_minus_fragment()
                        && a2.is_minus_fragment()
                        && a2.safe_vars().contains(x)
                        && !a1.vars().contains(x) =>
                {
                    Some(A::Minus(a1.clone(), a2.clone()))
                }
                _ => None,
            },
            _ => None,
        },
        (Inv | BndI | BndII | BndIII | BndIV | BndV | NegBndMinus, Backward) => None,
    }
}

/// Operands of the binary operator a rule is about (⋈ for JUDistR/SJPush, etc.).
fn binary_of(rule: RuleId, e: &AlgebraExpr) -> Option<(&AlgebraExpr, &AlgebraExpr)> {
    use AlgebraExpr as A;
    match (rule, e) {
        (RuleId::JUDistR | RuleId::SJPush, A::Join(a, c))
        | (RuleId::MUDistR | RuleId::SMPush, A::Minus(a, c))
        | (RuleId::LUDistR | RuleId::SLPush, A::LeftJoin(a, c)) => Some((a, c)),
        _ => None,
    }
}

fn make_binary(rule: RuleId, a: &AlgebraExpr, c: &AlgebraExpr) -> AlgebraExpr {
    match rule {
        RuleId::JUDistR | RuleId::SJPush => AlgebraExpr::join(a.clone(), c.clone()),
        RuleId::MUDistR | RuleId::SMPush => AlgebraExpr::minus(a.clone(), c.clone()),
        RuleId::LUDistR | RuleId::SLPush => AlgebraExpr::left_join(a.clone(), c.clone()),
        _ => unreachable!("not a binary-operator rule"),
    }
}

fn any_pushable_binary(e: &AlgebraExpr) -> Option<(&AlgebraExpr, &AlgebraExpr)> {
    match e {
        AlgebraExpr::Join(a, c) | AlgebraExpr::Minus(a, c) | AlgebraExpr::LeftJoin(a, c) => Some((a, c)),
        _ => None,
    }
}

fn rebuild_binary(shape: &AlgebraExpr, a: AlgebraExpr, c: AlgebraExpr) -> AlgebraExpr {
    match shape {
        AlgebraExpr::Join(..) => AlgebraExpr::join(a, c),
        AlgebraExpr::Minus(..) => AlgebraExpr::minus(a, c),
        AlgebraExpr::LeftJoin(..) => AlgebraExpr::left_join(a, c),
        _ => unreachable!("not a pushable binary operator"),
    }
}

pub fn subtree<'a>(e: &'a AlgebraExpr, site: &[usize]) -> Option<&'a AlgebraExpr> {
    let mut cur = e;
    for &i in site {
        cur = *cur.children().get(i)?;
    }
    Some(cur)
}

fn replace_at(e: &AlgebraExpr, site: &[usize], new: AlgebraExpr) -> Option<AlgebraExpr> {
    let mut out = e.clone();
    let mut cur = &mut out;
    for &i in site {
        cur = cur.children_mut().into_iter().nth(i)?;
    }
    *cur = new;
    Some(out)
}

/// All sites in post-order (children left to right, then the node).
pub fn all_sites(e: &AlgebraExpr) -> Vec<Site> {
    fn go(e: &AlgebraExpr, path: &mut Site, out: &mut Vec<Site>) {
        for (i, c) in e.children().into_iter().enumerate() {
            path.push(i);
            go(c, path, out);
            path.pop();
        }
        out.push(path.clone());
    }
    let mut out = Vec::new();
    go(e, &mut Vec::new(), &mut out);
    out
}

pub fn applicable_sites_dir(rule: RuleId, dir: Direction, a: &AlgebraExpr) -> Vec<Site> {
    all_sites(a)
        .into_iter()
        .filter(|s| rewrite_root(rule, dir, subtree(a, s).expect("valid site")).is_some())
        .collect()
}

/// Sites where the rule applies in some direction; post-order, deduplicated.
pub fn applicable_sites(rule: RuleId, a: &AlgebraExpr) -> Vec<Site> {
    all_sites(a)
        .into_iter()
        .filter(|s| {
            let sub = subtree(a, s).expect("valid site");
            rule.directions().iter().any(|d| rewrite_root(rule, *d, sub).is_some())
        })
        .collect()
}

pub fn apply(rule: RuleId, dir: Direction, a: &AlgebraExpr, site: &[usize]) -> Result<AlgebraExpr> {
    let inapplicable = || Error::Inapplicable { rule: format!("{rule} {dir}"), site: format_site(site) };
    let sub = subtree(a, site).ok_or_else(inapplicable)?;
    let new = rewrite_root(rule, dir, sub).ok_or_else(inapplicable)?;
    replace_at(a, site, new).ok_or_else(inapplicable)
}

struct Rewriter {
    cur: AlgebraExpr,
    trace: RewriteTrace,
}

impl Rewriter {
    fn step(&mut self, rule: RuleId, dir: Direction, site: &[usize]) -> bool {
        let Some(before) = subtree(&self.cur, site).cloned() else { return false };
        let Some(after) = rewrite_root(rule, dir, &before) else { return false };
        self.cur = replace_at(&self.cur, site, after.clone()).expect("site exists");
        self.trace.steps.push(RewriteStep { rule, direction: dir, site: site.to_vec(), before, after });
        true
    }
}

const FILTER_ELIMINATIONS: [RuleId; 5] = [RuleId::BndI, RuleId::BndII, RuleId::BndIII, RuleId::BndIV, RuleId::BndV];
const PUSHES: [RuleId; 4] = [RuleId::SUPush, RuleId::SJPush, RuleId::SMPush, RuleId::SLPush];

/// Whether a filter `R` directly above `x` could move or vanish.
fn filter_can_move(r: &FilterCondition, x: &AlgebraExpr) -> bool {
    let probe = AlgebraExpr::Select(r.clone(), Box::new(x.clone()));
    FILTER_ELIMINATIONS.iter().chain(PUSHES.iter()).any(|rule| rewrite_root(*rule, Direction::Forward, &probe).is_some())
        || matches!(x, AlgebraExpr::Join(_, y) if push_ok(r, y))
}

/// Splits conjunctive filters, eliminates bound checks where the safe
/// variables decide them, and pushes filters towards the leaves.
pub fn normalize_filters(a: &AlgebraExpr) -> (AlgebraExpr, RewriteTrace) {
    let mut rw = Rewriter { cur: a.clone(), trace: RewriteTrace::default() };
    'outer: loop {
        for site in all_sites(&rw.cur) {
            let node = subtree(&rw.cur, &site).expect("site").clone();
            let AlgebraExpr::Select(r, inner) = &node else { continue };
            if rw.step(RuleId::SDecompI, Direction::Forward, &site) {
                continue 'outer;
            }
            for rule in FILTER_ELIMINATIONS.iter().chain(PUSHES.iter()) {
                if rw.step(*rule, Direction::Forward, &site) {
                    continue 'outer;
                }
            }
            if let AlgebraExpr::Join(_, y) = &**inner {
                if push_ok(r, y) {
                    let mut child = site.clone();
                    child.push(0);
                    rw.step(RuleId::JComm, Direction::Forward, &child);
                    rw.step(RuleId::SJPush, Direction::Forward, &site);
                    rw.step(RuleId::JComm, Direction::Forward, &site);
                    continue 'outer;
                }
            }
            if let AlgebraExpr::Select(r2, x) = &**inner {
                if filter_can_move(r, x) && !filter_can_move(r2, x) && rw.step(RuleId::SReord, Direction::Forward, &site) {
                    continue 'outer;
                }
            }
        }
        break;
    }
    (rw.cur, rw.trace)
}

/// Drops redundant left operands under left joins and turns negated bound
/// checks over left joins into explicit differences.
pub fn extract_negation(a: &AlgebraExpr) -> (AlgebraExpr, RewriteTrace) {
    let mut rw = Rewriter { cur: a.clone(), trace: RewriteTrace::default() };
    'outer: loop {
        for site in all_sites(&rw.cur) {
            if rw.step(RuleId::LJ, Direction::Backward, &site) || rw.step(RuleId::NegBndMinus, Direction::Forward, &site) {
                continue 'outer;
            }
        }
        break;
    }
    (rw.cur, rw.trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::Term;

    fn l(s: &str, p: &str, o: &str) -> AlgebraExpr {
        AlgebraExpr::leaf(s, p, o)
    }

    #[test]
    fn sjpush_at_root() {
        let e = AlgebraExpr::select(
            FilterCondition::eq_const("p", Term::iri("x")),
            AlgebraExpr::join(l("?p", "name", "?n"), l("?p", "age", "?a")),
        );
        assert_eq!(applicable_sites_dir(RuleId::SJPush, Direction::Forward, &e), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn jidem_needs_minus_fragment() {
        let u = AlgebraExpr::union(l("?x", "c", "1"), l("0", "c", "?y"));
        let e = AlgebraExpr::join(u.clone(), u);
        assert!(applicable_sites_dir(RuleId::JIdem, Direction::Forward, &e).is_empty());
        let t = l("?x", "c", "1");
        let e2 = AlgebraExpr::join(t.clone(), t.clone());
        assert_eq!(apply(RuleId::JIdem, Direction::Forward, &e2, &[]).unwrap(), t);
    }

    #[test]
    fn uidem_at_root() {
        let t = l("?x", "c", "1");
        let e = AlgebraExpr::union(t.clone(), t);
        assert!(applicable_sites_dir(RuleId::UIdem, Direction::Forward, &e).contains(&vec![]));
    }

    #[test]
    fn lj_both_ways() {
        let a1 = l("?p", "type", "Person");
        let a2 = l("?p", "name", "?n");
        let e = AlgebraExpr::left_join(a1.clone(), a2.clone());
        let f = apply(RuleId::LJ, Direction::Forward, &e, &[]).unwrap();
        assert_eq!(f, AlgebraExpr::left_join(a1.clone(), AlgebraExpr::join(a1, a2)));
        assert_eq!(apply(RuleId::LJ, Direction::Backward, &f, &[]).unwrap(), e);
    }

    #[test]
    fn example_two_negation() {
        let p = l("?p", "type", "Person");
        let n = l("?p", "name", "?n");
        let a1 = AlgebraExpr::select(
            FilterCondition::not(FilterCondition::bound("n")),
            AlgebraExpr::left_join(p.clone(), AlgebraExpr::join(p.clone(), n.clone())),
        );
        let (out, trace) = extract_negation(&a1);
        assert_eq!(out, AlgebraExpr::minus(p, n));
        assert_eq!(trace.len(), 2);
        assert_eq!(trace.steps[0].rule, RuleId::LJ);
        assert_eq!(trace.steps[0].direction, Direction::Backward);
        assert_eq!(trace.steps[1].rule, RuleId::NegBndMinus);
        assert_eq!(trace.replay(&a1).unwrap(), out);
    }

    #[test]
    fn jcomm_involution() {
        let e = AlgebraExpr::join(l("?a", "p", "b"), l("?c", "p", "d"));
        let once = apply(RuleId::JComm, Direction::Forward, &e, &[]).unwrap();
        assert_ne!(once, e);
        assert_eq!(apply(RuleId::JComm, Direction::Forward, &once, &[]).unwrap(), e);
    }

    #[test]
    fn normalize_splits_conjunction_first() {
        let e = AlgebraExpr::select(
            FilterCondition::and(FilterCondition::bound("a"), FilterCondition::eq_const("b", Term::iri("1"))),
            AlgebraExpr::left_join(l("?a", "p", "?b"), l("?a", "q", "?c")),
        );
        let (out, trace) = normalize_filters(&e);
        assert_eq!(trace.steps[0].rule, RuleId::SDecompI);
        assert_eq!(trace.replay(&e).unwrap(), out);
        assert_eq!(
            out,
            AlgebraExpr::left_join(
                AlgebraExpr::select(FilterCondition::eq_const("b", Term::iri("1")), l("?a", "p", "?b")),
                l("?a", "q", "?c")
            )
        );
    }

    #[test]
    fn normalize_filter_free_is_identity() {
        let e = AlgebraExpr::join(l("?a", "p", "?b"), AlgebraExpr::union(l("?a", "q", "?c"), l("?c", "r", "d")));
        let (out, trace) = normalize_filters(&e);
        assert_eq!(out, e);
        assert!(trace.is_empty());
    }

    #[test]
    fn push_into_right_join_operand() {
        let e = AlgebraExpr::select(
            FilterCondition::eq_const("c", Term::iri("1")),
            AlgebraExpr::join(l("?a", "p", "?b"), l("?a", "q", "?c")),
        );
        let (out, trace) = normalize_filters(&e);
        assert_eq!(
            out,
            AlgebraExpr::join(
                l("?a", "p", "?b"),
                AlgebraExpr::select(FilterCondition::eq_const("c", Term::iri("1")), l("?a", "q", "?c"))
            )
        );
        assert_eq!(trace.replay(&e).unwrap(), out);
    }

    #[test]
    fn inapplicable_site_is_error() {
        let e = l("?a", "p", "?b");
        assert!(matches!(apply(RuleId::Inv, Direction::Forward, &e, &[]), Err(Error::Inapplicable { .. })));
        assert!(apply(RuleId::JComm, Direction::Forward, &e, &[0]).is_err());
    }
}
