//! Sufficient conditions for chase termination: weak acyclicity, safety,
//! stratification, safe stratification and safe restriction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::chase::{find_homomorphism, Assignment, Instance, Value};
use crate::cq::{atoms_vars, Atom, Constraint, CqTerm, Egd, Position, Tgd};
use crate::rdf::Term;

/// A graph over positions whose edges may be marked special.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct PositionGraph {
    pub vertices: BTreeSet<Position>,
    /// `(from, to, special)`.
    pub edges: BTreeSet<(Position, Position, bool)>,
}

impl PositionGraph {
    fn add(&mut self, from: &Position, to: &Position, special: bool) {
        self.vertices.insert(from.clone());
        self.vertices.insert(to.clone());
        self.edges.insert((from.clone(), to.clone(), special));
    }

    pub fn special_edges(&self) -> impl Iterator<Item = (&Position, &Position)> {
        self.edges.iter().filter(|e| e.2).map(|(a, b, _)| (a, b))
    }

    /// A cycle through a special edge, as a closed position path, if one exists.
    pub fn special_cycle(&self) -> Option<Vec<Position>> {
        let idx: BTreeMap<&Position, usize> = self.vertices.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let verts: Vec<&Position> = self.vertices.iter().collect();
        let mut g = DiGraph::<(), ()>::new();
        let nodes: Vec<NodeIndex> = verts.iter().map(|_| g.add_node(())).collect();
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); verts.len()];
        for (a, b, _) in &self.edges {
            g.add_edge(nodes[idx[a]], nodes[idx[b]], ());
            succ[idx[a]].insert(idx[b]);
        }
        let mut comp = vec![0usize; verts.len()];
        for (ci, scc) in tarjan_scc(&g).into_iter().enumerate() {
            for n in scc {
                comp[n.index()] = ci;
            }
        }
        for (a, b) in self.special_edges() {
            let (s, t) = (idx[a], idx[b]);
            if comp[s] != comp[t] {
                continue;
            }
            // Shortest path t ->* s inside the component closes the cycle.
            let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
            let mut queue = VecDeque::from([t]);
            let mut seen = BTreeSet::from([t]);
            while let Some(u) = queue.pop_front() {
                if u == s {
                    break;
                }
                for &w in &succ[u] {
                    if comp[w] == comp[s] && seen.insert(w) {
                        prev.insert(w, u);
                        queue.push_back(w);
                    }
                }
            }
            let mut path = vec![s];
            let mut cur = s;
            while cur != t {
                cur = prev[&cur];
                path.push(cur);
            }
            path.reverse();
            let mut cycle = vec![verts[s].clone()];
            cycle.extend(path.into_iter().map(|i| verts[i].clone()));
            return Some(cycle);
        }
        None
    }

    pub fn is_subgraph_of(&self, other: &PositionGraph) -> bool {
        self.vertices.is_subset(&other.vertices) && self.edges.is_subset(&other.edges)
    }
}

fn tgds(sigma: &[Constraint]) -> impl Iterator<Item = &Tgd> {
    sigma.iter().filter_map(|c| c.as_tgd())
}

fn var_positions(atoms: &[Atom], v: &str) -> Vec<Position> {
    atoms
        .iter()
        .flat_map(|a| a.positions())
        .filter(|(_, t)| t.as_var() == Some(v))
        .map(|(p, _)| p)
        .collect()
}

fn tgd_positions(t: &Tgd) -> impl Iterator<Item = Position> + '_ {
    t.body.iter().chain(&t.head).flat_map(|a| a.positions().map(|(p, _)| p))
}

fn position_graph(sigma: &[Constraint], restrict: Option<&BTreeSet<Position>>) -> PositionGraph {
    let mut g = PositionGraph::default();
    match restrict {
        None => g.vertices.extend(tgds(sigma).flat_map(tgd_positions)),
        Some(aff) => g.vertices.extend(aff.iter().cloned()),
    }
    for t in tgds(sigma) {
        let ex_pos: Vec<Position> = t.existentials.iter().flat_map(|y| var_positions(&t.head, y)).collect();
        for x in t.frontier() {
            let from = var_positions(&t.body, &x);
            if let Some(aff) = restrict {
                if !from.iter().all(|p| aff.contains(p)) {
                    continue;
                }
            }
            let to = var_positions(&t.head, &x);
            for p1 in &from {
                for p2 in &to {
                    g.add(p1, p2, false);
                }
                for p2 in &ex_pos {
                    g.add(p1, p2, true);
                }
            }
        }
    }
    g
}

pub fn dependency_graph(sigma: &[Constraint]) -> PositionGraph {
    position_graph(sigma, None)
}

pub fn is_weakly_acyclic(sigma: &[Constraint]) -> bool {
    dependency_graph(sigma).special_cycle().is_none()
}

pub fn affected_positions(sigma: &[Constraint]) -> BTreeSet<Position> {
    let mut aff: BTreeSet<Position> = BTreeSet::new();
    for t in tgds(sigma) {
        for y in &t.existentials {
            aff.extend(var_positions(&t.head, y));
        }
    }
    loop {
        let before = aff.len();
        for t in tgds(sigma) {
            for x in t.frontier() {
                if var_positions(&t.body, &x).iter().all(|p| aff.contains(p)) {
                    aff.extend(var_positions(&t.head, &x));
                }
            }
        }
        if aff.len() == before {
            return aff;
        }
    }
}

pub fn propagation_graph(sigma: &[Constraint]) -> PositionGraph {
    position_graph(sigma, Some(&affected_positions(sigma)))
}

pub fn is_safe(sigma: &[Constraint]) -> bool {
    propagation_graph(sigma).special_cycle().is_none()
}

/// Head positions of `alpha` holding an existential variable or a variable
/// whose body positions all lie in `p`.
pub fn aff_cl(alpha: &Tgd, p: &BTreeSet<Position>) -> BTreeSet<Position> {
    let mut out = BTreeSet::new();
    for a in &alpha.head {
        for (pos, t) in a.positions() {
            let Some(v) = t.as_var() else { continue };
            if alpha.existentials.contains(v) || var_positions(&alpha.body, v).iter().all(|q| p.contains(q)) {
                out.insert(pos);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// The firing relations

/// A concrete instance and tuples on which `alpha` firing makes `beta` applicable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiringWitness {
    pub instance: Instance,
    pub alpha_at: Assignment,
    pub beta_at: Assignment,
    pub result: Instance,
}

fn rename_atoms(atoms: &[Atom], pre: &str) -> Vec<Atom> {
    atoms
        .iter()
        .map(|a| {
            let args = a
                .args
                .iter()
                .map(|t| match t {
                    CqTerm::Var(v) => CqTerm::Var(format!("{pre}{v}")),
                    c => c.clone(),
                })
                .collect();
            Atom::new(a.relation.clone(), args)
        })
        .collect()
}

fn rename(c: &Constraint, pre: &str) -> Constraint {
    match c {
        Constraint::Tgd(t) => Constraint::Tgd(Tgd {
            body: rename_atoms(&t.body, pre),
            head: rename_atoms(&t.head, pre),
            existentials: t.existentials.iter().map(|v| format!("{pre}{v}")).collect(),
        }),
        Constraint::Egd(e) => Constraint::Egd(Egd {
            body: rename_atoms(&e.body, pre),
            left: format!("{pre}{}", e.left),
            right: format!("{pre}{}", e.right),
        }),
    }
}

/// Union-find over constraint terms.
#[derive(Clone, Default)]
struct Uf {
    parent: BTreeMap<CqTerm, CqTerm>,
}

impl Uf {
    fn find(&mut self, t: &CqTerm) -> CqTerm {
        let p = self.parent.get(t).cloned();
        match p {
            None => t.clone(),
            Some(p) => {
                let r = self.find(&p);
                self.parent.insert(t.clone(), r.clone());
                r
            }
        }
    }

    fn union(&mut self, a: &CqTerm, b: &CqTerm) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent.insert(ra, rb);
        }
    }

    fn classes(&mut self, terms: &BTreeSet<CqTerm>) -> BTreeMap<CqTerm, BTreeSet<CqTerm>> {
        let mut out: BTreeMap<CqTerm, BTreeSet<CqTerm>> = BTreeMap::new();
        for t in terms {
            out.entry(self.find(t)).or_default().insert(t.clone());
        }
        out
    }
}

fn all_terms<'a>(atoms: impl Iterator<Item = &'a Atom>) -> BTreeSet<CqTerm> {
    atoms.flat_map(|a| a.args.iter().cloned()).collect()
}

const FRESH_PREFIX: &str = "~c";

/// Assigns a value to every term class: forced constants, nulls where all
/// positions in `facts` lie in `p`, fresh constants elsewhere.
struct Valuation {
    values: BTreeMap<CqTerm, Value>,
}

impl Valuation {
    fn build(
        uf: &mut Uf,
        terms: &BTreeSet<CqTerm>,
        facts: &[Atom],
        p: Option<&BTreeSet<Position>>,
        fresh_nulls: &BTreeSet<CqTerm>,
    ) -> Option<Valuation> {
        let classes = uf.classes(terms);
        let mut class_pos: BTreeMap<CqTerm, BTreeSet<Position>> = BTreeMap::new();
        for a in facts {
            for (pos, t) in a.positions() {
                class_pos.entry(uf.find(t)).or_default().insert(pos);
            }
        }
        let mut values = BTreeMap::new();
        let mut next = 0u32;
        let mut deferred = Vec::new();
        for (rep, members) in &classes {
            let consts: BTreeSet<&Term> = members
                .iter()
                .filter_map(|t| match t {
                    CqTerm::Const(c) => Some(c),
                    CqTerm::Var(_) => None,
                })
                .collect();
            if consts.len() > 1 {
                return None;
            }
            let v = if let Some(c) = consts.into_iter().next() {
                Value::Const(c.clone())
            } else if fresh_nulls.contains(rep) {
                deferred.push(rep.clone());
                continue;
            } else {
                let confined = match p {
                    None => true,
                    Some(p) => class_pos.get(rep).map_or(true, |ps| ps.is_subset(p)),
                };
                if confined {
                    next += 1;
                    Value::Null(next - 1)
                } else {
                    next += 1;
                    Value::Const(Term::Iri(format!("{FRESH_PREFIX}{}", next - 1)))
                }
            };
            values.insert(rep.clone(), v);
        }
        for rep in deferred {
            next += 1;
            values.insert(rep, Value::Null(next - 1));
        }
        let mut out = BTreeMap::new();
        for (rep, members) in classes {
            for m in members {
                out.insert(m, values[&rep].clone());
            }
        }
        Some(Valuation { values: out })
    }

    fn atom(&self, a: &Atom) -> Vec<Value> {
        a.args.iter().map(|t| self.values[t].clone()).collect()
    }

    fn assignment(&self, vars: &BTreeSet<String>) -> Assignment {
        vars.iter().map(|v| (v.clone(), self.values[&CqTerm::Var(v.clone())].clone())).collect()
    }
}

fn instance_of(val: &Valuation, facts: &[Atom]) -> Instance {
    let mut inst = Instance::new();
    for a in facts {
        inst.insert(&a.relation, val.atom(a));
    }
    inst
}

/// β applicable at `b` on `inst`: the body maps with `b` and the head fails.
fn applicable_at(inst: &Instance, beta: &Constraint, b: &Assignment) -> bool {
    if find_homomorphism(beta.body(), inst, b).is_none() {
        return false;
    }
    match beta {
        Constraint::Tgd(t) => find_homomorphism(&t.head, inst, b).is_none(),
        Constraint::Egd(e) => b[&e.left] != b[&e.right],
    }
}

/// What the last condition of ≺_P demands of the firing of β.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub enum NullPropagation {
    /// β copies a null of the instance into its head.
    #[default]
    Copy,
    /// As `Copy`, or β is a TGD that invents a null.
    CopyOrCreate,
}

fn copies_null(beta: &Constraint, b: &Assignment, mode: NullPropagation) -> bool {
    match beta {
        Constraint::Tgd(t) => {
            t.frontier().iter().any(|v| b[v].is_null())
                || (mode == NullPropagation::CopyOrCreate && !t.existentials.is_empty())
        }
        Constraint::Egd(e) => b[&e.left].is_null() || b[&e.right].is_null(),
    }
}

fn check_candidate(
    i0: &Instance,
    j: &Instance,
    alpha: &Constraint,
    beta: &Constraint,
    a: &Assignment,
    b: &Assignment,
    p: Option<(&BTreeSet<Position>, NullPropagation)>,
) -> bool {
    applicable_at(i0, alpha, a)
        && !applicable_at(i0, beta, b)
        && applicable_at(j, beta, b)
        && p.map_or(true, |(_, mode)| copies_null(beta, b, mode))
}

fn subsets_of(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..(1u64 << n)).map(move |m| (0..n).map(|i| m >> i & 1 == 1).collect())
}

fn search_tgd_alpha(alpha: &Tgd, beta: &Constraint, p: Option<(&BTreeSet<Position>, NullPropagation)>) -> Option<FiringWitness> {
    let ac = Constraint::Tgd(alpha.clone());
    let bbody = beta.body();
    let choices: Vec<Vec<Option<usize>>> = bbody
        .iter()
        .map(|b| {
            let mut c = vec![None];
            for (k, h) in alpha.head.iter().enumerate() {
                if h.relation == b.relation && h.arity() == b.arity() {
                    c.push(Some(k));
                }
            }
            c
        })
        .collect();
    let universals = alpha.universals();
    let mut idx = vec![0usize; bbody.len()];
    loop {
        let pick: Vec<Option<usize>> = idx.iter().enumerate().map(|(i, &k)| choices[i][k]).collect();
        if pick.iter().any(|x| x.is_some()) {
            if let Some(w) = try_tgd_pick(alpha, &ac, beta, &pick, &universals, p) {
                return Some(w);
            }
        }
        // Advance the mixed-radix counter.
        let mut i = 0;
        loop {
            if i == idx.len() {
                return None;
            }
            idx[i] += 1;
            if idx[i] < choices[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn try_tgd_pick(
    alpha: &Tgd,
    ac: &Constraint,
    beta: &Constraint,
    pick: &[Option<usize>],
    universals: &BTreeSet<String>,
    p: Option<(&BTreeSet<Position>, NullPropagation)>,
) -> Option<FiringWitness> {
    let bbody = beta.body();
    let mut uf = Uf::default();
    for (b, k) in bbody.iter().zip(pick) {
        if let Some(k) = k {
            for (x, y) in b.args.iter().zip(&alpha.head[*k].args) {
                uf.union(x, y);
            }
        }
    }
    let old: Vec<Atom> = bbody.iter().zip(pick).filter(|(_, k)| k.is_none()).map(|(b, _)| b.clone()).collect();
    let old_terms = all_terms(old.iter());
    let terms = all_terms(alpha.body.iter().chain(&alpha.head).chain(bbody));
    let classes = uf.classes(&terms);
    let mut fresh = BTreeSet::new();
    for (rep, members) in &classes {
        let ex: Vec<&CqTerm> = members
            .iter()
            .filter(|t| matches!(t, CqTerm::Var(v) if alpha.existentials.contains(v)))
            .collect();
        if ex.is_empty() {
            continue;
        }
        let bad = ex.len() > 1
            || members.iter().any(|t| match t {
                CqTerm::Const(_) => true,
                CqTerm::Var(v) => universals.contains(v),
            })
            || members.iter().any(|t| old_terms.contains(t));
        if bad {
            return None;
        }
        fresh.insert(rep.clone());
    }
    let mut i_facts = alpha.body.clone();
    i_facts.extend(old);
    let val = Valuation::build(&mut uf, &terms, &i_facts, p.map(|x| x.0), &fresh)?;
    let i0 = instance_of(&val, &i_facts);
    let mut j = i0.clone();
    for h in &alpha.head {
        j.insert(&h.relation, val.atom(h));
    }
    let a = val.assignment(universals);
    let b = val.assignment(&beta.universals());
    check_candidate(&i0, &j, ac, beta, &a, &b, p).then(|| FiringWitness { instance: i0, alpha_at: a, beta_at: b, result: j })
}

fn search_egd_alpha(alpha: &Egd, beta: &Constraint, p: Option<(&BTreeSet<Position>, NullPropagation)>) -> Option<FiringWitness> {
    if alpha.left == alpha.right {
        return None;
    }
    let ac = Constraint::Egd(alpha.clone());
    let bbody = beta.body();
    let slots: Vec<(usize, usize)> = bbody.iter().enumerate().flat_map(|(i, a)| (0..a.arity()).map(move |k| (i, k))).collect();
    if slots.len() > 24 {
        return None;
    }
    let terms = all_terms(alpha.body.iter().chain(bbody));
    for (v, u) in [(&alpha.right, &alpha.left), (&alpha.left, &alpha.right)] {
        let (vt, ut) = (CqTerm::Var(v.clone()), CqTerm::Var(u.clone()));
        for flags in subsets_of(slots.len()) {
            if !flags.iter().any(|f| *f) {
                continue;
            }
            let mut uf = Uf::default();
            for (&(i, k), &f) in slots.iter().zip(&flags) {
                if f {
                    uf.union(&bbody[i].args[k], &ut);
                }
            }
            if uf.find(&vt) == uf.find(&ut) {
                continue;
            }
            // Pre-images of β's atoms: flagged slots hold v's value.
            let marker = CqTerm::Var(format!("{v}#pre"));
            uf.union(&marker, &vt);
            let mut pre = Vec::new();
            let mut n = 0;
            for a in bbody {
                let args = a
                    .args
                    .iter()
                    .map(|t| {
                        let f = flags[n];
                        n += 1;
                        if f {
                            marker.clone()
                        } else {
                            t.clone()
                        }
                    })
                    .collect();
                pre.push(Atom::new(a.relation.clone(), args));
            }
            let mut i_facts = alpha.body.clone();
            i_facts.extend(pre);
            let mut all = terms.clone();
            all.insert(marker.clone());
            let Some(val) = Valuation::build(&mut uf, &all, &i_facts, p.map(|x| x.0), &BTreeSet::new()) else { continue };
            let (Value::Null(vid), uval) = (val.values[&vt].clone(), val.values[&ut].clone()) else { continue };
            let i0 = instance_of(&val, &i_facts);
            let j = substituted(&i0, vid, &uval);
            let a = val.assignment(&alpha.body.iter().flat_map(|x| x.vars().map(String::from)).collect());
            let b = val.assignment(&beta.universals());
            if check_candidate(&i0, &j, &ac, beta, &a, &b, p) {
                return Some(FiringWitness { instance: i0, alpha_at: a, beta_at: b, result: j });
            }
        }
    }
    None
}

fn substituted(inst: &Instance, from: u32, to: &Value) -> Instance {
    let mut out = Instance::new();
    for f in inst.facts() {
        let args = f.args.into_iter().map(|x| if x == Value::Null(from) { to.clone() } else { x }).collect();
        out.insert(&f.relation, args);
    }
    out
}

fn firing_witness(alpha: &Constraint, beta: &Constraint, p: Option<(&BTreeSet<Position>, NullPropagation)>) -> Option<FiringWitness> {
    let a = rename(alpha, "a.");
    let b = rename(beta, "b.");
    match &a {
        Constraint::Tgd(t) => search_tgd_alpha(t, &b, p),
        Constraint::Egd(e) => search_egd_alpha(e, &b, p),
    }
}

/// α ≺ β: some firing of α can make β applicable at a tuple where it was not.
pub fn fires(alpha: &Constraint, beta: &Constraint) -> bool {
    fires_witness(alpha, beta).is_some()
}

pub fn fires_witness(alpha: &Constraint, beta: &Constraint) -> Option<FiringWitness> {
    firing_witness(alpha, beta, None)
}

/// α ≺_P β: as ≺, with nulls of the starting instance confined to `p` and
/// the resulting firing of β copying a null into its head.
pub fn fires_restricted(alpha: &Constraint, beta: &Constraint, p: &BTreeSet<Position>) -> bool {
    fires_restricted_witness(alpha, beta, p, NullPropagation::Copy).is_some()
}

pub fn fires_restricted_witness(
    alpha: &Constraint,
    beta: &Constraint,
    p: &BTreeSet<Position>,
    mode: NullPropagation,
) -> Option<FiringWitness> {
    firing_witness(alpha, beta, Some((p, mode)))
}

// ---------------------------------------------------------------------------
// Constraint graphs

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct ConstraintGraph {
    pub size: usize,
    pub edges: BTreeSet<(usize, usize)>,
}

impl ConstraintGraph {
    /// Strongly connected components that contain a cycle (self-loops included).
    pub fn cyclic_components(&self) -> Vec<Vec<usize>> {
        let mut g = DiGraph::<(), ()>::new();
        let nodes: Vec<NodeIndex> = (0..self.size).map(|_| g.add_node(())).collect();
        for &(a, b) in &self.edges {
            g.add_edge(nodes[a], nodes[b], ());
        }
        let mut out: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                v.sort();
                v
            })
            .filter(|c| c.len() > 1 || self.edges.contains(&(c[0], c[0])))
            .collect();
        out.sort();
        out
    }
}

pub fn chase_graph(sigma: &[Constraint]) -> ConstraintGraph {
    let mut g = ConstraintGraph { size: sigma.len(), edges: BTreeSet::new() };
    for (i, a) in sigma.iter().enumerate() {
        for (j, b) in sigma.iter().enumerate() {
            if fires(a, b) {
                g.edges.insert((i, j));
            }
        }
    }
    g
}

fn pick(sigma: &[Constraint], idx: &[usize]) -> Vec<Constraint> {
    idx.iter().map(|&i| sigma[i].clone()).collect()
}

fn first_bad_component(sigma: &[Constraint], g: &ConstraintGraph, ok: fn(&[Constraint]) -> bool) -> Option<Vec<usize>> {
    g.cyclic_components().into_iter().find(|c| !ok(&pick(sigma, c)))
}

pub fn is_stratified(sigma: &[Constraint]) -> bool {
    first_bad_component(sigma, &chase_graph(sigma), is_weakly_acyclic).is_none()
}

pub fn is_safely_stratified(sigma: &[Constraint]) -> bool {
    first_bad_component(sigma, &chase_graph(sigma), is_safe).is_none()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct RestrictionSystem {
    pub graph: ConstraintGraph,
    pub f: Vec<BTreeSet<Position>>,
}

fn propagate(alpha: &Constraint, fa: &BTreeSet<Position>, beta: &Constraint) -> BTreeSet<Position> {
    let pb = beta.body_positions();
    let src = match alpha {
        Constraint::Tgd(t) => aff_cl(t, fa),
        Constraint::Egd(_) => fa.clone(),
    };
    src.intersection(&pb).cloned().collect()
}

impl RestrictionSystem {
    /// Checks the three closure conditions against `sigma`.
    pub fn is_valid_for(&self, sigma: &[Constraint]) -> bool {
        self.is_valid_for_mode(sigma, NullPropagation::Copy)
    }

    pub fn is_valid_for_mode(&self, sigma: &[Constraint], mode: NullPropagation) -> bool {
        for &(a, b) in &self.graph.edges {
            if !propagate(&sigma[a], &self.f[a], &sigma[b]).is_subset(&self.f[b]) {
                return false;
            }
        }
        for (a, alpha) in sigma.iter().enumerate() {
            for (b, beta) in sigma.iter().enumerate() {
                if !self.graph.edges.contains(&(a, b)) && fires_restricted_witness(alpha, beta, &self.f[a], mode).is_some() {
                    return false;
                }
            }
        }
        true
    }
}

/// Least restriction system, computed by fixpoint iteration from the empty
/// graph. `order` permutes the pair visiting order; the result is the same.
pub fn minimal_restriction_system_with_order(
    sigma: &[Constraint],
    order: &[(usize, usize)],
    mode: NullPropagation,
) -> RestrictionSystem {
    let n = sigma.len();
    let mut rs = RestrictionSystem { graph: ConstraintGraph { size: n, edges: BTreeSet::new() }, f: vec![BTreeSet::new(); n] };
    let mut memo: BTreeMap<(usize, usize, BTreeSet<Position>), bool> = BTreeMap::new();
    loop {
        let mut changed = false;
        for &(a, b) in order {
            if !rs.graph.edges.contains(&(a, b)) {
                let key = (a, b, rs.f[a].clone());
                let fired = *memo.entry(key).or_insert_with(|| fires_restricted_witness(&sigma[a], &sigma[b], &rs.f[a], mode).is_some());
                if fired {
                    rs.graph.edges.insert((a, b));
                    changed = true;
                }
            }
        }
        for &(a, b) in order {
            if rs.graph.edges.contains(&(a, b)) {
                let add = propagate(&sigma[a], &rs.f[a], &sigma[b]);
                if !add.is_subset(&rs.f[b]) {
                    rs.f[b].extend(add);
                    changed = true;
                }
            }
        }
        if !changed {
            return rs;
        }
    }
}

pub fn minimal_restriction_system(sigma: &[Constraint]) -> RestrictionSystem {
    minimal_restriction_system_mode(sigma, NullPropagation::Copy)
}

pub fn minimal_restriction_system_mode(sigma: &[Constraint], mode: NullPropagation) -> RestrictionSystem {
    let n = sigma.len();
    let order: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    minimal_restriction_system_with_order(sigma, &order, mode)
}

pub fn is_safely_restricted(sigma: &[Constraint]) -> bool {
    is_safely_restricted_mode(sigma, NullPropagation::Copy)
}

pub fn is_safely_restricted_mode(sigma: &[Constraint], mode: NullPropagation) -> bool {
    first_bad_component(sigma, &minimal_restriction_system_mode(sigma, mode).graph, is_safe).is_none()
}

/// Safe restriction via safely stratified components of the minimal system.
pub fn is_safely_restricted_via_stratification(sigma: &[Constraint]) -> bool {
    first_bad_component(sigma, &minimal_restriction_system(sigma).graph, is_safely_stratified).is_none()
}

// ---------------------------------------------------------------------------
// Report

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct TerminationReport {
    pub weakly_acyclic: bool,
    pub safe: bool,
    pub stratified: bool,
    pub safely_stratified: bool,
    pub safely_restricted: bool,
    /// Cycle through a special edge of the dependency graph.
    pub dependency_cycle: Option<Vec<Position>>,
    /// Cycle through a special edge of the propagation graph.
    pub propagation_cycle: Option<Vec<Position>>,
    pub chase_graph: ConstraintGraph,
    /// A cyclic component of the chase graph that is not weakly acyclic.
    pub unstratified_component: Option<Vec<usize>>,
    /// A cyclic component of the chase graph that is not safe.
    pub unsafe_chase_component: Option<Vec<usize>>,
    pub restriction_system: RestrictionSystem,
    /// A cyclic component of the minimal restriction system that is not safe.
    pub unsafe_restricted_component: Option<Vec<usize>>,
}

impl TerminationReport {
    /// The inclusions between the five classes.
    pub fn implications_hold(&self) -> bool {
        let imp = |a: bool, b: bool| !a || b;
        imp(self.weakly_acyclic, self.safe)
            && imp(self.weakly_acyclic, self.stratified)
            && imp(self.safe, self.safely_stratified)
            && imp(self.safely_stratified, self.safely_restricted)
            && imp(self.stratified, self.safely_restricted)
    }

    pub fn terminates(&self) -> bool {
        self.safely_restricted || self.stratified
    }

    /// The most specific classes that contain Σ.
    pub fn label(&self) -> String {
        if self.weakly_acyclic {
            return "weakly acyclic".into();
        }
        let mut parts = Vec::new();
        if self.safe {
            parts.push("safe");
        }
        if self.stratified {
            parts.push("stratified");
        }
        if parts.is_empty() && self.safely_stratified {
            parts.push("safely stratified");
        }
        if parts.is_empty() && self.safely_restricted {
            parts.push("safely restricted");
        }
        if parts.is_empty() {
            "no termination guarantee".into()
        } else {
            parts.join(" and ")
        }
    }
}

pub fn analyze(sigma: &[Constraint]) -> TerminationReport {
    let dependency_cycle = dependency_graph(sigma).special_cycle();
    let propagation_cycle = propagation_graph(sigma).special_cycle();
    let cg = chase_graph(sigma);
    let unstratified_component = first_bad_component(sigma, &cg, is_weakly_acyclic);
    let unsafe_chase_component = first_bad_component(sigma, &cg, is_safe);
    let rs = minimal_restriction_system(sigma);
    let unsafe_restricted_component = first_bad_component(sigma, &rs.graph, is_safe);
    TerminationReport {
        weakly_acyclic: dependency_cycle.is_none(),
        safe: propagation_cycle.is_none(),
        stratified: unstratified_component.is_none(),
        safely_stratified: unsafe_chase_component.is_none(),
        safely_restricted: unsafe_restricted_component.is_none(),
        dependency_cycle,
        propagation_cycle,
        chase_graph: cg,
        unstratified_component,
        unsafe_chase_component,
        restriction_system: rs,
        unsafe_restricted_component,
    }
}

pub fn positions_of(sigma: &[Constraint]) -> BTreeSet<Position> {
    sigma.iter().flat_map(|c| c.body_positions()).collect()
}

/// Variables of the body of a constraint; used by tests building witnesses.
pub fn body_vars(c: &Constraint) -> BTreeSet<String> {
    atoms_vars(c.body())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cq::parse_constraints;

    fn one(s: &str) -> Constraint {
        parse_constraints(s).unwrap().remove(0)
    }

    fn pos(r: &str, i: usize) -> Position {
        Position::new(r, i)
    }

    #[test]
    fn safe_not_weakly_acyclic() {
        let s = parse_constraints("R(x1,x2,x3), S(x2) -> exists y . R(x2,y,x1)").unwrap();
        assert!(!is_weakly_acyclic(&s));
        assert_eq!(affected_positions(&s), BTreeSet::from([pos("R", 2)]));
        assert!(propagation_graph(&s).edges.is_empty());
        assert!(is_safe(&s));
    }

    #[test]
    fn gamma_stratified_not_safe() {
        let s = parse_constraints("T(x1,x2), T(x2,x1) -> exists y1, y2 . T(x1,y1), T(y1,y2), T(y2,x1)").unwrap();
        assert_eq!(affected_positions(&s), BTreeSet::from([pos("T", 1), pos("T", 2)]));
        assert_eq!(propagation_graph(&s), dependency_graph(&s));
        assert!(!is_safe(&s));
        assert!(!fires(&s[0], &s[0]));
        assert!(is_stratified(&s));
    }

    #[test]
    fn safe_not_stratified_pair() {
        let a = one("S(x2,x3), R(x1,x2,x3) -> exists y . R(x2,y,x1)");
        let b = one("R(x1,x2,x3) -> S(x1,x3)");
        assert!(fires(&a, &b));
        assert!(fires(&b, &a));
        let s = vec![a, b];
        assert!(!is_stratified(&s));
        assert!(is_safe(&s));
        let r = analyze(&s);
        assert!(r.safely_stratified && r.safely_restricted);
        assert!(r.implications_hold());
    }

    #[test]
    fn four_constraints() {
        let s = parse_constraints(
            "R1(x1,x2) -> exists y . S(x1,x2,y)
             R1(x1,x2) -> exists y . T(x1,x2,y)
             S(x1,x2,x3), T(x4,x5,x6) -> T(x5,x1,x4)
             S(x1,x2,x3), T(x4,x5,x3) -> T(x1,x3,x3), R1(x3,x1), R2(x3,x1)",
        )
        .unwrap();
        assert!(fires(&s[0], &s[2]));
        assert!(fires(&s[1], &s[2]));
        assert!(fires(&s[2], &s[3]));
        assert!(fires(&s[3], &s[0]));
        assert!(fires(&s[3], &s[1]));
        let rs = minimal_restriction_system(&s);
        assert!(rs.graph.edges.is_empty());
        assert!(rs.f.iter().all(|f| f.is_empty()));
        assert!(rs.is_valid_for(&s));
        let r = analyze(&s);
        assert!(!r.safe && !r.safely_stratified && r.safely_restricted);
    }

    #[test]
    fn empty_sigma() {
        let r = analyze(&[]);
        assert!(r.weakly_acyclic && r.safe && r.stratified && r.safely_stratified && r.safely_restricted);
    }

    #[test]
    fn egd_firing() {
        let e = one("const p;\nT(x,p,y), T(x,p,z) -> y = z");
        let t = one("const q;\nT(x,q,y) -> exists w . T(y,q,w)");
        assert!(fires(&e, &t));
    }

    #[test]
    fn aff_cl_basics() {
        let Constraint::Tgd(t) = one("R(x,y) -> exists z . S(x,z), S(y,y)") else { panic!() };
        assert_eq!(aff_cl(&t, &BTreeSet::new()), BTreeSet::from([pos("S", 2)]));
        let all = BTreeSet::from([pos("R", 1), pos("R", 2)]);
        assert_eq!(aff_cl(&t, &all), BTreeSet::from([pos("S", 1), pos("S", 2)]));
    }
}


