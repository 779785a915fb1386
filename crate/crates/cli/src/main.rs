use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

use sparqlopt::algebra::{self, parse_mapping, translate, Mapping, MappingSet};
use sparqlopt::chase::{self, ChaseConfig, ChaseOutcome, FiringOrder, Instance, StepEffect, Value};
use sparqlopt::cq::{self, c1_translate, c2_translate, parse_constraints, Constraint, CqTerm};
use sparqlopt::rdf::{parse_document, Document, Term};
use sparqlopt::reductions::{self, Encoding};
use sparqlopt::rewrite::{self, format_site, Direction, RuleId};
use sparqlopt::sqo::{self, Scheme};
use sparqlopt::syntax::{parse_query, Parsed, SparqlQuery};
use sparqlopt::termination::{self, TerminationReport};
use sparqlopt::{Error, Result};

#[derive(Parser)]
#[command(name = "sparqlopt", version, about = "SPARQL algebra evaluation, rewriting and constraint-based optimization")]
struct Cli {
    #[arg(long, value_enum, global = true, default_value = "pretty")]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Pretty,
    Structured,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a query or expression on a document.
    Eval(EvalArgs),
    /// Decide whether a mapping belongs to the result.
    Member(MemberArgs),
    /// Apply algebraic rewrite rules.
    Rewrite(RewriteArgs),
    /// Semantic optimization under constraints.
    Optimize(OptimizeArgs),
    /// Show the algebra and conjunctive-query translations of a query.
    Translate(TranslateArgs),
    /// Chase termination analysis of a constraint set.
    Analyze(AnalyzeArgs),
    /// Run the chase on a document or fact file.
    Chase(ChaseArgs),
    /// Generate reduction instances.
    #[command(subcommand)]
    Gen(GenCmd),
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    query: PathBuf,
}

#[derive(Args)]
struct MemberArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    query: PathBuf,
    /// Inline mapping such as '{?a -> 1}' or a file containing one.
    #[arg(long)]
    mapping: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    NormalizeFilters,
    ExtractNegation,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dir {
    Forward,
    Backward,
}

#[derive(Args)]
struct RewriteArgs {
    #[arg(long)]
    query: PathBuf,
    #[arg(long, value_enum, conflicts_with = "rule")]
    strategy: Option<Strategy>,
    /// Apply a single rule; without --site the applicable sites are listed.
    #[arg(long)]
    rule: Option<String>,
    #[arg(long, value_enum, default_value = "forward")]
    direction: Dir,
    /// Dot-separated child indices, or "root".
    #[arg(long)]
    site: Option<String>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    constraints: PathBuf,
    #[arg(long, default_value = "auto")]
    scheme: String,
    #[arg(long, default_value_t = chase::MIN_BUDGET)]
    budget: u64,
    /// Number of random Σ-models on which each rewrite is evaluated.
    #[arg(long, default_value_t = 0)]
    verify_docs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(long)]
    query: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    WeaklyAcyclic,
    Safe,
    Stratified,
    SafelyStratified,
    SafelyRestricted,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    constraints: PathBuf,
    #[arg(long, value_enum)]
    check: Option<Check>,
}

#[derive(Args)]
struct ChaseArgs {
    /// RDF document, chased as facts of the triple relation.
    #[arg(long, conflicts_with = "facts", required_unless_present = "facts")]
    data: Option<PathBuf>,
    /// One fact per line, e.g. `R(a, b, c)`.
    #[arg(long)]
    facts: Option<PathBuf>,
    #[arg(long)]
    constraints: PathBuf,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    reverse: bool,
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum QbfFragment {
    Afo,
    Ao,
    O,
}

#[derive(Subcommand)]
enum GenCmd {
    /// QBF to SPARQL evaluation.
    Qbf {
        #[arg(long, value_enum)]
        fragment: QbfFragment,
        #[arg(long)]
        formula: PathBuf,
        /// Directory for document.doc, query.q and target.map.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also evaluate the instance and the brute-force oracle.
        #[arg(long)]
        check: bool,
    },
    /// 3SAT (DIMACS) to SPARQL evaluation.
    #[command(name = "3sat")]
    Sat {
        #[arg(long)]
        formula: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        check: bool,
    },
}

/// Successful run; `false` reports a negative answer (exit 1).
struct Outcome {
    text: String,
    json: Json,
    positive: bool,
}

impl Outcome {
    fn yes(text: String, json: Json) -> Self {
        Outcome { text, json, positive: true }
    }
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).map_err(|e| Error::Shape(format!("cannot read {}: {e}", p.display())))
}

fn load_doc(p: &Path) -> Result<Document> {
    parse_document(&read(p)?)
}

fn load_query(p: &Path) -> Result<Parsed> {
    parse_query(&read(p)?)
}

fn load_constraints(p: &Path) -> Result<Vec<Constraint>> {
    parse_constraints(&read(p)?)
}

fn mapping_arg(s: &str) -> Result<Mapping> {
    let p = Path::new(s);
    if !s.trim_start().starts_with('{') && p.exists() {
        parse_mapping(read(p)?.trim())
    } else {
        parse_mapping(s)
    }
}

fn mapping_json(m: &Mapping) -> Json {
    Json::Object(m.iter().map(|(k, v)| (k.to_string(), json!(v.to_string()))).collect())
}

fn set_text(s: &MappingSet) -> String {
    s.iter().map(|m| format!("{m}\n")).collect()
}

fn and_only(p: &Parsed) -> Result<SparqlQuery> {
    match p {
        Parsed::Query(q) if q.body.is_and_only() => Ok(q.clone()),
        Parsed::Expr(e) if e.is_and_only() => {
            let vars = e.vars();
            Ok(SparqlQuery::new(vars, e.clone()))
        }
        _ => Err(Error::Fragment("expected an And-only query".into())),
    }
}

fn eval(a: &EvalArgs) -> Result<Outcome> {
    let (d, q) = (load_doc(&a.data)?, load_query(&a.query)?);
    let r = algebra::evaluate_query(&q, &d);
    let json = json!({ "results": r.iter().map(mapping_json).collect::<Vec<_>>() });
    Ok(Outcome::yes(set_text(&r), json))
}

fn member(a: &MemberArgs) -> Result<Outcome> {
    let (d, q, m) = (load_doc(&a.data)?, load_query(&a.query)?, mapping_arg(&a.mapping)?);
    let yes = algebra::membership(&m, &d, &q);
    Ok(Outcome { text: format!("{yes}\n"), json: json!({ "mapping": mapping_json(&m), "member": yes }), positive: yes })
}

fn parse_site(s: &str) -> Result<Vec<usize>> {
    if s == "root" || s.is_empty() {
        return Ok(Vec::new());
    }
    s.split('.').map(|x| x.parse::<usize>().map_err(|_| Error::Shape(format!("bad site '{s}'")))).collect()
}

fn trace_json(t: &rewrite::RewriteTrace) -> Json {
    json!(t
        .steps
        .iter()
        .map(|s| json!({
            "rule": s.rule.name(),
            "direction": s.direction.to_string(),
            "site": format_site(&s.site),
            "before": s.before.to_string(),
            "after": s.after.to_string(),
        }))
        .collect::<Vec<_>>())
}

fn rewrite_cmd(a: &RewriteArgs) -> Result<Outcome> {
    let expr = translate(&load_query(&a.query)?);
    if let Some(name) = &a.rule {
        let rule = RuleId::from_name(name).ok_or_else(|| Error::Shape(format!("unknown rule '{name}'")))?;
        let dir = match a.direction {
            Dir::Forward => Direction::Forward,
            Dir::Backward => Direction::Backward,
        };
        return match &a.site {
            None => {
                let sites: Vec<String> = rewrite::applicable_sites_dir(rule, dir, &expr).iter().map(|s| format_site(s)).collect();
                let text = if sites.is_empty() { format!("{rule} {dir}: no applicable site\n") } else { format!("{}\n", sites.join("\n")) };
                Ok(Outcome { positive: !sites.is_empty(), json: json!({ "rule": rule.name(), "sites": sites }), text })
            }
            Some(s) => {
                let site = parse_site(s)?;
                let out = rewrite::apply(rule, dir, &expr, &site)?;
                let text = format!("1. {rule} {dir} at {}\n   before: {expr}\n   after:  {out}\nresult: {out}\n", format_site(&site));
                Ok(Outcome::yes(text, json!({ "input": expr.to_string(), "result": out.to_string() })))
            }
        };
    }
    let (out, trace) = match a.strategy.unwrap_or(Strategy::NormalizeFilters) {
        Strategy::NormalizeFilters => rewrite::normalize_filters(&expr),
        Strategy::ExtractNegation => rewrite::extract_negation(&expr),
    };
    let text = format!("{trace}result: {out}\n");
    Ok(Outcome::yes(text, json!({ "input": expr.to_string(), "steps": trace_json(&trace), "result": out.to_string() })))
}

fn optimize(a: &OptimizeArgs) -> Result<Outcome> {
    let q = load_query(&a.query)?;
    let sigma = load_constraints(&a.constraints)?;
    let scheme: Scheme = a.scheme.parse()?;
    let query = match &q {
        Parsed::Query(q) => q.clone(),
        Parsed::Expr(e) => SparqlQuery::new(e.vars(), e.clone()),
    };
    let mut text = String::new();
    let mut json = serde_json::Map::new();
    json.insert("input".into(), json!(query.to_string()));
    let mut candidates: Vec<SparqlQuery> = Vec::new();
    if let Ok(bgp) = and_only(&q) {
        let report = sqo::optimize_bgp(&bgp, &sigma, a.budget, scheme)?;
        text.push_str(&report.to_string());
        json.insert("status".into(), json!(report.status().to_string()));
        json.insert("complete".into(), json!(report.complete));
        json.insert(
            "schemes".into(),
            json!(report
                .schemes
                .iter()
                .map(|s| json!({ "name": s.name, "status": s.status.to_string(), "certified": s.certified, "note": s.note }))
                .collect::<Vec<_>>()),
        );
        json.insert("rewrites".into(), json!(report.rewrites.iter().map(|r| r.to_string()).collect::<Vec<_>>()));
        candidates.extend(report.rewrites);
    } else {
        let steps = sqo::semantic_rewrites(&query, &sigma, a.budget);
        text.push_str(&format!("input: {query}\n"));
        if steps.is_empty() {
            text.push_str("no semantic rewrite applies\n");
        }
        for s in &steps {
            text.push_str(&format!("{s}\n  result: {}\n", s.result));
        }
        json.insert(
            "steps".into(),
            json!(steps
                .iter()
                .map(|s| json!({ "rule": s.rule.to_string(), "site": format_site(&s.site), "result": s.result.to_string() }))
                .collect::<Vec<_>>()),
        );
        candidates.extend(steps.into_iter().map(|s| s.result));
    }
    if a.verify_docs > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let vocab = vocabulary(&query, &sigma);
        let docs = sqo::random_models(&mut rng, &sigma, &vocab, a.verify_docs, a.budget);
        let mut mismatches = 0;
        for d in &docs {
            let base = algebra::evaluate(&algebra::translate_query(&query), d);
            mismatches += candidates.iter().filter(|c| algebra::evaluate(&algebra::translate_query(c), d) != base).count();
        }
        text.push_str(&format!("verified on {} model(s): {} mismatch(es)\n", docs.len(), mismatches));
        json.insert("verified_docs".into(), json!(docs.len()));
        json.insert("mismatches".into(), json!(mismatches));
    }
    Ok(Outcome::yes(text, Json::Object(json)))
}

/// Constants of the query and Σ plus a few extra IRIs.
fn vocabulary(q: &SparqlQuery, sigma: &[Constraint]) -> Vec<Term> {
    let mut v: std::collections::BTreeSet<Term> = q
        .body
        .patterns()
        .iter()
        .flat_map(|p| p.terms().into_iter().filter(|t| !t.is_var()).cloned().collect::<Vec<_>>())
        .collect();
    v.extend(sigma.iter().flat_map(|c| c.constants()));
    v.extend(["c0", "c1", "c2"].map(Term::iri));
    v.into_iter().collect()
}

fn translate_cmd(a: &TranslateArgs) -> Result<Outcome> {
    let q = load_query(&a.query)?;
    let alg = translate(&q);
    let mut text = format!("algebra: {alg}\nfragment: {}\n", q.body().fragment());
    let mut json = serde_json::Map::new();
    json.insert("algebra".into(), json!(alg.to_string()));
    json.insert("fragment".into(), json!(q.body().fragment().to_string()));
    if let Ok(bgp) = and_only(&q) {
        let c1 = c1_translate(&bgp)?;
        text.push_str(&format!("c1: {c1}\n"));
        json.insert("c1".into(), json!(c1.to_string()));
        match c2_translate(&bgp) {
            Ok(c2) => {
                text.push_str(&format!("c2: {c2}\n"));
                json.insert("c2".into(), json!(c2.to_string()));
            }
            Err(e) => {
                text.push_str(&format!("c2: undefined ({e})\n"));
                json.insert("c2".into(), Json::Null);
            }
        }
    }
    Ok(Outcome::yes(text, Json::Object(json)))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn positions(c: &Option<Vec<cq::Position>>) -> String {
    c.as_ref().map(|ps| ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" -> ")).unwrap_or_default()
}

fn component(c: &Option<Vec<usize>>) -> String {
    c.as_ref().map(|ks| ks.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(", ")).unwrap_or_default()
}

fn report_text(r: &TerminationReport) -> String {
    let mut s = String::new();
    let rows = [
        ("weakly-acyclic", r.weakly_acyclic, positions(&r.dependency_cycle), "special cycle"),
        ("safe", r.safe, positions(&r.propagation_cycle), "special cycle"),
        ("stratified", r.stratified, component(&r.unstratified_component), "component"),
        ("safely-stratified", r.safely_stratified, component(&r.unsafe_chase_component), "component"),
        ("safely-restricted", r.safely_restricted, component(&r.unsafe_restricted_component), "component"),
    ];
    for (name, ok, witness, kind) in rows {
        s.push_str(&format!("{name}: {}", yes_no(ok)));
        if !ok {
            s.push_str(&format!(" ({kind} {witness})"));
        }
        s.push('\n');
    }
    let edges = |es: &std::collections::BTreeSet<(usize, usize)>| {
        es.iter().map(|(a, b)| format!("{}->{}", a + 1, b + 1)).collect::<Vec<_>>().join(" ")
    };
    s.push_str(&format!("chase graph: {}\n", edges(&r.chase_graph.edges)));
    s.push_str(&format!("restriction system: {}\n", edges(&r.restriction_system.graph.edges)));
    s.push_str(&format!("class: {}\n", r.label()));
    s
}

fn analyze(a: &AnalyzeArgs) -> Result<Outcome> {
    let sigma = load_constraints(&a.constraints)?;
    if let Some(c) = a.check {
        let (name, v) = match c {
            Check::WeaklyAcyclic => ("weakly-acyclic", termination::is_weakly_acyclic(&sigma)),
            Check::Safe => ("safe", termination::is_safe(&sigma)),
            Check::Stratified => ("stratified", termination::is_stratified(&sigma)),
            Check::SafelyStratified => ("safely-stratified", termination::is_safely_stratified(&sigma)),
            Check::SafelyRestricted => ("safely-restricted", termination::is_safely_restricted(&sigma)),
        };
        return Ok(Outcome { text: format!("{name}: {}\n", yes_no(v)), json: json!({ name: v }), positive: v });
    }
    let r = termination::analyze(&sigma);
    let mut json = serde_json::to_value(&r).map_err(|e| Error::Shape(e.to_string()))?;
    json["class"] = json!(r.label());
    Ok(Outcome::yes(report_text(&r), json))
}

fn parse_facts(text: &str) -> Result<Instance> {
    let mut inst = Instance::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim().trim_end_matches('.');
        if line.is_empty() {
            continue;
        }
        let err = || Error::Syntax { line: i + 1, msg: format!("expected a fact like R(a, b), got '{line}'") };
        let (rel, rest) = line.split_once('(').ok_or_else(err)?;
        let args = rest.strip_suffix(')').ok_or_else(err)?;
        let parts: Vec<&str> = args.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        let atom = cq::Atom::parse_args(rel.trim(), &parts);
        let vals = atom
            .args
            .into_iter()
            .map(|t| match t {
                CqTerm::Const(c) => Ok(Value::Const(c)),
                CqTerm::Var(_) => Err(err()),
            })
            .collect::<Result<Vec<_>>>()?;
        inst.insert(rel.trim(), vals);
    }
    Ok(inst)
}

fn chase_cmd(a: &ChaseArgs) -> Result<Outcome> {
    let sigma = load_constraints(&a.constraints)?;
    let inst = match (&a.data, &a.facts) {
        (Some(d), _) => chase::instance_from_document(&load_doc(d)?),
        (None, Some(f)) => parse_facts(&read(f)?)?,
        (None, None) => return Err(Error::Shape("--data or --facts is required".into())),
    };
    let budget = a.budget.unwrap_or_else(|| chase::default_budget(&inst, &sigma));
    let order = if a.reverse { FiringOrder::Reverse } else { FiringOrder::RoundRobin };
    let out = chase::chase_with(&inst, &sigma, ChaseConfig { budget, order });
    let mut text = String::new();
    if a.trace {
        for (i, s) in out.steps().iter().enumerate() {
            text.push_str(&format!("{} {s}\n", i + 1));
        }
    }
    let (status, positive) = match &out {
        ChaseOutcome::Terminated { .. } => ("terminated".to_string(), true),
        ChaseOutcome::Failed { clash, .. } => (format!("failed: {} = {}", clash.0, clash.1), false),
        ChaseOutcome::BudgetExceeded { .. } => (format!("budget of {budget} steps exceeded"), false),
    };
    text.push_str(&format!("{status} after {} step(s)\n", out.steps().len()));
    let result = match &out {
        ChaseOutcome::Terminated { instance, .. } | ChaseOutcome::BudgetExceeded { instance, .. } => Some(instance),
        ChaseOutcome::Failed { .. } => None,
    };
    if let Some(i) = result {
        text.push_str(&i.to_string());
    }
    let steps: Vec<Json> = out
        .steps()
        .iter()
        .map(|s| {
            let effect = match &s.effect {
                StepEffect::Added(fs) => json!({ "added": fs.iter().map(|f| f.to_string()).collect::<Vec<_>>() }),
                StepEffect::Merged(x, y) => json!({ "merged": [x.to_string(), y.to_string()] }),
                StepEffect::Fail => json!("fail"),
            };
            json!({
                "constraint": s.constraint + 1,
                "assignment": s.assignment.iter().map(|(k, v)| (k.clone(), json!(v.to_string()))).collect::<serde_json::Map<_, _>>(),
                "effect": effect,
            })
        })
        .collect();
    let json = json!({
        "status": status,
        "steps": if a.trace { json!(steps) } else { json!(out.steps().len()) },
        "instance": result.map(|i| i.facts().map(|f| f.to_string()).collect::<Vec<_>>()),
    });
    Ok(Outcome { text, json, positive })
}

fn emit(enc: &Encoding, out: &Option<PathBuf>, oracle: Option<bool>) -> Result<Outcome> {
    let (doc, query, target) = (enc.document.to_string(), format!("{}\n", enc.query), format!("{}\n", enc.target));
    let mut text = String::new();
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Error::Shape(e.to_string()))?;
        for (name, body) in [("document.doc", &doc), ("query.q", &query), ("target.map", &target)] {
            fs::write(dir.join(name), body).map_err(|e| Error::Shape(e.to_string()))?;
        }
        text.push_str(&format!("wrote {}\n", dir.display()));
    } else {
        text.push_str(&format!("# document\n{doc}# query\n{query}# target\n{target}"));
    }
    let mut json = json!({ "document": doc, "query": query.trim_end(), "target": mapping_json(&enc.target) });
    let mut positive = true;
    if let Some(truth) = oracle {
        let member = enc.holds();
        positive = member == truth;
        text.push_str(&format!("member: {member}\noracle: {truth}\n"));
        json["member"] = json!(member);
        json["oracle"] = json!(truth);
    }
    Ok(Outcome { text, json, positive })
}

fn gen(g: &GenCmd) -> Result<Outcome> {
    match g {
        GenCmd::Qbf { fragment, formula, out, check } => {
            let phi = reductions::parse_qbf(&read(formula)?)?;
            let enc = match fragment {
                QbfFragment::Afo => reductions::encode_qbf_afo(&phi)?,
                QbfFragment::Ao => reductions::encode_qbf_ao(&phi)?,
                QbfFragment::O => reductions::encode_qbf_o(&phi)?,
            };
            let oracle = if *check { Some(reductions::brute_force_qbf(&phi)?) } else { None };
            emit(&enc, out, oracle)
        }
        GenCmd::Sat { formula, out, check } => {
            let psi = reductions::parse_cnf3(&read(formula)?)?;
            let enc = reductions::encode_3sat(&psi)?;
            let oracle = if *check { Some(reductions::brute_force_sat(&psi)?) } else { None };
            emit(&enc, out, oracle)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.cmd {
        Cmd::Eval(a) => eval(a),
        Cmd::Member(a) => member(a),
        Cmd::Rewrite(a) => rewrite_cmd(a),
        Cmd::Optimize(a) => optimize(a),
        Cmd::Translate(a) => translate_cmd(a),
        Cmd::Analyze(a) => analyze(a),
        Cmd::Chase(a) => chase_cmd(a),
        Cmd::Gen(g) => gen(g),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => {
            match cli.format {
                Format::Pretty => print!("{}", o.text),
                Format::Structured => println!("{}", serde_json::to_string_pretty(&o.json).expect("serializable")),
            }
            if o.positive {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
