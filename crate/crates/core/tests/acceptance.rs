//! One PASS/FAIL line per acceptance criterion, written straight to stderr
//! so that it shows up without `--nocapture`.

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

use common::corpus::{corpus, malformed, Direct};
use common::oracles::*;
use common::pathways::{median, run_pathways};
use common::problems::{random_problem, solver_agrees};
use common::walks::fw_mismatch;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use relgraph::graph::NodeInstance;
use relgraph::lang::{compile, parse, run, LangError};
use relgraph::learn::{
    logistic_loss, logistic_loss_gradient, pearson, regression_report, squared_loss, squared_loss_gradient,
    FeatureVector,
};
use relgraph::query::traverse;
use relgraph::{Direction, InstanceGraph, InstanceSet};

type Outcome = Result<String, String>;

struct Criterion {
    number: u32,
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn walks_match_floyd_warshall() -> Outcome {
    for seed in 0..100u64 {
        let rg = random_graph(seed);
        let all: Vec<usize> = (0..rg.adj.len()).collect();
        if let Some(m) = fw_mismatch(&rg, &all, false) {
            return Err(format!("graph {seed}: {m}"));
        }
        let first = [0usize];
        if let Some(m) = fw_mismatch(&rg, &first, seed % 2 == 0) {
            return Err(format!("graph {seed}, restricted: {m}"));
        }
    }
    Ok("100 graphs".into())
}

/// Pairs satisfying the key equality, straight from the rows.
fn brute_join(rows: &[NodeInstance], other: &[NodeInstance], left: &str, right: &str) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for s in rows {
        for d in other {
            if s.field(left).is_some() && s.field(left) == d.field(right) {
                out.insert((s.id().to_string(), d.id().to_string()));
            }
        }
    }
    out
}

fn traversal_pairs(g: &InstanceGraph, edge: &str) -> BTreeSet<(String, String)> {
    let id = g.schema().edge_type(edge).unwrap();
    let e = g.schema().edge(id);
    let mut fwd = BTreeSet::new();
    for s in g.refs(e.source) {
        for d in traverse(g, &InstanceSet::single(s), id, Direction::Forward).unwrap().members() {
            fwd.insert((g.instance(s).id().to_string(), g.instance(*d).id().to_string()));
        }
    }
    let mut rev = BTreeSet::new();
    for d in g.refs(e.destination) {
        for s in traverse(g, &InstanceSet::single(d), id, Direction::Reverse).unwrap().members() {
            rev.insert((g.instance(*s).id().to_string(), g.instance(d).id().to_string()));
        }
    }
    assert_eq!(fwd, rev, "reverse traversal of {edge}");
    fwd
}

fn load_order_is_irrelevant() -> Outcome {
    let schema = key_eq_schema();
    let mut edges = 0;
    for seed in 0..20 {
        let batches = key_eq_batches(seed);
        let rows = |node: &str| -> Vec<NodeInstance> {
            batches.iter().flatten().filter(|(n, _)| *n == node).flat_map(|(_, r)| r.clone()).collect()
        };
        let want_ab = brute_join(&rows("a"), &rows("b"), "k", "k");
        let want_bc = brute_join(&rows("b"), &rows("c"), "ref", "id");
        edges += want_ab.len() + want_bc.len();
        for order in &PERMUTATIONS {
            let g = load_batches(&schema, &batches, order);
            ensure(traversal_pairs(&g, "ab") == want_ab, || format!("seed {seed} order {order:?}: ab"))?;
            ensure(traversal_pairs(&g, "bc") == want_bc, || format!("seed {seed} order {order:?}: bc"))?;
        }
    }
    Ok(format!("20 data sets x 6 orders, {edges} edges in total"))
}

fn query_language() -> Outcome {
    let g = bio_graph();
    let d = Direct { g: &g };
    let queries = corpus();
    ensure(queries.len() >= 30, || format!("corpus has {} queries", queries.len()))?;
    for (text, oracle) in &queries {
        let q = parse(text).map_err(|e| format!("{text}: {e}"))?;
        ensure(parse(&q.to_string()).as_ref() == Ok(&q), || format!("{text} does not round-trip"))?;
        let got = run(text, &g).map_err(|e| format!("{text}: {e}"))?;
        ensure(got == oracle(&d), || format!("{text}: engine disagrees"))?;
    }
    let bad = malformed();
    ensure(bad.len() >= 10, || format!("{} malformed inputs", bad.len()))?;
    for (text, column) in &bad {
        let span = match compile(text, g.schema()) {
            Err(LangError::Parse(e)) => e.span,
            Err(LangError::Plan(e)) => e.span,
            other => return Err(format!("{text}: {other:?}")),
        };
        ensure(span.line == 1 && span.column == *column, || format!("{text}: at {}:{}", span.line, span.column))?;
    }
    Ok(format!("{} queries, {} malformed", queries.len(), bad.len()))
}

fn planted_pathway() -> Outcome {
    let runs: Vec<_> = (0..100u64)
        .into_par_iter()
        .map(|seed| run_pathways(&relgraph::ingest::SynthParams { seed, ..Default::default() }))
        .collect();
    let first = runs.iter().filter(|r| r.planted_rank == 0).count();
    let mut planted: Vec<f64> = runs.iter().map(|r| r.planted_pearson).collect();
    let mut others: Vec<f64> = runs.iter().flat_map(|r| r.others.iter().copied()).collect();
    let (mp, mo) = (median(&mut planted), median(&mut others));
    let detail = format!("first in {first}/100, median planted r {mp:.3}, median other r {mo:.3}");
    ensure(first >= 95 && mp >= 0.9 && mo <= 0.3, || detail.clone())?;
    Ok(detail)
}

fn sgd_and_gradients() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let err = sgd_vs_least_squares(seed, 1 + seed as usize);
        worst = worst.max(err);
        ensure(err <= 1e-2, || format!("d={}: |w - w*| = {err:e}", 1 + seed))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_grad = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(1..=10);
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = FeatureVector::from_pairs((0..d).map(|i| (i, rng.random_range(-2.0..2.0))));
        let y = rng.random_range(-3.0..3.0);
        let e1 = relative_error(&squared_loss_gradient(&w, &x, y), &numeric_gradient(|w| squared_loss(w, &x, y), &w, 1e-5));
        let b = f64::from(rng.random_bool(0.5));
        let e2 = relative_error(&logistic_loss_gradient(&w, &x, b), &numeric_gradient(|w| logistic_loss(w, &x, b), &w, 1e-5));
        worst_grad = worst_grad.max(e1).max(e2);
    }
    ensure(worst_grad <= 1e-5, || format!("gradient rel err {worst_grad:e}"))?;
    Ok(format!("max |w - w*| {worst:.1e}, max gradient rel err {worst_grad:.1e}"))
}

fn metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..100 {
        let n = rng.random_range(2..60);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let r = regression_report(&y, &p).map_err(|e| e.to_string())?;
        let s = ssr(&y, &p);
        ensure((r.ssr - s).abs() <= 1e-9 * s.max(1.0), || format!("pair {i}: ssr {} vs {s}", r.ssr))?;
        ensure((r.mse - s / n as f64).abs() <= 1e-9 * r.mse.max(1.0), || format!("pair {i}: mse"))?;
        let want = pearson_from_sums(&y, &p);
        ensure(r.pearson.is_some_and(|v| (v - want).abs() <= 1e-9), || format!("pair {i}: pearson {:?} vs {want}", r.pearson))?;
    }
    let y: Vec<f64> = (0..30).map(|_| rng.random_range(-5.0..5.0)).collect();
    let up: Vec<f64> = y.iter().map(|v| 2.0 * v + 1.0).collect();
    let down: Vec<f64> = y.iter().map(|v| -v).collect();
    ensure(pearson(&y, &up).is_some_and(|r| (r - 1.0).abs() <= 1e-12), || "pearson(y, 2y+1)".into())?;
    ensure(pearson(&y, &down).is_some_and(|r| (r + 1.0).abs() <= 1e-12), || "pearson(y, -y)".into())?;
    Ok("100 pairs".into())
}

fn constrained_inference() -> Outcome {
    let mut infeasible = 0;
    for seed in 0..200u64 {
        let p = random_problem(seed);
        solver_agrees(&p, seed).map_err(|e| format!("instance {seed}: {e}"))?;
        if !p.solve(seed).feasible {
            infeasible += 1;
        }
    }
    Ok(format!("200 instances, {infeasible} infeasible"))
}

fn graph_invariants() -> Outcome {
    for seed in 0..100u64 {
        ensure(reverse_consistent(&random_graph(seed).graph), || format!("random graph {seed}"))?;
    }
    ensure(reverse_consistent(&bio_graph()) && reverse_consistent(&phrase_graph()), || "fixture graph".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut g = InstanceGraph::new(sentence_schema());
    let sentences: Vec<String> = (0..50).map(|_| random_sentence(&mut rng)).collect();
    let rows = sentences.iter().enumerate().map(|(i, s)| NodeInstance::new(format!("s{i}")).with("text", s.as_str())).collect();
    g.populate_named("sentences", rows).map_err(|e| e.to_string())?;
    ensure(reverse_consistent(&g), || "sentence graph".into())?;
    for (i, s) in sentences.iter().enumerate() {
        let q = format!("sentences(\"s{i}\") ~> sentenceTokens count");
        let got = run(&q, &g).map_err(|e| e.to_string())?;
        let want = relgraph::lang::QueryResult::Scalar(relgraph::Value::Int(s.split_whitespace().count() as i64));
        ensure(got == want, || format!("sentence {i}: {got:?} vs {want:?}"))?;
    }
    Ok("100 random graphs, 50 sentences".into())
}

const CRITERIA: [Criterion; 8] = [
    Criterion { number: 1, name: "neighborhoods and paths match Floyd-Warshall", budget: Some(Duration::from_secs(5)), check: walks_match_floyd_warshall },
    Criterion { number: 2, name: "key-equality edges are independent of load order", budget: None, check: load_order_is_irrelevant },
    Criterion { number: 3, name: "query language round-trips and matches the engine", budget: None, check: query_language },
    Criterion { number: 4, name: "planted pathway is ranked first", budget: Some(Duration::from_secs(60)), check: planted_pathway },
    Criterion { number: 5, name: "SGD reaches least squares; gradients match", budget: None, check: sgd_and_gradients },
    Criterion { number: 6, name: "regression metrics match their definitions", budget: None, check: metrics },
    Criterion { number: 7, name: "joint inference matches exhaustive search", budget: None, check: constrained_inference },
    Criterion { number: 8, name: "edges are reverse-consistent; tokens match words", budget: None, check: graph_invariants },
];

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    let mut report = std::io::stderr().lock();
    for c in &CRITERIA {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(d), Some(b)) if elapsed > b => Err(format!("{d}; took {elapsed:.2?}, budget {b:?}")),
            (o, _) => o,
        };
        match &outcome {
            Ok(detail) => writeln!(report, "PASS {}. {} ({detail}; {elapsed:.2?})", c.number, c.name).unwrap(),
            Err(why) => {
                writeln!(report, "FAIL {}. {} ({why}; {elapsed:.2?})", c.number, c.name).unwrap();
                failed.push(c.number);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
