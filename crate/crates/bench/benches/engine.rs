use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use relgraph::ingest::SynthParams;
use relgraph::lang::{compile, evaluate, parse};
use relgraph::learn::{train_regression, SgdConfig};
use relgraph_bench::{bio_graph, coloring_problem, regression_examples};

const PATHWAY_QUERY: &str =
    r#"patientDrug() ~> -drugsOfPatient ~> expressionsOfPatient filter(genePathways == "hsa00000") prop expression"#;

fn queries(c: &mut Criterion) {
    let g = bio_graph(&SynthParams::default());
    let typed = compile(PATHWAY_QUERY, g.schema()).unwrap();
    c.bench_function("parse pathway query", |b| b.iter(|| parse(black_box(PATHWAY_QUERY)).unwrap()));
    c.bench_function("evaluate pathway query", |b| b.iter(|| evaluate(black_box(&typed), &g).unwrap()));
    let within = compile(r#"genes("g0000") ~> -geneOfExpression neighborWithin(2)"#, g.schema()).unwrap();
    c.bench_function("neighborWithin(2) from a gene", |b| b.iter(|| evaluate(black_box(&within), &g).unwrap()));
}

fn loading(c: &mut Criterion) {
    let params = SynthParams { n_patients: 20, n_genes: 100, ..SynthParams::default() };
    c.bench_function("generate and load 20x100", |b| b.iter(|| bio_graph(black_box(&params))));
}

fn sgd(c: &mut Criterion) {
    let examples = regression_examples(200, 10, 1);
    c.bench_function("sgd 200x10, 100 epochs", |b| {
        b.iter(|| train_regression(black_box(&examples), 11, &SgdConfig::default()).unwrap())
    });
}

fn inference(c: &mut Criterion) {
    let exact = coloring_problem(12, 3, 2);
    c.bench_function("exact inference, 3^12", |b| b.iter(|| black_box(&exact).solve(0)));
    let local = coloring_problem(40, 3, 3);
    c.bench_function("local search, 3^40", |b| b.iter(|| black_box(&local).solve(0)));
}

criterion_group!(benches, queries, loading, sgd, inference);
criterion_main!(benches);
