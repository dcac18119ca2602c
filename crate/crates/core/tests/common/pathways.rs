//! The planted-pathway experiment on generated data.

use relgraph::builtin_sensors;
use relgraph::ingest::{drug_response_config, generate_synthetic_bio, load, split, SynthParams};
use relgraph::learn::{make_family, rank, LearnError};

pub struct PathwayRun {
    pub planted: String,
    /// Rank of the planted pathway, 0 being best.
    pub planted_rank: usize,
    pub planted_pearson: f64,
    /// Test Pearson of every other pathway, undefined ones as 0.
    pub others: Vec<f64>,
}

pub fn run_pathways(params: &SynthParams) -> PathwayRun {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_synthetic_bio(params, dir.path()).unwrap();
    let graph = load(&dir.path().join("schema.toml"), dir.path(), &builtin_sensors()).unwrap().graph;
    let cfg = drug_response_config(&manifest.pathways);
    let template = cfg.learner("drugResponse").unwrap();
    let mut family = make_family(&manifest.pathways, |p| {
        template.instantiate(graph.schema(), Some(p)).map_err(|e| LearnError::Config(e.to_string()))
    })
    .unwrap();
    let roots: Vec<_> = graph.refs(graph.schema().node_type("patientDrug").unwrap()).collect();
    let (train, test) = split(&roots, cfg.train_fraction, cfg.seed);
    family.train(&graph, &train).unwrap();
    let ranking = rank(family.test(&graph, &test).unwrap()).unwrap();
    let planted_rank = ranking.position(&manifest.planted).unwrap();
    let planted_pearson = ranking.entries[planted_rank].metric.unwrap_or(0.0);
    let others = ranking
        .entries
        .iter()
        .filter(|e| e.param != manifest.planted)
        .map(|e| e.metric.unwrap_or(0.0))
        .collect();
    PathwayRun { planted: manifest.planted, planted_rank, planted_pearson, others }
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}
