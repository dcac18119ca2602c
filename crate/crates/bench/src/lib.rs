//! Inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relgraph::constraint::{Formula, InferenceProblem, Variable};
use relgraph::ingest::{generate_synthetic_bio, load, SynthParams};
use relgraph::learn::FeatureVector;
use relgraph::{builtin_sensors, InstanceGraph};

/// The synthetic patient/gene graph for `params`.
pub fn bio_graph(params: &SynthParams) -> InstanceGraph {
    let dir = tempfile::tempdir().expect("temporary directory");
    generate_synthetic_bio(params, dir.path()).expect("generated data");
    load(&dir.path().join("schema.toml"), dir.path(), &builtin_sensors()).expect("generated data loads").graph
}

/// Noiseless linear examples with a bias column at index 0.
pub fn regression_examples(n: usize, d: usize, seed: u64) -> Vec<(FeatureVector, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect();
    (0..n)
        .map(|_| {
            let mut x = vec![1.0];
            x.extend((0..d).map(|_| rng.random_range(-1.0..1.0)));
            let y = x.iter().zip(&w).map(|(a, b)| a * b).sum();
            (FeatureVector::from_pairs(x.into_iter().enumerate()), y)
        })
        .collect()
}

/// `n` variables over `labels` labels where neighbours must differ.
pub fn coloring_problem(n: usize, labels: usize, seed: u64) -> InferenceProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let variables = (0..n)
        .map(|i| Variable {
            name: format!("x{i}"),
            labels: (0..labels).map(|l| l.to_string()).collect(),
            scores: (0..labels).map(|_| rng.random_range(-2.0..2.0)).collect(),
        })
        .collect();
    let constraints = (0..n.saturating_sub(1))
        .flat_map(|i| {
            (0..labels).map(move |l| Formula::Not(Box::new(Formula::And(vec![Formula::is(i, l), Formula::is(i + 1, l)]))))
        })
        .collect();
    InferenceProblem { variables, constraints }
}
