//! Random constraint problems and an enumerating oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relgraph::constraint::{Formula, InferenceProblem, Variable};

fn random_formula(rng: &mut ChaCha8Rng, vars: &[usize], depth: u32) -> Formula {
    let atom = |rng: &mut ChaCha8Rng| {
        let v = rng.random_range(0..vars.len());
        let l = rng.random_range(0..vars[v]);
        if rng.random_bool(0.5) { Formula::is(v, l) } else { Formula::is_not(v, l) }
    };
    if depth == 0 || rng.random_bool(0.3) {
        return atom(rng);
    }
    match rng.random_range(0..4) {
        0 => Formula::Not(Box::new(random_formula(rng, vars, depth - 1))),
        1 => Formula::And((0..rng.random_range(2..4)).map(|_| random_formula(rng, vars, depth - 1)).collect()),
        2 => Formula::Or((0..rng.random_range(2..4)).map(|_| random_formula(rng, vars, depth - 1)).collect()),
        _ => Formula::Implies(
            Box::new(random_formula(rng, vars, depth - 1)),
            Box::new(random_formula(rng, vars, depth - 1)),
        ),
    }
}

/// Up to 12 variables with 1 to 3 labels each and 1 to 5 random
/// constraints. Most instances are made satisfiable by negating every
/// constraint that a hidden assignment violates.
pub fn random_problem(seed: u64) -> InferenceProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=12);
    let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(1..=3)).collect();
    let variables = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| Variable {
            name: format!("x{i}"),
            labels: (0..n).map(|l| format!("L{l}")).collect(),
            scores: (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
        })
        .collect();
    let hidden: Vec<usize> = sizes.iter().map(|&n| rng.random_range(0..n)).collect();
    let plant = rng.random_bool(0.85);
    let constraints = (0..rng.random_range(1..=5))
        .map(|_| {
            let f = random_formula(&mut rng, &sizes, 3);
            if plant && !f.eval(&hidden) { Formula::Not(Box::new(f)) } else { f }
        })
        .collect();
    InferenceProblem { variables, constraints }
}

fn log_prob(scores: &[f64], l: usize) -> f64 {
    let z: f64 = scores.iter().map(|s| s.exp()).sum();
    (scores[l].exp() / z).ln()
}

/// Every joint assignment, in mixed-radix order.
pub fn assignments(problem: &InferenceProblem) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for v in &problem.variables {
        out = out
            .into_iter()
            .flat_map(|a| {
                (0..v.labels.len()).map(move |l| {
                    let mut a = a.clone();
                    a.push(l);
                    a
                })
            })
            .collect();
    }
    out
}

pub fn brute_objective(problem: &InferenceProblem, labels: &[usize]) -> f64 {
    problem.variables.iter().zip(labels).map(|(v, &l)| log_prob(&v.scores, l)).sum()
}

/// Best feasible objective by enumeration, `None` when infeasible.
pub fn brute_force(problem: &InferenceProblem) -> Option<f64> {
    assignments(problem)
        .into_iter()
        .filter(|a| problem.constraints.iter().all(|c| c.eval(a)))
        .map(|a| brute_objective(problem, &a))
        .max_by(f64::total_cmp)
}

/// Solver result agrees with enumeration: same optimum when feasible,
/// and an infeasible claim only when nothing is feasible.
pub fn solver_agrees(problem: &InferenceProblem, seed: u64) -> Result<(), String> {
    let s = problem.solve(seed);
    let reported_feasible = problem.constraints.iter().all(|c| c.eval(&s.labels));
    match brute_force(problem) {
        Some(best) => {
            if !s.feasible || !reported_feasible {
                return Err(format!("feasible problem reported infeasible: {s:?}"));
            }
            let own = brute_objective(problem, &s.labels);
            if (own - best).abs() > 1e-9 || (s.objective - best).abs() > 1e-9 {
                return Err(format!("objective {} (recomputed {own}) vs optimum {best}", s.objective));
            }
        }
        None => {
            if s.feasible {
                return Err("infeasible problem reported feasible".into());
            }
        }
    }
    Ok(())
}
