//! Joint assignment over grounded constraints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Search spaces up to this many joint assignments are solved exactly.
pub const EXACT_LIMIT: u128 = 1 << 20;

/// Restarts for local search, the first of which starts from the argmax.
pub const RESTARTS: usize = 50;

/// A ground formula over decision variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Const(bool),
    /// Variable `var` takes (or, with `is == false`, avoids) label `label`.
    Atom { var: usize, label: usize, is: bool },
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn is(var: usize, label: usize) -> Self {
        Formula::Atom { var, label, is: true }
    }

    pub fn is_not(var: usize, label: usize) -> Self {
        Formula::Atom { var, label, is: false }
    }

    pub fn eval(&self, assignment: &[usize]) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Atom { var, label, is } => (assignment[*var] == *label) == *is,
            Formula::Not(f) => !f.eval(assignment),
            Formula::And(fs) => fs.iter().all(|f| f.eval(assignment)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(assignment)),
            Formula::Implies(a, b) => !a.eval(assignment) || b.eval(assignment),
        }
    }

    /// Three-valued evaluation where only the first `bound` variables are
    /// assigned.
    fn eval_partial(&self, assignment: &[usize], bound: usize) -> Option<bool> {
        match self {
            Formula::Const(b) => Some(*b),
            Formula::Atom { var, label, is } => {
                (*var < bound).then(|| (assignment[*var] == *label) == *is)
            }
            Formula::Not(f) => f.eval_partial(assignment, bound).map(|b| !b),
            Formula::And(fs) => {
                let mut all = Some(true);
                for f in fs {
                    match f.eval_partial(assignment, bound) {
                        Some(false) => return Some(false),
                        None => all = None,
                        Some(true) => {}
                    }
                }
                all
            }
            Formula::Or(fs) => {
                let mut any = Some(false);
                for f in fs {
                    match f.eval_partial(assignment, bound) {
                        Some(true) => return Some(true),
                        None => any = None,
                        Some(false) => {}
                    }
                }
                any
            }
            Formula::Implies(a, b) => match (a.eval_partial(assignment, bound), b.eval_partial(assignment, bound)) {
                (Some(false), _) | (_, Some(true)) => Some(true),
                (Some(true), Some(false)) => Some(false),
                _ => None,
            },
        }
    }

    /// Largest variable index mentioned, if any.
    fn max_var(&self) -> Option<usize> {
        match self {
            Formula::Const(_) => None,
            Formula::Atom { var, .. } => Some(*var),
            Formula::Not(f) => f.max_var(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().filter_map(Formula::max_var).max(),
            Formula::Implies(a, b) => a.max_var().max(b.max_var()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub labels: Vec<String>,
    /// Raw classifier scores, one per label.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InferenceProblem {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Formula>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Label index per variable.
    pub labels: Vec<usize>,
    /// Sum of log-softmax scores of the chosen labels.
    pub objective: f64,
    /// False when no assignment satisfying every constraint was found; the
    /// labels are then the unconstrained argmax.
    pub feasible: bool,
    pub exact: bool,
}

/// Per-label log-softmax of raw scores.
pub fn log_softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scores.iter().map(|s| s - lse).collect()
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

impl InferenceProblem {
    /// Number of joint assignments, saturating.
    pub fn space_size(&self) -> u128 {
        self.variables.iter().fold(1u128, |acc, v| acc.saturating_mul(v.labels.len() as u128))
    }

    fn log_probs(&self) -> Vec<Vec<f64>> {
        self.variables.iter().map(|v| log_softmax(&v.scores)).collect()
    }

    pub fn objective(&self, labels: &[usize]) -> f64 {
        self.log_probs().iter().zip(labels).map(|(lp, &l)| lp[l]).sum()
    }

    pub fn violations(&self, labels: &[usize]) -> usize {
        self.constraints.iter().filter(|c| !c.eval(labels)).count()
    }

    pub fn is_feasible(&self, labels: &[usize]) -> bool {
        self.violations(labels) == 0
    }

    /// Exact search when the space is small enough, seeded local search
    /// otherwise. Variables without labels are not allowed.
    pub fn solve(&self, seed: u64) -> Solution {
        assert!(self.variables.iter().all(|v| !v.labels.is_empty() && v.labels.len() == v.scores.len()));
        let lp = self.log_probs();
        let fallback: Vec<usize> = lp.iter().map(|l| argmax(l)).collect();
        let exact = self.space_size() <= EXACT_LIMIT;
        let found = if exact { self.branch_and_bound(&lp) } else { self.local_search(&lp, &fallback, seed) };
        match found {
            Some(labels) => Solution { objective: self.objective(&labels), labels, feasible: true, exact },
            None => Solution { objective: self.objective(&fallback), labels: fallback, feasible: false, exact },
        }
    }

    /// Depth-first search in variable order with constraint pruning and an
    /// optimistic bound from per-variable maxima.
    fn branch_and_bound(&self, lp: &[Vec<f64>]) -> Option<Vec<usize>> {
        let n = self.variables.len();
        // Constraints become decidable once their last variable is bound.
        let mut checks: Vec<Vec<&Formula>> = vec![Vec::new(); n + 1];
        for c in &self.constraints {
            checks[c.max_var().map_or(0, |v| v + 1)].push(c);
        }
        if checks[0].iter().any(|c| !c.eval(&[])) {
            return None;
        }
        let mut suffix = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + lp[i].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        }
        let orders: Vec<Vec<usize>> = lp
            .iter()
            .map(|l| {
                let mut o: Vec<usize> = (0..l.len()).collect();
                o.sort_by(|&a, &b| l[b].total_cmp(&l[a]).then(a.cmp(&b)));
                o
            })
            .collect();

        struct Search<'a> {
            lp: &'a [Vec<f64>],
            checks: Vec<Vec<&'a Formula>>,
            suffix: Vec<f64>,
            orders: Vec<Vec<usize>>,
            current: Vec<usize>,
            best: Option<(f64, Vec<usize>)>,
        }

        impl Search<'_> {
            fn go(&mut self, i: usize, score: f64) {
                if let Some((b, _)) = &self.best {
                    if score + self.suffix[i] <= *b {
                        return;
                    }
                }
                if i == self.current.len() {
                    self.best = Some((score, self.current.clone()));
                    return;
                }
                for k in 0..self.orders[i].len() {
                    let label = self.orders[i][k];
                    self.current[i] = label;
                    let ok = self.checks[i + 1].iter().all(|c| c.eval_partial(&self.current, i + 1) != Some(false));
                    if ok {
                        self.go(i + 1, score + self.lp[i][label]);
                    }
                }
            }
        }

        let mut s = Search { lp, checks, suffix, orders, current: vec![0; n], best: None };
        s.go(0, 0.0);
        s.best.map(|(_, labels)| labels)
    }

    /// First-improvement hill climbing on (violations, -objective), from
    /// the argmax and from random starts.
    fn local_search(&self, lp: &[Vec<f64>], start: &[usize], seed: u64) -> Option<Vec<usize>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: Option<(f64, Vec<usize>)> = None;
        for restart in 0..RESTARTS {
            let mut x: Vec<usize> = if restart == 0 {
                start.to_vec()
            } else {
                self.variables.iter().map(|v| rng.random_range(0..v.labels.len())).collect()
            };
            let mut viol = self.violations(&x);
            let mut obj: f64 = lp.iter().zip(&x).map(|(l, &k)| l[k]).sum();
            loop {
                let mut improved = false;
                for i in 0..x.len() {
                    for k in 0..lp[i].len() {
                        if k == x[i] {
                            continue;
                        }
                        let prev = x[i];
                        x[i] = k;
                        let v = self.violations(&x);
                        let o = obj - lp[i][prev] + lp[i][k];
                        if v < viol || (v == viol && o > obj + 1e-12) {
                            viol = v;
                            obj = o;
                            improved = true;
                        } else {
                            x[i] = prev;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            if viol == 0 {
                let obj: f64 = lp.iter().zip(&x).map(|(l, &k)| l[k]).sum();
                if best.as_ref().is_none_or(|(b, _)| obj > *b) {
                    best = Some((obj, x));
                }
            }
        }
        best.map(|(_, x)| x)
    }
}
