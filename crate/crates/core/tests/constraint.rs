mod common;

use std::collections::HashMap;
use std::sync::Arc;

use common::problems::*;
use common::*;
use proptest::prelude::*;
use relgraph::constraint::*;
use relgraph::learn::{LearnableSpec, Learner, SgdConfig};
use relgraph::lang::{render, Query};
use relgraph::{InstanceGraph, InstanceRef, Value};

#[test]
fn solver_matches_enumeration() {
    for seed in 0..200 {
        let p = random_problem(seed);
        if let Err(e) = solver_agrees(&p, seed) {
            panic!("seed {seed}: {e}");
        }
    }
}

#[test]
fn solver_is_deterministic() {
    for seed in 0..20 {
        let p = random_problem(seed);
        assert_eq!(p.solve(3), p.solve(3));
    }
}

#[test]
fn local_search_finds_feasible_states_in_large_spaces() {
    // 24 ternary variables; each must differ from its neighbour.
    let variables: Vec<Variable> = (0..24)
        .map(|i| Variable {
            name: format!("x{i}"),
            labels: vec!["a".into(), "b".into(), "c".into()],
            scores: vec![1.0, 0.5, 0.0],
        })
        .collect();
    let constraints = (0..23)
        .flat_map(|i| (0..3).map(move |l| Formula::Not(Box::new(Formula::And(vec![Formula::is(i, l), Formula::is(i + 1, l)])))))
        .collect();
    let p = InferenceProblem { variables, constraints };
    assert!(p.space_size() > relgraph::constraint::EXACT_LIMIT);
    let s = p.solve(11);
    assert!(s.feasible && !s.exact);
    assert!(p.is_feasible(&s.labels));
    // Alternating a/b is optimal.
    let best: Vec<usize> = (0..24).map(|i| i % 2).collect();
    assert!((s.objective - p.objective(&best)).abs() < 1e-9);
}

const PRED_ARG: &str =
    r#"forall x in { sentences() ~> sentencePhrases } (isPredicate on x is "True" ==> isArgument on x isNot "True")"#;

#[test]
fn constraint_text_round_trips() {
    let texts = [
        PRED_ARG,
        r#"not (a on s is "x") or b on s isNot "y""#,
        r#"(a on s is "x" and b on s is "y") ==> c on s is "z""#,
        r#"forall p in { sentences() ~> sentencePhrases filter(word == "run") } (forall q in { sentences() } (a on p is "1"))"#,
    ];
    for t in texts {
        let e = parse_constraint(t).unwrap();
        assert_eq!(parse_constraint(&e.to_string()).unwrap(), e, "{t}");
    }
}

#[test]
fn constraint_syntax_errors_are_positioned() {
    for (text, offset) in [
        ("a on x", 6),
        ("a on x is", 9),
        ("a on x is \"l\" and", 17),
        ("forall x in sentences() (a on x is \"1\")", 12),
        ("a on x is \"1\" )", 14),
    ] {
        match parse_constraint(text) {
            Err(ConstraintError::Syntax { offset: o, .. }) => assert_eq!(o, offset, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn constraint_builders_match_parsed_form() {
    let built = ConstraintExpr::forall(
        "x",
        Query::from_node("sentences").traverse("sentencePhrases"),
        ConstraintExpr::implies(
            ConstraintExpr::is("isPredicate", "x", "True"),
            ConstraintExpr::is_not("isArgument", "x", "True"),
        ),
    );
    assert_eq!(built, parse_constraint(PRED_ARG).unwrap());
    assert_eq!(built.classifiers(), ["isPredicate", "isArgument"]);
}

fn phrase_learner(g: &InstanceGraph, name: &str, label: &str) -> Learner {
    let spec = LearnableSpec::new(
        g.schema(),
        name,
        "phrases",
        &format!("phrases() prop {label}"),
        &["phrases() prop word"],
        None,
    )
    .unwrap();
    Learner::new(spec.with_sgd(SgdConfig::default()))
}

fn phrase_roots(g: &InstanceGraph) -> Vec<InstanceRef> {
    g.refs(g.schema().node_type("phrases").unwrap()).collect()
}

fn pred_arg(g: &InstanceGraph, train: bool) -> ConstrainedClassifier {
    let roots = phrase_roots(g);
    let mut p = phrase_learner(g, "isPredicate", "isPred");
    let mut a = phrase_learner(g, "isArgument", "isArg");
    if train {
        p.train(g, &roots).unwrap();
        a.train(g, &roots).unwrap();
    }
    ConstrainedClassifier::new(
        g.schema(),
        "sentences",
        "scope",
        "sentences() ~> sentencePhrases",
        vec![("isPredicate".into(), handle(p)), ("isArgument".into(), handle(a))],
        vec![parse_constraint(PRED_ARG).unwrap()],
    )
    .unwrap()
}

fn sentence(g: &InstanceGraph, id: &str) -> InstanceRef {
    g.find(g.schema().node_type("sentences").unwrap(), id).unwrap()
}

#[test]
fn joint_prediction_respects_constraints() {
    let g = phrase_graph();
    let cc = pred_arg(&g, true);
    for s in 0..12 {
        let scope = sentence(&g, &format!("s{s}"));
        let a = cc.joint_predict(&g, scope).unwrap();
        assert!(a.feasible);
        assert_eq!(a.entries.len(), 6);
        assert!(cc.evaluate_constraints(&g, scope, &a.to_map()).unwrap());
        for e in &a.entries {
            let (p, q) = (a.get("isPredicate", e.instance).unwrap(), a.get("isArgument", e.instance).unwrap());
            assert!(!(p == "True" && q == "True"));
        }
    }
}

#[test]
fn grounding_counts_variables_and_atoms() {
    let g = phrase_graph();
    let cc = pred_arg(&g, true);
    let (problem, keys) = cc.ground(&g, sentence(&g, "s0")).unwrap();
    assert_eq!(problem.variables.len(), 6);
    assert_eq!(keys.len(), 6);
    assert_eq!(problem.constraints.len(), 1);
}

#[test]
fn constraints_evaluate_against_given_labels() {
    let g = phrase_graph();
    let cc = pred_arg(&g, true);
    let scope = sentence(&g, "s0");
    let mut labels: HashMap<(String, InstanceRef), String> = HashMap::new();
    let phrases = g.schema().node_type("phrases").unwrap();
    for k in 0..3 {
        let p = g.find(phrases, &format!("s0_{k}")).unwrap();
        labels.insert(("isPredicate".into(), p), "True".into());
        labels.insert(("isArgument".into(), p), "False".into());
    }
    assert!(cc.evaluate_constraints(&g, scope, &labels).unwrap());
    let p = g.find(phrases, "s0_1").unwrap();
    labels.insert(("isArgument".into(), p), "True".into());
    assert!(!cc.evaluate_constraints(&g, scope, &labels).unwrap());
    labels.remove(&("isArgument".to_string(), p));
    assert!(matches!(cc.evaluate_constraints(&g, scope, &labels), Err(ConstraintError::Unassigned { .. })));
}

#[test]
fn empty_collections_are_vacuously_true() {
    let g = phrase_graph();
    let cc = ConstrainedClassifier::new(
        g.schema(),
        "sentences",
        "scope",
        "sentences() ~> sentencePhrases",
        vec![("isPredicate".into(), handle(phrase_learner(&g, "isPredicate", "isPred")))],
        vec![parse_constraint(
            r#"forall x in { sentences() ~> sentencePhrases filter(word == "zebra") } (isPredicate on x is "nope")"#,
        )
        .unwrap()],
    )
    .unwrap();
    assert!(cc.evaluate_constraints(&g, sentence(&g, "s0"), &HashMap::new()).unwrap());
}

#[test]
fn untrained_classifiers_are_reported() {
    let g = phrase_graph();
    let cc = pred_arg(&g, false);
    assert!(matches!(cc.joint_predict(&g, sentence(&g, "s0")), Err(ConstraintError::UntrainedClassifier(_))));
}

#[test]
fn compile_time_errors() {
    let g = phrase_graph();
    let h = handle(phrase_learner(&g, "isPredicate", "isPred"));
    let mk = |c: &str| {
        ConstrainedClassifier::new(
            g.schema(),
            "sentences",
            "scope",
            "sentences() ~> sentencePhrases",
            vec![("isPredicate".into(), h.clone())],
            vec![parse_constraint(c).unwrap()],
        )
    };
    assert!(matches!(mk(r#"other on scope is "x""#), Err(ConstraintError::UnknownClassifier(_))));
    assert!(matches!(mk(r#"isPredicate on y is "x""#), Err(ConstraintError::UnboundVariable(_))));
    let counts = LearnableSpec::new(g.schema(), "n", "sentences", "sentences() ~> sentencePhrases count", &[], None).unwrap();
    let r = ConstrainedClassifier::new(g.schema(), "sentences", "scope", "sentences()", vec![("n".into(), handle(Learner::new(counts)))], vec![]);
    assert!(matches!(r, Err(ConstraintError::NotClassification(_))));
}

#[test]
fn wrong_scope_type_is_rejected() {
    let g = phrase_graph();
    let cc = pred_arg(&g, true);
    let phrase = phrase_roots(&g)[0];
    assert!(matches!(cc.joint_predict(&g, phrase), Err(ConstraintError::ScopeMismatch { .. })));
}

#[test]
fn bound_property_follows_retraining() {
    let mut g = phrase_graph();
    let cc = Arc::new(pred_arg(&g, false));
    let prop = cc.bind(&mut g, "isPredicate", "jointPred", Some("phrases() ~> -sentencePhrases")).unwrap();
    let phrases = g.schema().node_type("phrases").unwrap();
    let eat = g.find(phrases, "s0_0").unwrap();
    assert!(g.property_value(eat, prop).is_err());
    let roots = phrase_roots(&g);
    for name in ["isPredicate", "isArgument"] {
        cc.classifier(name).unwrap().write().unwrap().train(&g, &roots).unwrap();
    }
    assert_eq!(g.property_value(eat, prop).unwrap(), Value::Text("True".into()));
    let dog = g.find(phrases, "s0_1").unwrap();
    assert_eq!(g.property_value(dog, prop).unwrap(), Value::Text("False".into()));
    let r = relgraph::lang::run(r#"phrases() filter(jointPred == "True") count"#, &g).unwrap();
    assert_eq!(render(&r, &g).trim(), "18");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shifting_scores_preserves_the_solution(seed in 0u64..10_000, shift in -50.0f64..50.0) {
        let p = random_problem(seed);
        let mut q = p.clone();
        for v in &mut q.variables {
            for s in &mut v.scores {
                *s += shift;
            }
        }
        let (a, b) = (p.solve(0), q.solve(0));
        prop_assert_eq!(a.feasible, b.feasible);
        prop_assert!((a.objective - b.objective).abs() < 1e-9);
    }

    #[test]
    fn solver_agrees_with_enumeration(seed in 1000u64..1_000_000) {
        let p = random_problem(seed);
        prop_assert!(solver_agrees(&p, seed).is_ok(), "{:?}", solver_agrees(&p, seed));
    }
}
