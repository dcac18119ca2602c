//! Constrained classifiers: base learners plus constraints, decoded
//! jointly per scope instance.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use super::expr::{ConstraintExpr, Relation};
use super::solve::{Formula, InferenceProblem, Variable};
use super::ConstraintError;
use crate::graph::{InstanceGraph, InstanceRef};
use crate::lang::{compile_pivoted, evaluate_at, QueryResult, TypedQuery};
use crate::learn::{Learner, Task};
use crate::schema::{DynamicProperty, NodeTypeId, PropertyId, Schema};
use crate::sensor::SensorError;
use crate::value::{Value, ValueKind};

/// Shared handle to a base classifier. Training through the handle is
/// visible to every constrained classifier holding it.
pub type ClassifierHandle = Arc<RwLock<Learner>>;

pub fn handle(learner: Learner) -> ClassifierHandle {
    Arc::new(RwLock::new(learner))
}

#[derive(Debug, Clone)]
enum Compiled {
    Atom { classifier: String, var: String, relation: Relation, label: String },
    Not(Box<Compiled>),
    And(Box<Compiled>, Box<Compiled>),
    Or(Box<Compiled>, Box<Compiled>),
    Implies(Box<Compiled>, Box<Compiled>),
    ForAll { var: String, collection: Box<TypedQuery>, body: Box<Compiled> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignedLabel {
    pub classifier: String,
    pub instance: InstanceRef,
    pub label: String,
}

/// Result of joint prediction over one scope instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub entries: Vec<AssignedLabel>,
    pub objective: f64,
    pub feasible: bool,
}

impl Assignment {
    pub fn get(&self, classifier: &str, instance: InstanceRef) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.classifier == classifier && e.instance == instance)
            .map(|e| e.label.as_str())
    }

    pub fn to_map(&self) -> HashMap<(String, InstanceRef), String> {
        self.entries.iter().map(|e| ((e.classifier.clone(), e.instance), e.label.clone())).collect()
    }
}

pub struct ConstrainedClassifier {
    scope: NodeTypeId,
    scope_var: String,
    decision: TypedQuery,
    classifiers: BTreeMap<String, ClassifierHandle>,
    constraints: Vec<Compiled>,
    sources: Vec<ConstraintExpr>,
    seed: u64,
}

impl std::fmt::Debug for ConstrainedClassifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConstrainedClassifier")
            .field("scope", &self.scope)
            .field("scope_var", &self.scope_var)
            .field("classifiers", &self.classifiers.keys().collect::<Vec<_>>())
            .field("constraints", &self.sources.iter().map(|c| c.to_string()).collect::<Vec<_>>())
            .finish()
    }
}

fn collection(q: &TypedQuery, graph: &InstanceGraph, at: InstanceRef) -> Result<Vec<InstanceRef>, ConstraintError> {
    match evaluate_at(q, graph, at)? {
        QueryResult::Instances(set) => Ok(set.members().to_vec()),
        _ => Err(ConstraintError::Collection { query: q.query.to_string(), reason: "does not yield instances".into() }),
    }
}

fn poisoned(name: &str) -> ConstraintError {
    ConstraintError::Poisoned(name.to_string())
}

impl ConstrainedClassifier {
    /// `decision` is a query pivoted at `scope` yielding the instances to
    /// label; `scope_var` names the scope instance inside constraints.
    pub fn new(
        schema: &Schema,
        scope: &str,
        scope_var: &str,
        decision: &str,
        classifiers: Vec<(String, ClassifierHandle)>,
        constraints: Vec<ConstraintExpr>,
    ) -> Result<Self, ConstraintError> {
        let scope_id = schema.require_node(scope).map_err(|e| ConstraintError::Graph(e.into()))?;
        let decision = pivoted(schema, scope_id, decision)?;
        let mut map = BTreeMap::new();
        for (name, h) in classifiers {
            {
                let l = h.read().map_err(|_| poisoned(&name))?;
                if l.spec().task != Task::Classification {
                    return Err(ConstraintError::NotClassification(name));
                }
            }
            map.insert(name, h);
        }
        let mut compiled = Vec::new();
        for c in &constraints {
            for name in c.classifiers() {
                if !map.contains_key(name) {
                    return Err(ConstraintError::UnknownClassifier(name.to_string()));
                }
            }
            compiled.push(compile(schema, scope_id, c, &mut vec![scope_var.to_string()])?);
        }
        Ok(Self {
            scope: scope_id,
            scope_var: scope_var.to_string(),
            decision,
            classifiers: map,
            constraints: compiled,
            sources: constraints,
            seed: 0,
        })
    }

    /// Seed for the local-search fallback.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn scope(&self) -> NodeTypeId {
        self.scope
    }

    pub fn constraints(&self) -> &[ConstraintExpr] {
        &self.sources
    }

    pub fn classifier(&self, name: &str) -> Option<&ClassifierHandle> {
        self.classifiers.get(name)
    }

    fn check_scope(&self, graph: &InstanceGraph, scope: InstanceRef) -> Result<(), ConstraintError> {
        if scope.node != self.scope {
            return Err(ConstraintError::ScopeMismatch {
                expected: graph.schema().node_name(self.scope).to_string(),
                found: graph.schema().node_name(scope.node).to_string(),
            });
        }
        Ok(())
    }

    /// Builds the inference problem for one scope instance. Variables come
    /// from the decision query, one per classifier whose root type matches,
    /// plus any pair an atom reaches outside that set.
    pub fn ground(
        &self,
        graph: &InstanceGraph,
        scope: InstanceRef,
    ) -> Result<(InferenceProblem, Vec<(String, InstanceRef)>), ConstraintError> {
        self.check_scope(graph, scope)?;
        let mut g = Grounder { cc: self, graph, problem: InferenceProblem::default(), keys: Vec::new(), index: HashMap::new() };
        for inst in collection(&self.decision, graph, scope)? {
            for (name, h) in &self.classifiers {
                let root = h.read().map_err(|_| poisoned(name))?.spec().root;
                if root == inst.node {
                    g.variable(name, inst)?;
                }
            }
        }
        for c in &self.constraints {
            let mut env = vec![(self.scope_var.clone(), scope)];
            let f = g.formula(c, &mut env)?;
            g.problem.constraints.push(f);
        }
        Ok((g.problem, g.keys))
    }

    /// Jointly labels every decision instance of `scope`.
    pub fn joint_predict(&self, graph: &InstanceGraph, scope: InstanceRef) -> Result<Assignment, ConstraintError> {
        let (problem, keys) = self.ground(graph, scope)?;
        let solution = problem.solve(self.seed);
        let entries = keys
            .into_iter()
            .zip(&solution.labels)
            .zip(&problem.variables)
            .map(|(((classifier, instance), &l), v)| AssignedLabel { classifier, instance, label: v.labels[l].clone() })
            .collect();
        Ok(Assignment { entries, objective: solution.objective, feasible: solution.feasible })
    }

    /// Truth of every constraint under a given labeling of the scope.
    pub fn evaluate_constraints(
        &self,
        graph: &InstanceGraph,
        scope: InstanceRef,
        labels: &HashMap<(String, InstanceRef), String>,
    ) -> Result<bool, ConstraintError> {
        self.check_scope(graph, scope)?;
        for c in &self.constraints {
            if !evaluate(c, graph, &mut vec![(self.scope_var.clone(), scope)], labels)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Exposes the jointly decoded labels of `classifier` as a property on
    /// its root type. `locate_scope` is a query pivoted at that type
    /// yielding its scope instance; it may be omitted when the root type
    /// is the scope type.
    pub fn bind(
        self: &Arc<Self>,
        graph: &mut InstanceGraph,
        classifier: &str,
        name: &str,
        locate_scope: Option<&str>,
    ) -> Result<PropertyId, ConstraintError> {
        let h = self.classifiers.get(classifier).ok_or_else(|| ConstraintError::UnknownClassifier(classifier.into()))?;
        let root = h.read().map_err(|_| poisoned(classifier))?.spec().root;
        let locate = match locate_scope {
            Some(text) => {
                let q = pivoted(graph.schema(), root, text)?;
                Some(Box::new(q))
            }
            None if root == self.scope => None,
            None => {
                return Err(ConstraintError::ScopeMismatch {
                    expected: graph.schema().node_name(self.scope).to_string(),
                    found: graph.schema().node_name(root).to_string(),
                })
            }
        };
        let prop = ConstrainedProperty { cc: Arc::clone(self), classifier: classifier.to_string(), locate };
        Ok(graph.add_dynamic_property(root, name, ValueKind::TEXT, Arc::new(prop))?)
    }
}

fn pivoted(schema: &Schema, at: NodeTypeId, text: &str) -> Result<TypedQuery, ConstraintError> {
    let q = compile_pivoted(text, schema)?;
    if q.source != at {
        return Err(ConstraintError::Collection {
            query: text.to_string(),
            reason: format!("must start at `{}`", schema.node_name(at)),
        });
    }
    Ok(q)
}

fn compile(
    schema: &Schema,
    scope: NodeTypeId,
    e: &ConstraintExpr,
    bound: &mut Vec<String>,
) -> Result<Compiled, ConstraintError> {
    Ok(match e {
        ConstraintExpr::Atom { classifier, var, relation, label } => {
            if !bound.contains(var) {
                return Err(ConstraintError::UnboundVariable(var.clone()));
            }
            Compiled::Atom { classifier: classifier.clone(), var: var.clone(), relation: *relation, label: label.clone() }
        }
        ConstraintExpr::Not(a) => Compiled::Not(Box::new(compile(schema, scope, a, bound)?)),
        ConstraintExpr::And(a, b) => {
            Compiled::And(Box::new(compile(schema, scope, a, bound)?), Box::new(compile(schema, scope, b, bound)?))
        }
        ConstraintExpr::Or(a, b) => {
            Compiled::Or(Box::new(compile(schema, scope, a, bound)?), Box::new(compile(schema, scope, b, bound)?))
        }
        ConstraintExpr::Implies(a, b) => {
            Compiled::Implies(Box::new(compile(schema, scope, a, bound)?), Box::new(compile(schema, scope, b, bound)?))
        }
        ConstraintExpr::ForAll { var, collection, body } => {
            let q = pivoted(schema, scope, &collection.to_string())?;
            bound.push(var.clone());
            let body = compile(schema, scope, body, bound);
            bound.pop();
            Compiled::ForAll { var: var.clone(), collection: Box::new(q), body: Box::new(body?) }
        }
    })
}

fn lookup(env: &[(String, InstanceRef)], var: &str) -> Result<InstanceRef, ConstraintError> {
    env.iter()
        .rev()
        .find(|(n, _)| n == var)
        .map(|(_, r)| *r)
        .ok_or_else(|| ConstraintError::UnboundVariable(var.to_string()))
}

fn scope_of(env: &[(String, InstanceRef)]) -> InstanceRef {
    env[0].1
}

fn evaluate(
    c: &Compiled,
    graph: &InstanceGraph,
    env: &mut Vec<(String, InstanceRef)>,
    labels: &HashMap<(String, InstanceRef), String>,
) -> Result<bool, ConstraintError> {
    Ok(match c {
        Compiled::Atom { classifier, var, relation, label } => {
            let at = lookup(env, var)?;
            let assigned = labels.get(&(classifier.clone(), at)).ok_or_else(|| ConstraintError::Unassigned {
                classifier: classifier.clone(),
                instance: graph.instance(at).id().to_string(),
            })?;
            (assigned == label) == (*relation == Relation::Is)
        }
        Compiled::Not(a) => !evaluate(a, graph, env, labels)?,
        Compiled::And(a, b) => evaluate(a, graph, env, labels)? && evaluate(b, graph, env, labels)?,
        Compiled::Or(a, b) => evaluate(a, graph, env, labels)? || evaluate(b, graph, env, labels)?,
        Compiled::Implies(a, b) => !evaluate(a, graph, env, labels)? || evaluate(b, graph, env, labels)?,
        Compiled::ForAll { var, collection: q, body } => {
            for member in collection(q, graph, scope_of(env))? {
                env.push((var.clone(), member));
                let r = evaluate(body, graph, env, labels);
                env.pop();
                if !r? {
                    return Ok(false);
                }
            }
            true
        }
    })
}

struct Grounder<'a> {
    cc: &'a ConstrainedClassifier,
    graph: &'a InstanceGraph,
    problem: InferenceProblem,
    keys: Vec<(String, InstanceRef)>,
    index: HashMap<(String, InstanceRef), usize>,
}

impl Grounder<'_> {
    fn variable(&mut self, classifier: &str, at: InstanceRef) -> Result<usize, ConstraintError> {
        let key = (classifier.to_string(), at);
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        let h = &self.cc.classifiers[classifier];
        let learner = h.read().map_err(|_| poisoned(classifier))?;
        if !learner.is_trained() {
            return Err(ConstraintError::UntrainedClassifier(classifier.to_string()));
        }
        if learner.spec().root != at.node {
            return Err(ConstraintError::ScopeMismatch {
                expected: self.graph.schema().node_name(learner.spec().root).to_string(),
                found: self.graph.schema().node_name(at.node).to_string(),
            });
        }
        let (labels, scores) = learner.label_scores(self.graph, at)?.into_iter().unzip();
        let i = self.problem.variables.len();
        self.problem.variables.push(Variable {
            name: format!("{classifier}({})", self.graph.instance(at).id()),
            labels,
            scores,
        });
        self.keys.push(key.clone());
        self.index.insert(key, i);
        Ok(i)
    }

    fn formula(&mut self, c: &Compiled, env: &mut Vec<(String, InstanceRef)>) -> Result<Formula, ConstraintError> {
        Ok(match c {
            Compiled::Atom { classifier, var, relation, label } => {
                let at = lookup(env, var)?;
                let v = self.variable(classifier, at)?;
                let is = *relation == Relation::Is;
                match self.problem.variables[v].labels.iter().position(|l| l == label) {
                    Some(l) => Formula::Atom { var: v, label: l, is },
                    None => Formula::Const(!is),
                }
            }
            Compiled::Not(a) => Formula::Not(Box::new(self.formula(a, env)?)),
            Compiled::And(a, b) => Formula::And(vec![self.formula(a, env)?, self.formula(b, env)?]),
            Compiled::Or(a, b) => Formula::Or(vec![self.formula(a, env)?, self.formula(b, env)?]),
            Compiled::Implies(a, b) => Formula::Implies(Box::new(self.formula(a, env)?), Box::new(self.formula(b, env)?)),
            Compiled::ForAll { var, collection: q, body } => {
                let mut parts = Vec::new();
                for member in collection(q, self.graph, scope_of(env))? {
                    env.push((var.clone(), member));
                    let f = self.formula(body, env);
                    env.pop();
                    parts.push(f?);
                }
                Formula::And(parts)
            }
        })
    }
}

struct ConstrainedProperty {
    cc: Arc<ConstrainedClassifier>,
    classifier: String,
    locate: Option<Box<TypedQuery>>,
}

fn sensor_error(name: &str, e: ConstraintError) -> SensorError {
    match e {
        ConstraintError::UntrainedClassifier(c) => SensorError::Untrained(c),
        other => SensorError::Failed { sensor: name.to_string(), reason: other.to_string() },
    }
}

impl DynamicProperty for ConstrainedProperty {
    fn describe(&self) -> String {
        format!("constrained({})", self.classifier)
    }

    fn compute(&self, graph: &InstanceGraph, at: InstanceRef) -> Result<Value, SensorError> {
        let name = self.describe();
        let scope = match &self.locate {
            None => at,
            Some(q) => *collection(q, graph, at)
                .map_err(|e| sensor_error(&name, e))?
                .first()
                .ok_or_else(|| SensorError::Failed {
                    sensor: name.clone(),
                    reason: format!("instance `{}` has no scope", graph.instance(at).id()),
                })?,
        };
        let assignment = self.cc.joint_predict(graph, scope).map_err(|e| sensor_error(&name, e))?;
        assignment.get(&self.classifier, at).map(Value::text).ok_or_else(|| SensorError::Failed {
            sensor: name,
            reason: format!("instance `{}` is not decided within its scope", graph.instance(at).id()),
        })
    }
}
