//! Queries over the three-patient graph, each paired with the same
//! computation written directly against the engine.

use relgraph::lang::QueryResult;
use relgraph::query::{self, Aggregate, Aggregated, CmpOp, NeighborOptions};
use relgraph::{Direction, EdgeTypeId, InstanceGraph, InstanceRef, InstanceSet, NodeTypeId, PropertyId, Value};

pub struct Direct<'g> {
    pub g: &'g InstanceGraph,
}

impl<'g> Direct<'g> {
    pub fn node(&self, n: &str) -> NodeTypeId {
        self.g.schema().node_type(n).unwrap()
    }

    pub fn edge(&self, e: &str) -> EdgeTypeId {
        self.g.schema().edge_type(e).unwrap()
    }

    pub fn prop(&self, n: &str, p: &str) -> PropertyId {
        self.g.schema().property_named(self.node(n), p).unwrap()
    }

    pub fn all(&self, n: &str) -> InstanceSet {
        query::all(self.g, self.node(n))
    }

    pub fn at(&self, n: &str, id: &str) -> InstanceRef {
        self.g.find(self.node(n), id).unwrap()
    }

    pub fn one(&self, n: &str, id: &str) -> InstanceSet {
        InstanceSet::single(self.at(n, id))
    }

    pub fn fwd(&self, s: &InstanceSet, e: &str) -> InstanceSet {
        query::traverse(self.g, s, self.edge(e), Direction::Forward).unwrap()
    }

    pub fn back(&self, s: &InstanceSet, e: &str) -> InstanceSet {
        query::traverse(self.g, s, self.edge(e), Direction::Reverse).unwrap()
    }

    pub fn filter(&self, s: &InstanceSet, n: &str, p: &str, op: CmpOp, v: Value) -> InstanceSet {
        query::filter(self.g, s, self.prop(n, p), op, &v).unwrap()
    }

    pub fn values(&self, s: &InstanceSet, n: &str, p: &str) -> QueryResult {
        QueryResult::Values(query::project(self.g, s, self.prop(n, p)).unwrap())
    }

    pub fn agg(&self, s: &InstanceSet, n: &str, p: &str, a: Aggregate) -> QueryResult {
        let seq = query::project(self.g, s, self.prop(n, p)).unwrap();
        match query::aggregate(&seq, &a).unwrap() {
            Aggregated::Scalar(v) => QueryResult::Scalar(v),
            Aggregated::Values(v) => QueryResult::Values(v),
        }
    }

    pub fn count(&self, s: &InstanceSet) -> QueryResult {
        QueryResult::Scalar(Value::Int(s.len() as i64))
    }

    pub fn restricted(&self, edges: &[&str]) -> NeighborOptions {
        NeighborOptions::restricted(edges.iter().map(|e| self.edge(e)).collect())
    }
}

pub type Oracle = fn(&Direct) -> QueryResult;

fn inst(s: InstanceSet) -> QueryResult {
    QueryResult::Instances(s)
}

/// Well-formed queries, together covering every production.
pub fn corpus() -> Vec<(&'static str, Oracle)> {
    use CmpOp::*;
    vec![
        ("patients()", |d| inst(d.all("patients"))),
        ("patients() count", |d| d.count(&d.all("patients"))),
        ("patients(\"p1\")", |d| inst(d.one("patients", "p1"))),
        ("patients() ~> expressionsOfPatient", |d| inst(d.fwd(&d.all("patients"), "expressionsOfPatient"))),
        ("patientDrug() ~> -drugsOfPatient", |d| inst(d.back(&d.all("patientDrug"), "drugsOfPatient"))),
        ("patients() prop age", |d| d.values(&d.all("patients"), "patients", "age")),
        ("patients() prop age sum", |d| d.agg(&d.all("patients"), "patients", "age", Aggregate::Sum)),
        ("patients() prop age product", |d| d.agg(&d.all("patients"), "patients", "age", Aggregate::Product)),
        ("patients() prop age max", |d| d.agg(&d.all("patients"), "patients", "age", Aggregate::Max)),
        ("patients() prop age min", |d| d.agg(&d.all("patients"), "patients", "age", Aggregate::Min)),
        ("patients() prop sex distinct", |d| d.agg(&d.all("patients"), "patients", "sex", Aggregate::Distinct)),
        ("patients() prop sex mkString(\",\")", |d| {
            d.agg(&d.all("patients"), "patients", "sex", Aggregate::MkString(",".into()))
        }),
        ("patients() filter(age > 35)", |d| inst(d.filter(&d.all("patients"), "patients", "age", Gt, Value::Int(35)))),
        ("patients() filter(age >= 40) prop age", |d| {
            let s = d.filter(&d.all("patients"), "patients", "age", Ge, Value::Int(40));
            d.values(&s, "patients", "age")
        }),
        ("patients() filter(age < 40)", |d| inst(d.filter(&d.all("patients"), "patients", "age", Lt, Value::Int(40)))),
        ("patients() filter(age <= 40) count", |d| {
            d.count(&d.filter(&d.all("patients"), "patients", "age", Le, Value::Int(40)))
        }),
        ("patients() filter(sex == \"F\")", |d| {
            inst(d.filter(&d.all("patients"), "patients", "sex", Eq, Value::text("F")))
        }),
        ("patients() filter(sex != \"F\")", |d| {
            inst(d.filter(&d.all("patients"), "patients", "sex", Ne, Value::text("F")))
        }),
        ("patients() filter(sex == \"F\\\"x\\n\")", |d| {
            inst(d.filter(&d.all("patients"), "patients", "sex", Eq, Value::text("F\"x\n")))
        }),
        ("patients() filter(smoker == true)", |d| {
            inst(d.filter(&d.all("patients"), "patients", "smoker", Eq, Value::Bool(true)))
        }),
        ("patients() filter(smoker != false) count", |d| {
            d.count(&d.filter(&d.all("patients"), "patients", "smoker", Ne, Value::Bool(false)))
        }),
        ("patients() filter(age > -1)", |d| inst(d.filter(&d.all("patients"), "patients", "age", Gt, Value::Int(-1)))),
        ("patientGene() filter(expression > -0.75)", |d| {
            inst(d.filter(&d.all("patientGene"), "patientGene", "expression", Gt, Value::Real(-0.75)))
        }),
        ("patientGene() filter(expression >= 2.5e-1) prop expression sum", |d| {
            let s = d.filter(&d.all("patientGene"), "patientGene", "expression", Ge, Value::Real(0.25));
            d.agg(&s, "patientGene", "expression", Aggregate::Sum)
        }),
        ("patientGene() filter(genePathways == \"hsa01040\")", |d| {
            inst(d.filter(&d.all("patientGene"), "patientGene", "genePathways", Eq, Value::text("hsa01040")))
        }),
        ("genes() prop KEGG", |d| d.values(&d.all("genes"), "genes", "KEGG")),
        ("patients(\"p2\") ~> expressionsOfPatient ~> geneOfExpression prop KEGG", |d| {
            let s = d.fwd(&d.fwd(&d.one("patients", "p2"), "expressionsOfPatient"), "geneOfExpression");
            d.values(&s, "genes", "KEGG")
        }),
        (
            "patientDrug() ~> -drugsOfPatient ~> expressionsOfPatient filter(genePathways == \"hsa01040\") prop expression",
            |d| {
                let s = d.fwd(&d.back(&d.all("patientDrug"), "drugsOfPatient"), "expressionsOfPatient");
                let s = d.filter(&s, "patientGene", "genePathways", Eq, Value::text("hsa01040"));
                d.values(&s, "patientGene", "expression")
            },
        ),
        ("patientGene() prop expression mkString(\" | \")", |d| {
            d.agg(&d.all("patientGene"), "patientGene", "expression", Aggregate::MkString(" | ".into()))
        }),
        ("genes(\"g1\") neighborAt(2)", |d| {
            inst(query::neighbor_at_set(d.g, &d.one("genes", "g1"), 2, &NeighborOptions::default()).unwrap())
        }),
        ("genes(\"g1\") neighborAt(2, [geneOfExpression])", |d| {
            let opts = d.restricted(&["geneOfExpression"]);
            inst(query::neighbor_at_set(d.g, &d.one("genes", "g1"), 2, &opts).unwrap())
        }),
        ("patients(\"p1\") neighborWithin(3)", |d| {
            inst(query::neighbor_within_set(d.g, &d.one("patients", "p1"), 3, &NeighborOptions::default()).unwrap())
        }),
        ("patients(\"p1\") neighborWithin(2, [expressionsOfPatient, geneOfExpression]) count", |d| {
            let opts = d.restricted(&["expressionsOfPatient", "geneOfExpression"]);
            d.count(&query::neighbor_within_set(d.g, &d.one("patients", "p1"), 2, &opts).unwrap())
        }),
        ("patients(\"p1\") path(\"genes:g3\")", |d| {
            let p = query::path(d.g, d.at("patients", "p1"), d.at("genes", "g3"), None, &NeighborOptions::default());
            QueryResult::Path(p.unwrap())
        }),
        ("patients(\"p1\") path(\"g3\", 1)", |d| {
            let p = query::path(d.g, d.at("patients", "p1"), d.at("genes", "g3"), Some(1), &NeighborOptions::default());
            QueryResult::Path(p.unwrap())
        }),
        ("patients(\"p1\") path(\"p2\", 4)", |d| {
            let p = query::path(d.g, d.at("patients", "p1"), d.at("patients", "p2"), Some(4), &NeighborOptions::default());
            QueryResult::Path(p.unwrap())
        }),
        ("patientGene() groupBy(genePathways, expression)", |d| {
            let (k, v) = (d.prop("patientGene", "genePathways"), d.prop("patientGene", "expression"));
            QueryResult::Groups(query::group_by(d.g, &d.all("patientGene"), k, v).unwrap())
        }),
        ("patientGene() groupBy(genePathways, expression) count", |d| {
            let (k, v) = (d.prop("patientGene", "genePathways"), d.prop("patientGene", "expression"));
            QueryResult::Scalar(Value::Int(query::group_by(d.g, &d.all("patientGene"), k, v).unwrap().len() as i64))
        }),
    ]
}

/// Inputs that must be rejected, with the 1-based column the error must
/// point at. Type errors point at the start of the offending stage.
pub fn malformed() -> Vec<(&'static str, usize)> {
    vec![
        ("", 1),
        ("patients(", 10),
        ("patients() ~>", 14),
        ("patients() ~> bogus", 12),
        ("patients() filter(age >> 3)", 24),
        ("patients() filter(age == )", 26),
        ("patients() prop", 16),
        ("patients() neighborAt(x)", 23),
        ("patients() \"str\"", 12),
        ("nosuch()", 1),
        ("patients() filter(sex > 3)", 12),
        ("patients() prop nosuch", 12),
        ("patients() filter(age == \"open", 26),
        ("patients() groupBy(sex)", 23),
        ("patients() path(\"p2\")", 12),
        ("patients() @", 12),
        ("patients() prop age count count", 27),
    ]
}
