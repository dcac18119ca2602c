#![allow(dead_code)]

pub mod corpus;
pub mod oracles;
pub mod problems;
pub mod pathways;
pub mod walks;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relgraph::graph::NodeInstance;
use relgraph::schema::SchemaBuilder;
use relgraph::sensor::{MatchingSensor, Sensor};
use relgraph::{builtin_sensors, InstanceGraph, Value};

/// Matches when the destination id is listed in a text-list attribute of
/// the source.
pub struct InList(pub String);

impl MatchingSensor for InList {
    fn describe(&self) -> String {
        format!("in_list({})", self.0)
    }

    fn matches(&self, source: &NodeInstance, destination: &NodeInstance) -> bool {
        match source.attribute(&self.0) {
            Some(Value::List(l)) => l.items().iter().any(|v| v.as_str() == Some(destination.id())),
            _ => false,
        }
    }
}

pub struct RandomGraph {
    pub graph: InstanceGraph,
    pub n: usize,
    /// `adj[e][i][j]`: an edge of type `e` from node `i` to node `j`.
    pub adj: Vec<Vec<Vec<bool>>>,
}

pub fn node_id(i: usize) -> String {
    format!("n{i}")
}

/// One node type `v`, up to three edge types `e0..e2` over it.
pub fn random_graph(seed: u64) -> RandomGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=30);
    let types = rng.random_range(1..=3);
    let density = rng.random_range(0.1..=0.4);
    let mut b = SchemaBuilder::new();
    b.declare_node("v").unwrap();
    for e in 0..types {
        let name = format!("e{e}");
        b.declare_edge(&name, "v", "v").unwrap();
        b.add_sensor(&name, Sensor::Matching(Arc::new(InList(name.clone())))).unwrap();
    }
    let schema = b.freeze().unwrap();
    let mut adj = vec![vec![vec![false; n]; n]; types];
    let mut instances = Vec::new();
    for i in 0..n {
        let mut inst = NodeInstance::new(node_id(i));
        for (e, a) in adj.iter_mut().enumerate() {
            let mut out = Vec::new();
            for (j, cell) in a[i].iter_mut().enumerate() {
                if i != j && rng.random_bool(density) {
                    *cell = true;
                    out.push(node_id(j));
                }
            }
            inst.set(format!("e{e}"), Value::text_list(out));
        }
        instances.push(inst);
    }
    let mut graph = InstanceGraph::new(schema);
    graph.populate_named("v", instances).unwrap();
    graph.seal();
    RandomGraph { graph, n, adj }
}

pub const INF: usize = usize::MAX / 4;

/// All-pairs shortest path lengths over the chosen edge types, treating
/// edges as undirected unless `directed`.
pub fn floyd_warshall(adj: &[Vec<Vec<bool>>], types: &[usize], directed: bool) -> Vec<Vec<usize>> {
    let n = adj.first().map_or(0, |a| a.len());
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &e in types {
        for i in 0..n {
            for j in 0..n {
                if adj[e][i][j] && i != j {
                    d[i][j] = 1;
                    if !directed {
                        d[j][i] = 1;
                    }
                }
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub const BIO_SCHEMA: &str = r#"
[[node]]
name = "genes"

[[node]]
name = "patients"

[[node]]
name = "patientGene"

[[node]]
name = "patientDrug"

[[edge]]
name = "expressionsOfPatient"
source = "patients"
destination = "patientGene"
sensors = ["key_eq(id, pid)"]

[[edge]]
name = "geneOfExpression"
source = "patientGene"
destination = "genes"
sensors = ["key_eq(gene, id)"]

[[edge]]
name = "drugsOfPatient"
source = "patients"
destination = "patientDrug"
sensors = ["key_eq(id, pid)"]

[[property]]
node = "genes"
name = "KEGG"
kind = "list<text>"
sensor = "const_list(KEGG)"

[[property]]
node = "patients"
name = "age"
kind = "int"
sensor = "attr(age)"

[[property]]
node = "patients"
name = "sex"
kind = "text"
sensor = "attr(sex)"

[[property]]
node = "patients"
name = "smoker"
kind = "bool"
sensor = "attr(smoker)"

[[property]]
node = "patientGene"
name = "expression"
kind = "real"
sensor = "attr(expression)"

[[property]]
node = "patientGene"
name = "genePathways"
kind = "list<text>"
sensor = "follow(geneOfExpression, KEGG)"

[[property]]
node = "patientDrug"
name = "response"
kind = "real"
sensor = "attr(response)"
"#;

/// Three patients, three genes, one drug response each.
pub fn bio_tables() -> Vec<(&'static str, &'static str)> {
    vec![
        ("genes.csv", "id,KEGG\ng1,hsa01040;hsa00062\ng2,hsa01040\ng3,hsa00010\n"),
        ("patients.csv", "id,age,sex,smoker\np1,40,F,true\np2,51,M,false\np3,33,F,true\n"),
        (
            "patientGene.csv",
            "id,pid,gene,expression\n\
             p1_g1,p1,g1,0.5\np1_g2,p1,g2,-1.25\np1_g3,p1,g3,2.0\n\
             p2_g1,p2,g1,1.5\np2_g2,p2,g2,0.25\np2_g3,p2,g3,-0.5\n\
             p3_g1,p3,g1,-2.0\np3_g2,p3,g2,1.0\np3_g3,p3,g3,0.75\n",
        ),
        ("patientDrug.csv", "id,pid,response\np1_d,p1,0.7\np2_d,p2,1.9\np3_d,p3,-0.4\n"),
    ]
}

pub fn write_files(dir: &std::path::Path, files: &[(&str, &str)]) {
    for (name, content) in files {
        std::fs::write(dir.join(name), content).unwrap();
    }
}

/// The three-patient graph, loaded through the TOML schema and tables.
pub fn bio_graph() -> InstanceGraph {
    let dir = tempfile::tempdir().unwrap();
    write_files(dir.path(), &bio_tables());
    std::fs::write(dir.path().join("schema.toml"), BIO_SCHEMA).unwrap();
    relgraph::ingest::load(&dir.path().join("schema.toml"), dir.path(), &builtin_sensors()).unwrap().graph
}

pub const PHRASE_SCHEMA: &str = r#"
[[node]]
name = "sentences"

[[node]]
name = "phrases"

[[edge]]
name = "sentencePhrases"
source = "sentences"
destination = "phrases"
sensors = ["key_eq(id, sid)"]

[[property]]
node = "phrases"
name = "word"
kind = "text"
sensor = "attr(word)"

[[property]]
node = "phrases"
name = "isPred"
kind = "text"
sensor = "attr(isPred)"

[[property]]
node = "phrases"
name = "isArg"
kind = "text"
sensor = "attr(isArg)"
"#;

/// Sentences of phrases. Verbs are predicates, nouns arguments; the word
/// `run` is ambiguous and labeled both ways across phrases.
pub fn phrase_tables() -> Vec<(&'static str, String)> {
    let mut sentences = String::from("id\n");
    let mut phrases = String::from("id,sid,word,isPred,isArg\n");
    let words = [("eat", "True", "False"), ("dog", "False", "True"), ("cat", "False", "True"), ("see", "True", "False")];
    for s in 0..12 {
        sentences.push_str(&format!("s{s}\n"));
        for k in 0..3 {
            let (w, p, a) = words[(s + k) % words.len()];
            phrases.push_str(&format!("s{s}_{k},s{s},{w},{p},{a}\n"));
        }
    }
    vec![("sentences.csv", sentences), ("phrases.csv", phrases)]
}

pub fn phrase_graph() -> InstanceGraph {
    let dir = tempfile::tempdir().unwrap();
    for (name, content) in phrase_tables() {
        std::fs::write(dir.path().join(name), content).unwrap();
    }
    std::fs::write(dir.path().join("schema.toml"), PHRASE_SCHEMA).unwrap();
    relgraph::ingest::load(&dir.path().join("schema.toml"), dir.path(), &builtin_sensors()).unwrap().graph
}

/// Node types `a`, `b`, `c` with key-equality edges `ab: a.k = b.k` and
/// `bc: b.ref = c.id`, for load-order tests.
pub fn key_eq_schema() -> relgraph::Schema {
    let reg = builtin_sensors();
    let mut b = SchemaBuilder::new();
    for n in ["a", "b", "c"] {
        b.declare_node(n).unwrap();
    }
    b.declare_edge("ab", "a", "b").unwrap();
    b.add_sensor("ab", reg.resolve("key_eq(k, k)").unwrap()).unwrap();
    b.declare_edge("bc", "b", "c").unwrap();
    b.add_sensor("bc", reg.resolve("key_eq(ref, id)").unwrap()).unwrap();
    b.freeze().unwrap()
}

/// Random rows for [`key_eq_schema`] split into three batches, each a list
/// of (node type, rows).
pub fn key_eq_batches(seed: u64) -> Vec<Vec<(&'static str, Vec<NodeInstance>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys = rng.random_range(1..6i64);
    let rows = |prefix: &str, n: usize, rng: &mut ChaCha8Rng, cs: usize| -> Vec<NodeInstance> {
        (0..n)
            .map(|i| {
                NodeInstance::new(format!("{prefix}{i}"))
                    .with("k", Value::Int(rng.random_range(0..keys)))
                    .with("ref", Value::text(format!("c{}", rng.random_range(0..cs.max(1)))))
            })
            .collect()
    };
    let (na, nb, nc) = (rng.random_range(0..12), rng.random_range(0..12), rng.random_range(1..8));
    let a = rows("a", na, &mut rng, nc);
    let b = rows("b", nb, &mut rng, nc);
    let c = rows("c", nc, &mut rng, nc);
    let (a1, a2) = a.split_at(na / 2);
    let (b1, b2) = b.split_at(nb / 2);
    vec![
        vec![("a", a1.to_vec()), ("c", c)],
        vec![("b", b1.to_vec())],
        vec![("a", a2.to_vec()), ("b", b2.to_vec())],
    ]
}

pub fn load_batches(
    schema: &relgraph::Schema,
    batches: &[Vec<(&'static str, Vec<NodeInstance>)>],
    order: &[usize],
) -> InstanceGraph {
    let mut g = InstanceGraph::new(schema.clone());
    for &i in order {
        for (node, rows) in &batches[i] {
            g.populate_named(node, rows.clone()).unwrap();
        }
    }
    g
}

pub const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Edges of every type as sorted (source id, destination id) pairs.
pub fn edge_sets(g: &InstanceGraph) -> Vec<Vec<(String, String)>> {
    g.schema()
        .edge_types()
        .map(|(id, e)| {
            let mut pairs: Vec<(String, String)> = g
                .edge_records(id)
                .iter()
                .map(|&(s, d)| {
                    (g.instances(e.source)[s as usize].id().to_string(), g.instances(e.destination)[d as usize].id().to_string())
                })
                .collect();
            pairs.sort();
            pairs
        })
        .collect()
}

/// Every forward adjacency entry has its reverse and vice versa.
pub fn reverse_consistent(g: &InstanceGraph) -> bool {
    use relgraph::Direction;
    g.schema().edge_types().all(|(id, e)| {
        let fwd: usize = g.refs(e.source).map(|r| g.neighbors(id, Direction::Forward, r).len()).sum();
        let rev: usize = g.refs(e.destination).map(|r| g.neighbors(id, Direction::Reverse, r).len()).sum();
        fwd == rev
            && fwd == g.edge_records(id).len()
            && g.edge_records(id).iter().all(|&(s, d)| {
                let src = relgraph::InstanceRef { node: e.source, index: s };
                let dst = relgraph::InstanceRef { node: e.destination, index: d };
                g.neighbors(id, Direction::Forward, src).contains(&d) && g.neighbors(id, Direction::Reverse, dst).contains(&s)
            })
    })
}

pub const SENTENCE_SCHEMA: &str = r#"
[[node]]
name = "sentences"

[[node]]
name = "tokens"

[[edge]]
name = "sentenceTokens"
source = "sentences"
destination = "tokens"
sensors = ["tokenize_ws(text)"]

[[property]]
node = "sentences"
name = "text"
kind = "text"
sensor = "attr(text)"

[[property]]
node = "tokens"
name = "text"
kind = "text"
sensor = "attr(text)"

[[property]]
node = "tokens"
name = "position"
kind = "int"
sensor = "attr(position)"
"#;

pub fn sentence_schema() -> relgraph::Schema {
    relgraph::ingest::SchemaConfig::parse(SENTENCE_SCHEMA).unwrap().build(&builtin_sensors()).unwrap().schema
}

/// Random sentence of up to 12 words with irregular whitespace.
pub fn random_sentence(rng: &mut ChaCha8Rng) -> String {
    let words = rng.random_range(0..=12);
    let mut s = String::new();
    for _ in 0..words {
        for _ in 0..rng.random_range(1..3) {
            s.push([' ', '\t', ' ', '\n'][rng.random_range(0..4)]);
        }
        let len = rng.random_range(1..8);
        s.extend((0..len).map(|_| (b'a' + rng.random_range(0..26u8)) as char));
    }
    s
}
