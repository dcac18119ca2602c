//! Seeded synthetic patients, genes, pathways and drug responses with one
//! planted pathway driving the response.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{
    EdgeConfig, FamilyConfig, LearnerConfig, LearningConfig, NodeConfig, PropertyConfig, SchemaConfig,
    PARAM_PLACEHOLDER,
};
use super::IngestError;
use crate::learn::{SgdConfig, Task};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub seed: u64,
    pub n_patients: usize,
    pub n_genes: usize,
    pub n_pathways: usize,
    pub planted_pathway: usize,
    pub noise_sd: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self { seed: 7, n_patients: 50, n_genes: 200, n_pathways: 10, planted_pathway: 0, noise_sd: 0.1 }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |reason: String| Err(IngestError::ParameterOutOfRange(reason));
        if self.n_pathways == 0 {
            return bad("n_pathways must be positive".into());
        }
        if self.planted_pathway >= self.n_pathways {
            return bad(format!("planted_pathway {} must be below n_pathways {}", self.planted_pathway, self.n_pathways));
        }
        if self.n_genes < self.n_pathways {
            return bad(format!("n_genes {} must be at least n_pathways {}", self.n_genes, self.n_pathways));
        }
        if self.n_patients < 2 {
            return bad("n_patients must be at least 2".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd must be a non-negative number, got {}", self.noise_sd));
        }
        Ok(())
    }
}

pub fn pathway_name(i: usize) -> String {
    format!("hsa{i:05}")
}

pub fn gene_name(i: usize) -> String {
    format!("g{i:04}")
}

pub fn patient_name(i: usize) -> String {
    format!("p{i:03}")
}

/// Ground truth written next to the generated tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub params: SynthParams,
    pub planted: String,
    pub pathways: Vec<String>,
    /// Response weight per planted-pathway gene, in gene order.
    pub weights: Vec<(String, f64)>,
    /// Noise added to each patient's response, in patient order.
    pub noise: Vec<f64>,
}

impl Manifest {
    pub fn from_file(path: &Path) -> Result<Self, IngestError> {
        let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| IngestError::Config { file: path.display().to_string(), reason: e.to_string() })
    }
}

/// Table and configuration files of one synthetic data set.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub files: Vec<(&'static str, String)>,
    pub manifest: Manifest,
}

/// Builds the data set in memory.
pub fn synthesize(params: &SynthParams) -> Result<SynthData, IngestError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let pathways: Vec<String> = (0..params.n_pathways).map(pathway_name).collect();

    // Each gene belongs to 1–3 pathways; the first is assigned round robin
    // so that every pathway is populated.
    let mut memberships: Vec<Vec<usize>> = Vec::with_capacity(params.n_genes);
    for g in 0..params.n_genes {
        let extra = match rng.random::<f64>() {
            u if u < 0.8 => 0,
            u if u < 0.95 => 1,
            _ => 2,
        };
        let mut m = vec![g % params.n_pathways];
        while m.len() < (1 + extra).min(params.n_pathways) {
            let p = rng.random_range(0..params.n_pathways);
            if !m.contains(&p) {
                m.push(p);
            }
        }
        memberships.push(m);
    }
    let mut genes = String::from("id,KEGG\n");
    for (g, m) in memberships.iter().enumerate() {
        let cell: Vec<&str> = m.iter().map(|&p| pathways[p].as_str()).collect();
        writeln!(genes, "{},{}", gene_name(g), cell.join(";")).unwrap();
    }

    let mut gene_gene = String::from("id,gene1,gene2,PPIBioGrid\n");
    for k in 0..params.n_genes {
        let a = rng.random_range(0..params.n_genes);
        let b = rng.random_range(0..params.n_genes);
        let flag = u8::from(rng.random::<bool>());
        writeln!(gene_gene, "gg{k:05},{},{},{flag}", gene_name(a), gene_name(b)).unwrap();
    }

    let mut patients = String::from("id,age\n");
    for p in 0..params.n_patients {
        writeln!(patients, "{},{}", patient_name(p), rng.random_range(20..80)).unwrap();
    }

    let planted: Vec<usize> =
        (0..params.n_genes).filter(|&g| memberships[g].contains(&params.planted_pathway)).collect();
    let weights: Vec<(String, f64)> = planted
        .iter()
        .map(|&g| (gene_name(g), StandardNormal.sample(&mut rng)))
        .collect();

    let mut expression = vec![vec![0.0f64; params.n_genes]; params.n_patients];
    let mut patient_gene = String::from("id,pid,gene,expression\n");
    for (p, row) in expression.iter_mut().enumerate() {
        for (g, x) in row.iter_mut().enumerate() {
            *x = StandardNormal.sample(&mut rng);
            writeln!(patient_gene, "{}_{},{},{},{x}", patient_name(p), gene_name(g), patient_name(p), gene_name(g))
                .unwrap();
        }
    }

    let noise_dist = Normal::new(0.0, params.noise_sd).expect("validated noise");
    let mut noise = Vec::with_capacity(params.n_patients);
    let mut patient_drug = String::from("id,pid,drug,response\n");
    for (p, row) in expression.iter().enumerate() {
        let eps = if params.noise_sd == 0.0 { 0.0 } else { noise_dist.sample(&mut rng) };
        noise.push(eps);
        let response = response_of(&planted, &weights, row) + eps;
        writeln!(patient_drug, "{}_d,{},drugA,{response}", patient_name(p), patient_name(p)).unwrap();
    }

    let manifest = Manifest {
        params: *params,
        planted: pathways[params.planted_pathway].clone(),
        pathways: pathways.clone(),
        weights,
        noise,
    };
    let files = vec![
        ("genes.csv", genes),
        ("geneGene.csv", gene_gene),
        ("patients.csv", patients),
        ("patientGene.csv", patient_gene),
        ("patientDrug.csv", patient_drug),
        ("schema.toml", bio_schema().to_toml()),
        ("drug_response.toml", drug_response_config(&pathways).to_toml()),
        ("manifest.json", serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"),
    ];
    Ok(SynthData { files, manifest })
}

fn response_of(planted: &[usize], weights: &[(String, f64)], row: &[f64]) -> f64 {
    planted.iter().zip(weights).map(|(&g, (_, w))| w * row[g]).sum()
}

/// Noise-free response recomputed from a manifest and one patient's
/// expression values in gene order.
pub fn recompute_response(manifest: &Manifest, expression: &[f64], patient: usize) -> f64 {
    let planted: Vec<usize> = manifest
        .weights
        .iter()
        .map(|(g, _)| g[1..].parse::<usize>().expect("generated gene id"))
        .collect();
    response_of(&planted, &manifest.weights, expression) + manifest.noise[patient]
}

/// Writes the data set into `dir`, creating it if needed.
pub fn generate_synthetic_bio(params: &SynthParams, dir: &Path) -> Result<Manifest, IngestError> {
    let data = synthesize(params)?;
    fs::create_dir_all(dir).map_err(|e| IngestError::io(dir, e))?;
    for (name, content) in &data.files {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| IngestError::io(&path, e))?;
    }
    Ok(data.manifest)
}

fn node(name: &str) -> NodeConfig {
    NodeConfig { name: name.into(), compose: None }
}

fn edge(name: &str, source: &str, destination: &str, sensors: &[&str]) -> EdgeConfig {
    EdgeConfig {
        name: name.into(),
        source: source.into(),
        destination: destination.into(),
        sensors: sensors.iter().map(|s| s.to_string()).collect(),
    }
}

fn property(node: &str, name: &str, kind: &str, sensor: &str) -> PropertyConfig {
    PropertyConfig { node: node.into(), name: name.into(), kind: kind.into(), sensor: sensor.into(), ordered: false }
}

/// Schema of the synthetic data: relations are nodes of their own, linked
/// to their endpoints by key equality.
pub fn bio_schema() -> SchemaConfig {
    SchemaConfig {
        nodes: ["genes", "geneGene", "patients", "patientGene", "patientDrug"].into_iter().map(node).collect(),
        edges: vec![
            edge("firstGene", "geneGene", "genes", &["key_eq(gene1, id)"]),
            edge("secondGene", "geneGene", "genes", &["key_eq(gene2, id)"]),
            edge("expressionsOfPatient", "patients", "patientGene", &["key_eq(id, pid)"]),
            edge("geneOfExpression", "patientGene", "genes", &["key_eq(gene, id)"]),
            edge("drugsOfPatient", "patients", "patientDrug", &["key_eq(id, pid)"]),
        ],
        properties: vec![
            property("genes", "KEGG", "list<text>", "const_list(KEGG)"),
            property("geneGene", "PPIBioGrid", "int", "attr(PPIBioGrid)"),
            property("patients", "age", "int", "attr(age)"),
            property("patientGene", "expression", "real", "attr(expression)"),
            property("patientGene", "genePathways", "list<text>", "follow(geneOfExpression, KEGG)"),
            property("patientDrug", "drug", "text", "attr(drug)"),
            property("patientDrug", "response", "real", "attr(response)"),
        ],
    }
}

/// One regressor per pathway over that pathway's expression values.
pub fn drug_response_config(pathways: &[String]) -> LearningConfig {
    LearningConfig {
        train_fraction: 0.7,
        seed: 42,
        learners: vec![LearnerConfig {
            name: "drugResponse".into(),
            root: "patientDrug".into(),
            label: "patientDrug() prop response".into(),
            features: vec![format!(
                "patientDrug() ~> -drugsOfPatient ~> expressionsOfPatient filter(genePathways == \"{PARAM_PLACEHOLDER}\") prop expression"
            )],
            task: Some(Task::Regression),
            filter: None,
            sgd: SgdConfig::default(),
        }],
        family: Some(FamilyConfig { template: "drugResponse".into(), parameters: pathways.to_vec(), source: None }),
        constrained: None,
    }
}
