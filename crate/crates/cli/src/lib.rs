//! The `relgraph` command line: load tables, run queries, train and rank
//! learners, generate synthetic data.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data, configuration
//! or query errors.

use std::ffi::OsString;
use std::io::{BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use relgraph::graph::InstanceRef;
use relgraph::ingest::{self, LearningConfig, Loaded, SchemaConfig, SynthParams};
use relgraph::lang::{self, render};
use relgraph::learn::{self, EvalReport, LearnError, Learner};
use relgraph::{builtin_sensors, InstanceGraph};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "relgraph", version, about = "Typed relational graphs, queries and learners")]
struct Cli {
    /// Schema document; defaults to `<data>/schema.toml`.
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    /// Directory holding one table per node type.
    #[arg(long, global = true, default_value = ".")]
    data: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and seal the graph, then print the population report.
    Load { schema: Option<PathBuf>, data: Option<PathBuf> },
    /// Evaluate one query and print its result.
    Query { text: String },
    /// Read queries line by line; `:quit` exits.
    Repl,
    /// Train the learners of a configuration on its training split.
    Train { config: PathBuf },
    /// Train, then evaluate on the held-out split.
    Test { config: PathBuf },
    /// Train and test a learner family, then rank its members.
    Family { config: PathBuf },
    /// Generate a synthetic patient/gene/pathway data set.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        patients: usize,
        #[arg(long, default_value_t = 200)]
        genes: usize,
        #[arg(long, default_value_t = 10)]
        pathways: usize,
        #[arg(long, default_value_t = 0)]
        planted: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
    },
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match dispatch(cli, input, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn dispatch(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let paths = Paths { schema: cli.schema, data: cli.data };
    match cli.command {
        Command::Load { schema, data } => {
            let paths = Paths { schema: schema.or(paths.schema), data: data.unwrap_or(paths.data) };
            let loaded = paths.load()?;
            print_report(&loaded, out)
        }
        Command::Query { text } => {
            let loaded = paths.load()?;
            let result = lang::run(&text, &loaded.graph)?;
            out.write_all(render(&result, &loaded.graph).as_bytes())?;
            Ok(())
        }
        Command::Repl => repl(&paths.load()?.graph, input, out, err),
        Command::Train { config } => train(&paths, &config, out),
        Command::Test { config } => test(&paths, &config, out),
        Command::Family { config } => family(&paths, &config, out),
        Command::Synth { out: dir, seed, patients, genes, pathways, planted, noise } => {
            let params = SynthParams {
                seed,
                n_patients: patients,
                n_genes: genes,
                n_pathways: pathways,
                planted_pathway: planted,
                noise_sd: noise,
            };
            let manifest = ingest::generate_synthetic_bio(&params, &dir)?;
            writeln!(out, "wrote {}", dir.display())?;
            writeln!(out, "planted {} ({} genes)", manifest.planted, manifest.weights.len())?;
            Ok(())
        }
    }
}

struct Paths {
    schema: Option<PathBuf>,
    data: PathBuf,
}

impl Paths {
    fn schema(&self) -> PathBuf {
        self.schema.clone().unwrap_or_else(|| self.data.join("schema.toml"))
    }

    fn load(&self) -> Result<Loaded> {
        let schema = self.schema();
        let built = SchemaConfig::from_file(&schema)?.build(&builtin_sensors())?;
        Ok(ingest::load_built(&built, &self.data)?)
    }
}

fn print_report(loaded: &Loaded, out: &mut dyn Write) -> Result<()> {
    let g = &loaded.graph;
    let r = &loaded.report;
    writeln!(out, "instances {} (generated {})", r.added + r.generated, r.generated)?;
    writeln!(out, "edges {}", r.edges)?;
    for (id, n) in g.schema().node_types() {
        writeln!(out, "node {} {}", n.name, g.instances(id).len())?;
    }
    for (id, e) in g.schema().edge_types() {
        writeln!(out, "edge {} {}", e.name, g.edge_records(id).len())?;
    }
    Ok(())
}

fn repl(graph: &InstanceGraph, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let interactive = std::io::stdin().is_terminal();
    let mut line = String::new();
    loop {
        if interactive {
            write!(out, "> ")?;
            out.flush()?;
        }
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let text = line.trim();
        match text {
            "" => continue,
            ":quit" => return Ok(()),
            _ => match lang::run(text, graph) {
                Ok(result) => out.write_all(render(&result, graph).as_bytes())?,
                Err(e) => writeln!(err, "error: {e}")?,
            },
        }
    }
}

struct Session {
    loaded: Loaded,
    config: LearningConfig,
}

impl Session {
    fn open(paths: &Paths, config: &Path) -> Result<Self> {
        let config = LearningConfig::from_file(config)?;
        Ok(Self { loaded: paths.load()?, config })
    }

    fn split(&self, learner: &Learner) -> (Vec<InstanceRef>, Vec<InstanceRef>) {
        let roots: Vec<InstanceRef> = self.loaded.graph.refs(learner.spec().root).collect();
        ingest::split(&roots, self.config.train_fraction, self.config.seed)
    }

    fn learners(&self) -> Result<Vec<Learner>> {
        let schema = self.loaded.graph.schema();
        let family = self.config.family.as_ref().map(|f| f.template.as_str());
        self.config
            .learners
            .iter()
            .filter(|l| Some(l.name.as_str()) != family)
            .map(|l| Ok(Learner::new(l.spec(schema)?)))
            .collect()
    }
}

fn train(paths: &Paths, config: &Path, out: &mut dyn Write) -> Result<()> {
    let s = Session::open(paths, config)?;
    let graph = &s.loaded.graph;
    for mut learner in s.learners()? {
        let (train, _) = s.split(&learner);
        let summary = learner.train(graph, &train)?;
        writeln!(
            out,
            "{}: {} examples, {} skipped, {} features",
            learner.spec().name,
            summary.examples,
            summary.skipped,
            summary.features
        )?;
    }
    Ok(())
}

fn format_report(report: &EvalReport) -> String {
    match report {
        EvalReport::Regression(r) => {
            let pearson = r.pearson.map_or("undefined".to_string(), |p| format!("{p:.6}"));
            format!("n={} ssr={:.6} mse={:.6} pearson={pearson}", r.n, r.ssr, r.mse)
        }
        EvalReport::Classification(c) => {
            let mut s = format!("n={} accuracy={:.6}", c.n, c.accuracy);
            for l in &c.per_label {
                s.push_str(&format!(
                    " {}:p={:.4},r={:.4},f1={:.4},support={}",
                    l.label, l.precision, l.recall, l.f1, l.support
                ));
            }
            s
        }
    }
}

fn test(paths: &Paths, config: &Path, out: &mut dyn Write) -> Result<()> {
    let s = Session::open(paths, config)?;
    let graph = &s.loaded.graph;
    for mut learner in s.learners()? {
        let (train, test) = s.split(&learner);
        learner.train(graph, &train)?;
        let report = learner.test(graph, &test)?;
        writeln!(out, "{}: {}", learner.spec().name, format_report(&report))?;
    }
    if let Some((cc, handles)) = s.config.constrained(graph.schema())? {
        let mut tests = Vec::new();
        for (name, h) in &handles {
            let mut l = h.write().map_err(|_| anyhow!("classifier `{name}` lock is poisoned"))?;
            let (train, test) = s.split(&l);
            l.train(graph, &train)?;
            tests.push((name.clone(), test, l.spec().clone()));
        }
        let (mut scopes, mut feasible) = (0, 0);
        let mut assigned = std::collections::HashMap::new();
        for scope in graph.refs(cc.scope()) {
            let a = cc.joint_predict(graph, scope)?;
            scopes += 1;
            feasible += usize::from(a.feasible);
            assigned.extend(a.to_map());
        }
        writeln!(out, "constrained: {scopes} scopes, {feasible} feasible")?;
        for (name, test, spec) in tests {
            let (mut truth, mut predicted) = (Vec::new(), Vec::new());
            for r in test {
                if let (Some(label), Some(p)) = (spec.label_of(graph, r), assigned.get(&(name.clone(), r))) {
                    truth.push(label.to_string());
                    predicted.push(p.clone());
                }
            }
            if truth.is_empty() {
                bail!("constrained classifier `{name}` decided no test instance");
            }
            let report = learn::classification_report(&truth, &predicted)?;
            writeln!(out, "{name} (constrained): {}", format_report(&EvalReport::Classification(report)))?;
        }
    }
    Ok(())
}

fn family(paths: &Paths, config: &Path, out: &mut dyn Write) -> Result<()> {
    let s = Session::open(paths, config)?;
    let graph = &s.loaded.graph;
    let fam = s.config.family.as_ref().context("configuration has no [family] section")?;
    let template = s.config.learner(&fam.template).expect("validated template");
    let parameters = fam.resolve(graph)?;
    let mut family = learn::make_family(&parameters, |p| {
        template.instantiate(graph.schema(), Some(p)).map_err(|e| match e {
            ingest::IngestError::Learn(l) => l,
            other => LearnError::Config(other.to_string()),
        })
    })?;
    let first = family.members().first().context("empty family")?;
    let (train, test) = s.split(&first.1);
    family.train(graph, &train)?;
    let ranking = learn::rank(family.test(graph, &test)?)?;
    for (i, e) in ranking.entries.iter().enumerate() {
        writeln!(out, "{}. {} {}", i + 1, e.param, format_report(&e.report))?;
    }
    writeln!(out, "best {}", ranking.best().param)?;
    Ok(())
}
