//! The `elemtrip` command-line driver.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::causal::{CausalGraph, CausalModel, CausalQuery, Estimand, PlanQuery, RegimeDsepModel, StructuralModel};
use crate::error::{Error, Result};
use crate::graphmap::{build_mim, has_perfect_map, induced_elementary_model, Dag};
use crate::io::{
    extract_model_from_table, load_table, parse_triplet, serialize_model, write_table, ModelFile,
};
use crate::model::{ElementaryModel, ElementarySource};
use crate::query::{dominant_triplets, grid_dag, is_member_triplet, maximal_grids, GridScope};
use crate::setops::{intersect, union_max_subset, union_min_superset, union_with_context};
use crate::table::DEFAULT_EPS;
use crate::triplet::AxiomLevel;
use crate::universe::Universe;
use crate::varset::VarSet;

#[derive(Parser, Debug)]
#[command(name = "elemtrip", version, about = "Independence models as elementary triplets")]
pub struct Cli {
    /// Output style: readable `key: value` lines or `key=value` lines.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Kv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum UnionMode {
    Context,
    Min,
    Max,
}

fn parse_level(s: &str) -> std::result::Result<AxiomLevel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Debug)]
pub struct ModelIn {
    /// Model file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Axiom level, overriding the file's `axioms:` line.
    #[arg(long, value_parser = parse_level)]
    pub axioms: Option<AxiomLevel>,
}

#[derive(Args, Debug)]
pub struct RegimeIn {
    /// Regime model file.
    #[arg(long = "in", conflicts_with = "dag", required_unless_present = "dag")]
    pub input: Option<PathBuf>,
    /// Causal graph edge list; membership is then decided by d-separation.
    #[arg(long)]
    pub dag: Option<PathBuf>,
    /// Latent nodes of the graph, comma or space separated.
    #[arg(long, requires = "dag")]
    pub latent: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Close a model and report its size.
    Close {
        #[command(flatten)]
        model: ModelIn,
        /// Write the closed model here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide whether `I ; J | K [@ ctx]` is in the closed model.
    Member {
        #[command(flatten)]
        model: ModelIn,
        triplet: String,
    },
    /// List dominant triplets (one per mirror pair unless `--all`).
    Dominant {
        #[command(flatten)]
        model: ModelIn,
        #[arg(long)]
        all: bool,
    },
    /// List maximal grids (canonical half of the grid DAG unless `--full`).
    Grids {
        #[command(flatten)]
        model: ModelIn,
        #[arg(long)]
        full: bool,
    },
    /// Build the minimal independence map for an ordering.
    Mim {
        #[command(flatten)]
        model: ModelIn,
        /// Variable names in order; defaults to declaration order.
        #[arg(long)]
        ordering: Option<String>,
        #[arg(long)]
        dot: bool,
    },
    /// Search for a perfect map.
    Pm {
        #[command(flatten)]
        model: ModelIn,
        #[arg(long)]
        dot: bool,
    },
    /// Intersect two models over the same variables.
    Intersect {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_parser = parse_level)]
        axioms: Option<AxiomLevel>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Combine two models.
    Union {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum)]
        mode: UnionMode,
        #[arg(long, value_parser = parse_level)]
        axioms: Option<AxiomLevel>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Identify p(y | do(x), w) from a regime model.
    Identify {
        #[command(flatten)]
        source: RegimeIn,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value = "")]
        w: String,
        /// Recursion limit for cases 3 and 4; defaults to the number of variables.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Evaluate a sequential plan.
    Plan {
        #[command(flatten)]
        source: RegimeIn,
        /// One step per flag: `X_k ; N_k` (controls, then variables observed before them).
        #[arg(long = "step", required = true)]
        steps: Vec<String>,
        #[arg(long)]
        y: String,
        #[arg(long, default_value = "")]
        w: String,
        /// Take the naturalness conditions for granted instead of checking them.
        #[arg(long)]
        assume_natural: bool,
    },
    /// Extract the model of a joint-table CSV.
    FromTable {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, value_parser = parse_level, default_value = "semigraphoid")]
        axioms: AxiomLevel,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an estimand on a joint-table CSV.
    EvalEstimand {
        #[arg(long)]
        table: PathBuf,
        estimand: String,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Write the model induced by a DAG (the regime model with `--regime`).
    FromDag {
        #[arg(long)]
        dag: PathBuf,
        #[arg(long)]
        latent: Option<String>,
        #[arg(long)]
        regime: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the observational table of a random structural model on a DAG.
    RandomTable {
        #[arg(long)]
        dag: PathBuf,
        #[arg(long)]
        latent: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Out<'w> {
    format: Format,
    w: &'w mut dyn Write,
}

impl Out<'_> {
    fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> Result<()> {
        match self.format {
            Format::Text => writeln!(self.w, "{key}: {value}")?,
            Format::Kv => writeln!(self.w, "{key}={value}")?,
        }
        Ok(())
    }

    fn raw(&mut self, text: &str) -> Result<()> {
        self.w.write_all(text.as_bytes())?;
        Ok(())
    }

    /// Writes `text` to `path`, or to the output when there is no path.
    fn emit(&mut self, text: &str, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => {
                std::fs::write(p, text)?;
                self.kv("written", p.display())
            }
            None => self.raw(text),
        }
    }
}

/// Parses the arguments, runs the command and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            1
        }
    }
}

fn load(m: &ModelIn) -> Result<ElementaryModel> {
    ModelFile::load(&m.input)?.to_model(m.axioms)
}

fn load_pair(a: &Path, b: &Path, axioms: Option<AxiomLevel>) -> Result<(ElementaryModel, ElementaryModel)> {
    Ok((ModelFile::load(a)?.to_model(axioms)?, ModelFile::load(b)?.to_model(axioms)?))
}

fn names_set(u: &Universe, s: &str) -> Result<VarSet> {
    let mut out = VarSet::EMPTY;
    for t in s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
        out.insert(u.lookup(t)?);
    }
    Ok(out)
}

fn load_graph(dag: &Path, latent: Option<&str>) -> Result<CausalGraph> {
    let d = Dag::parse_edge_list(&std::fs::read_to_string(dag)?)?;
    let latent = names_set(d.universe(), latent.unwrap_or(""))?;
    CausalGraph::new(&d, latent)
}

enum RegimeSource {
    Stored(ElementaryModel),
    Dsep(RegimeDsepModel),
}

impl RegimeSource {
    fn open(s: &RegimeIn) -> Result<Self> {
        match (&s.input, &s.dag) {
            (Some(p), _) => Ok(RegimeSource::Stored(ModelFile::load(p)?.to_model(None)?)),
            (None, Some(d)) => Ok(RegimeSource::Dsep(RegimeDsepModel::new(&load_graph(d, s.latent.as_deref())?)?)),
            (None, None) => Err(Error::InvalidSets("either --in or --dag is required".into())),
        }
    }

    fn model(&self) -> Result<CausalModel<'_, dyn ElementarySource + '_>> {
        match self {
            RegimeSource::Stored(m) => CausalModel::new(m as &dyn ElementarySource, m.universe_arc().clone()),
            RegimeSource::Dsep(m) => CausalModel::new(m as &dyn ElementarySource, m.universe_arc().clone()),
        }
    }
}

fn report_model(out: &mut Out, m: &ElementaryModel) -> Result<()> {
    out.kv("axioms", m.level())?;
    out.kv("elementary", m.oriented_len())?;
    if m.is_symmetric() {
        out.kv("canonical", m.len())?;
    }
    out.kv("contexts", m.contexts().count())
}

fn write_model(out: &mut Out, m: &ElementaryModel, path: Option<&Path>) -> Result<()> {
    let text = serialize_model(&ModelFile::from_model(m));
    match path {
        Some(p) => {
            std::fs::write(p, text)?;
            out.kv("written", p.display())
        }
        None => report_model(out, m),
    }
}

fn edges(out: &mut Out, g: &Dag) -> Result<()> {
    let u = g.universe();
    for (a, b) in g.edges() {
        out.kv("edge", format!("{} -> {}", u.name(a), u.name(b)))?;
    }
    Ok(())
}

pub fn execute(cli: &Cli, w: &mut dyn Write) -> Result<()> {
    let mut out = Out { format: cli.format, w };
    let out = &mut out;
    match &cli.command {
        Command::Close { model, out: path } => {
            let m = load(model)?;
            report_model(out, &m)?;
            if let Some(p) = path {
                std::fs::write(p, serialize_model(&ModelFile::from_model(&m)))?;
                out.kv("written", p.display())?;
            }
        }
        Command::Member { model, triplet } => {
            let m = load(model)?;
            let t = parse_triplet(m.universe_arc(), triplet)?;
            out.kv("member", is_member_triplet(&m, &t)?)?;
        }
        Command::Dominant { model, all } => {
            let m = load(model)?;
            let u = m.universe_arc().clone();
            let d = dominant_triplets(&m)?;
            let list = if *all { &d.all } else { &d.non_symmetric };
            out.kv("count", list.len())?;
            for t in list {
                out.kv("dominant", t.display(&u))?;
            }
        }
        Command::Grids { model, full } => {
            let m = load(model)?;
            let u = m.universe_arc().clone();
            let scope = if *full { GridScope::Full } else { GridScope::CanonicalHalf };
            let grids = maximal_grids(&grid_dag(&m)?, scope);
            out.kv("count", grids.len())?;
            for g in &grids {
                let (r, c) = g.shape();
                out.kv("grid", format!("{r}x{c} {}", g.triplet().display(&u)))?;
            }
        }
        Command::Mim { model, ordering, dot } => {
            let m = load(model)?;
            let u = m.universe_arc().clone();
            let order: Vec<usize> = match ordering {
                Some(s) => s
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| u.lookup(t))
                    .collect::<Result<_>>()?,
                None => (0..u.len()).collect(),
            };
            let g = build_mim(&m, &order)?;
            if *dot {
                out.raw(&g.to_dot())?;
            } else {
                edges(out, &g)?;
            }
        }
        Command::Pm { model, dot } => {
            let m = load(model)?;
            match has_perfect_map(&m)? {
                Some((order, g)) => {
                    let u = m.universe_arc();
                    out.kv("perfect-map", "found")?;
                    let names: Vec<&str> = order.iter().map(|&v| u.name(v)).collect();
                    out.kv("ordering", names.join(" "))?;
                    if *dot {
                        out.raw(&g.to_dot())?;
                    } else {
                        edges(out, &g)?;
                    }
                }
                None => out.kv("perfect-map", "none")?,
            }
        }
        Command::Intersect { a, b, axioms, out: path } => {
            let (ma, mb) = load_pair(a, b, *axioms)?;
            write_model(out, &intersect(&ma, &mb)?, path.as_deref())?;
        }
        Command::Union { a, b, mode, axioms, out: path } => {
            let (ma, mb) = load_pair(a, b, *axioms)?;
            let m = match mode {
                UnionMode::Context => union_with_context(&ma, &mb)?,
                UnionMode::Min => union_min_superset(&ma, &mb)?,
                UnionMode::Max => union_max_subset(&ma, &mb)?,
            };
            write_model(out, &m, path.as_deref())?;
        }
        Command::Identify { source, x, y, w, depth } => {
            let src = RegimeSource::open(source)?;
            let cm = src.model()?;
            let u = cm.universe();
            let q = CausalQuery::new(names_set(u, x)?, names_set(u, y)?, names_set(u, w)?);
            match cm.identify(&q, *depth)? {
                Some(found) => {
                    out.kv("estimand", found.estimand.display(u))?;
                    for s in &found.steps {
                        out.kv(
                            "case",
                            format!("{} y={} w={} z={}", s.case, u.fmt_set(s.y), u.fmt_set(s.w), u.fmt_set(s.z)),
                        )?;
                    }
                }
                None => out.kv("estimand", "none")?,
            }
        }
        Command::Plan { source, steps, y, w, assume_natural } => {
            let src = RegimeSource::open(source)?;
            let cm = src.model()?;
            let u = cm.universe();
            let mut controls = Vec::new();
            let mut pools = Vec::new();
            for s in steps {
                let (c, p) = s.split_once(';').unwrap_or((s, ""));
                controls.push(names_set(u, c)?);
                pools.push(names_set(u, p)?);
            }
            let q = PlanQuery {
                controls,
                pools,
                target: names_set(u, y)?,
                extra: names_set(u, w)?,
            };
            match cm.evaluate_plan(&q, !assume_natural)? {
                Some(plan) => {
                    out.kv("estimand", plan.estimand.display(u))?;
                    for (k, z) in plan.z.iter().enumerate() {
                        out.kv(&format!("z{}", k + 1), u.fmt_set(*z))?;
                    }
                }
                None => out.kv("estimand", "none")?,
            }
        }
        Command::FromTable { table, axioms, eps, out: path } => {
            let t = load_table(table, *eps)?;
            let m = extract_model_from_table(&t, *axioms, *eps)?;
            out.emit(&serialize_model(&ModelFile::from_model(&m)), path.as_deref())?;
        }
        Command::EvalEstimand { table, estimand, eps } => {
            let t = load_table(table, *eps)?;
            let u = Universe::with_base(t.names())?;
            let e = Estimand::parse(estimand, &u)?;
            let r = e.evaluate(&u, &t)?;
            let d = &r.dist;
            let value_name = |name: &str, v: usize| -> String {
                let col = t.column(name).expect("evaluated variables are table columns");
                format!("{name}={}", t.domains()[col][v])
            };
            for g in 0..d.given_size() {
                let gv = crate::table::decode(&d.given_cards, g);
                let given: Vec<String> = d.given.iter().zip(&gv).map(|(n, &v)| value_name(n, v)).collect();
                for tv in 0..d.target_size() {
                    let tvals = crate::table::decode(&d.target_cards, tv);
                    let target: Vec<String> = d.target.iter().zip(&tvals).map(|(n, &v)| value_name(n, v)).collect();
                    let lhs = if given.is_empty() {
                        format!("p({})", target.join(","))
                    } else {
                        format!("p({}|{})", target.join(","), given.join(","))
                    };
                    out.kv(&lhs, d.probs[g * d.target_size() + tv])?;
                }
            }
        }
        Command::FromDag { dag, latent, regime, out: path } => {
            let m = if *regime {
                RegimeDsepModel::new(&load_graph(dag, latent.as_deref())?)?.materialize()?
            } else {
                if latent.is_some() {
                    return Err(Error::InvalidSets("--latent needs --regime".into()));
                }
                let d = Dag::parse_edge_list(&std::fs::read_to_string(dag)?)?;
                induced_elementary_model(&d)
            };
            out.emit(&serialize_model(&ModelFile::from_model(&m)), path.as_deref())?;
        }
        Command::RandomTable { dag, latent, seed, out: path } => {
            let g = load_graph(dag, latent.as_deref())?;
            let t = StructuralModel::from_seed(&g, *seed).observational_table()?;
            out.emit(&write_table(&t)?, path.as_deref())?;
        }
    }
    Ok(())
}
