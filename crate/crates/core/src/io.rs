//! Model files, joint-table CSV files, and extraction of models from tables.
//!
//! A model file is line based. Blank lines and text after `#` are ignored.
//!
//! ```text
//! vars: 1 2 3 4 5 6
//! context-var: aux = 0,1
//! regime: x y          # declares x, y, F_x, F_y
//! axioms: semigraphoid
//! symmetry: directed   # optional, default symmetric
//! closed: true         # optional: the elem lines are already closed
//! triplet: 1 2 ; 3 4 | 6
//! elem: 5 ; 6 @ aux=0
//! ```
//!
//! Sets are names separated by spaces or commas; `∅` or nothing denotes the
//! empty set and the `| K` part may be left out.

use std::path::Path;
use std::sync::Arc;

use crate::causal::Regime;
use crate::closure::{close_elementary, expand_e, extend_closed};
use crate::error::{Error, Result};
use crate::model::ElementaryModel;
use crate::table::{parse_probability, JointTable};
use crate::triplet::{AxiomLevel, ElementaryTriplet, Triplet};
use crate::universe::{Context, Universe};
use crate::varset::VarSet;

/// The contents of a model file.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub universe: Arc<Universe>,
    pub level: AxiomLevel,
    pub symmetric: bool,
    pub closed: bool,
    pub triplets: Vec<Triplet>,
    pub elems: Vec<ElementaryTriplet>,
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

fn tokens(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty() && *t != "∅" && *t != "{}")
}

fn parse_set(u: &Universe, s: &str) -> Result<VarSet> {
    let mut out = VarSet::EMPTY;
    for t in tokens(s) {
        out.insert(u.lookup(t)?);
    }
    Ok(out)
}

fn parse_context(u: &Universe, s: &str, line: usize) -> Result<Context> {
    let mut pairs = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("context binding `{item}` lacks `=`")))?;
        pairs.push((k.trim(), v.trim()));
    }
    u.context_of(&pairs)
}

/// Parses `I ; J | K [@ k=v,...]` against `u`.
pub fn parse_triplet(u: &Universe, s: &str) -> Result<Triplet> {
    parse_triplet_at(u, s, 1)
}

fn parse_triplet_at(u: &Universe, s: &str, line: usize) -> Result<Triplet> {
    let (body, ctx) = match s.split_once('@') {
        Some((b, c)) => (b, parse_context(u, c, line)?),
        None => (s, Context::empty()),
    };
    let (left, rest) = body
        .split_once(';')
        .ok_or_else(|| syntax(line, "expected `I ; J | K`"))?;
    let (right, cond) = rest.split_once('|').unwrap_or((rest, ""));
    let t = Triplet::new(parse_set(u, left)?, parse_set(u, right)?, parse_set(u, cond)?).with_context(ctx);
    t.validate(u)?;
    Ok(t)
}

pub fn parse_model(text: &str) -> Result<ModelFile> {
    let mut u = Universe::new();
    let mut level = None;
    let mut symmetric = true;
    let mut closed = false;
    let mut pending: Vec<(usize, &str, &str)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once(':')
            .ok_or_else(|| syntax(line, "expected `directive: value`"))?;
        let value = value.trim();
        match key.trim() {
            "vars" => {
                for t in tokens(value) {
                    u.add_base(t)?;
                }
            }
            "regime" => {
                let names: Vec<&str> = tokens(value).collect();
                for t in &names {
                    u.add_base(t)?;
                }
                for t in &names {
                    u.add_context(&format!("F_{t}"), &["obs", "int"])?;
                }
            }
            "context-var" => {
                let (name, domain) = value
                    .split_once('=')
                    .ok_or_else(|| syntax(line, "expected `context-var: name = v1,v2,...`"))?;
                let domain: Vec<&str> = tokens(domain).collect();
                if domain.is_empty() {
                    return Err(syntax(line, "context variable needs a nonempty domain"));
                }
                u.add_context(name.trim(), &domain)?;
            }
            "axioms" => level = Some(value.parse::<AxiomLevel>().map_err(|_| syntax(line, format!("unknown axiom level `{value}`")))?),
            "symmetry" => {
                symmetric = match value {
                    "symmetric" => true,
                    "directed" => false,
                    _ => return Err(syntax(line, "symmetry must be `symmetric` or `directed`")),
                }
            }
            "closed" => {
                closed = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(syntax(line, "closed must be `true` or `false`")),
                }
            }
            k @ ("triplet" | "elem") => pending.push((line, k, value)),
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        }
    }
    let mut triplets = Vec::new();
    let mut elems = Vec::new();
    for (line, kind, value) in pending {
        let t = parse_triplet_at(&u, value, line)?;
        if kind == "triplet" {
            triplets.push(t);
        } else {
            if !t.is_elementary() {
                return Err(syntax(line, "an elem line needs single variables on both sides"));
            }
            let e = ElementaryTriplet::new(t.left.first().unwrap_or(0), t.right.first().unwrap_or(0), t.cond)
                .with_context(t.ctx);
            elems.push(if symmetric { e.canonical() } else { e });
        }
    }
    triplets.sort_by_key(triplet_key);
    triplets.dedup();
    elems.sort();
    elems.dedup();
    Ok(ModelFile {
        universe: Arc::new(u),
        level: level.unwrap_or(AxiomLevel::Semigraphoid),
        symmetric,
        closed,
        triplets,
        elems,
    })
}

fn triplet_key(t: &Triplet) -> (Context, u128, u128, u128) {
    (t.ctx.clone(), t.left.bits(), t.right.bits(), t.cond.bits())
}

fn fmt_names(u: &Universe, s: VarSet) -> String {
    u.names(s).join(" ")
}

fn fmt_triplet(u: &Universe, left: VarSet, right: VarSet, cond: VarSet, ctx: &Context) -> String {
    let mut out = format!("{} ; {}", fmt_names(u, left), fmt_names(u, right));
    if !cond.is_empty() {
        out.push_str(&format!(" | {}", fmt_names(u, cond)));
    }
    if !ctx.is_empty() {
        let pairs: Vec<String> = ctx
            .bindings()
            .map(|(k, v)| format!("{}={}", u.name(k), u.domain(k).map_or("?", |d| d[v].as_str())))
            .collect();
        out.push_str(&format!(" @ {}", pairs.join(",")));
    }
    out
}

/// Canonical text: declarations in variable order, then sorted triplet and elem lines.
pub fn serialize_model(m: &ModelFile) -> String {
    let u = &m.universe;
    let mut out = String::new();
    if let Ok(r) = Regime::from_universe(u.clone()) {
        if r.n() > 0 {
            out.push_str(&format!("regime: {}\n", fmt_names(u, r.base())));
        }
    } else {
        let mut run: Vec<&str> = Vec::new();
        for (i, v) in u.vars().iter().enumerate() {
            match u.domain(i) {
                None => run.push(&v.name),
                Some(d) => {
                    if !run.is_empty() {
                        out.push_str(&format!("vars: {}\n", run.join(" ")));
                        run.clear();
                    }
                    out.push_str(&format!("context-var: {} = {}\n", v.name, d.join(",")));
                }
            }
        }
        if !run.is_empty() {
            out.push_str(&format!("vars: {}\n", run.join(" ")));
        }
    }
    out.push_str(&format!("axioms: {}\n", m.level));
    if !m.symmetric {
        out.push_str("symmetry: directed\n");
    }
    if m.closed {
        out.push_str("closed: true\n");
    }
    let mut ts = m.triplets.clone();
    ts.sort_by_key(triplet_key);
    ts.dedup();
    for t in &ts {
        out.push_str(&format!("triplet: {}\n", fmt_triplet(u, t.left, t.right, t.cond, &t.ctx)));
    }
    let mut es: Vec<ElementaryTriplet> = m
        .elems
        .iter()
        .map(|e| if m.symmetric { e.canonical() } else { e.clone() })
        .collect();
    es.sort();
    es.dedup();
    for e in &es {
        out.push_str(&format!(
            "elem: {}\n",
            fmt_triplet(u, VarSet::singleton(e.left), VarSet::singleton(e.right), e.cond, &e.ctx)
        ));
    }
    out
}

impl ModelFile {
    /// Stores a model as elem lines.
    pub fn from_model(m: &ElementaryModel) -> Self {
        ModelFile {
            universe: m.universe_arc().clone(),
            level: m.level(),
            symmetric: m.is_symmetric(),
            closed: m.is_closed(),
            triplets: Vec::new(),
            elems: m.triplets(),
        }
    }

    /// The elementary model of the file, closed at `level` (the file's own when `None`).
    /// Fails with `NotClosed` when the file claims to be closed but is not.
    pub fn to_model(&self, level: Option<AxiomLevel>) -> Result<ElementaryModel> {
        let level = level.unwrap_or(self.level);
        let mut m = if self.symmetric {
            ElementaryModel::new(self.universe.clone(), level)
        } else {
            ElementaryModel::directed(self.universe.clone(), level)
        };
        for e in &self.elems {
            m.insert(e.clone())?;
        }
        let stored = m.clone();
        for e in expand_e(&self.universe, &self.triplets)? {
            m.insert(e)?;
        }
        let closed = close_elementary(&m);
        if self.closed && self.triplets.is_empty() && level <= self.level && closed.len() != stored.len() {
            return Err(Error::NotClosed);
        }
        Ok(closed)
    }

    pub fn load(path: &Path) -> Result<Self> {
        parse_model(&std::fs::read_to_string(path)?)
    }
}

/// Reads a CSV table: one column per variable plus a probability column `p`.
/// Probabilities may be decimals or ratios `a/b`. Each variable's domain is
/// the sorted set of values it takes (numerically when all are integers).
pub fn parse_table<R: std::io::Read>(reader: R, eps: f64) -> Result<JointTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let pcol = header
        .iter()
        .position(|h| h == "p")
        .ok_or_else(|| Error::TableMismatch("no `p` column".into()))?;
    let names: Vec<String> = header.iter().enumerate().filter(|&(i, _)| i != pcol).map(|(_, h)| h.clone()).collect();
    let mut raw: Vec<(Vec<String>, f64)> = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        if rec.len() != header.len() {
            return Err(syntax(line, "wrong number of fields"));
        }
        let p = parse_probability(&rec[pcol]).ok_or_else(|| syntax(line, format!("bad probability `{}`", &rec[pcol])))?;
        let vals = rec.iter().enumerate().filter(|&(i, _)| i != pcol).map(|(_, v)| v.to_string()).collect();
        raw.push((vals, p));
    }
    let mut domains: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    for (vals, _) in &raw {
        for (d, v) in domains.iter_mut().zip(vals) {
            if !d.contains(v) {
                d.push(v.clone());
            }
        }
    }
    for d in &mut domains {
        if d.iter().all(|v| v.parse::<i64>().is_ok()) {
            d.sort_by_key(|v| v.parse::<i64>().unwrap_or(0));
        } else {
            d.sort();
        }
    }
    let rows: Vec<(Vec<usize>, f64)> = raw
        .iter()
        .map(|(vals, p)| {
            let idx = vals
                .iter()
                .zip(&domains)
                .map(|(v, d)| d.iter().position(|x| x == v).unwrap_or(0))
                .collect();
            (idx, *p)
        })
        .collect();
    JointTable::from_rows(names, domains, &rows, eps)
}

pub fn load_table(path: &Path, eps: f64) -> Result<JointTable> {
    parse_table(std::fs::File::open(path)?, eps)
}

/// CSV text for `t`, one row per full assignment.
pub fn write_table(t: &JointTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = t.names().iter().map(String::as_str).collect();
    header.push("p");
    w.write_record(&header)?;
    for (vals, p) in t.rows() {
        let mut rec: Vec<String> = vals.iter().zip(t.domains()).map(|(&v, d)| d[v].clone()).collect();
        rec.push(format!("{p}"));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// The closed elementary model of the independences that hold in `t` within `eps`.
///
/// Candidates `i ⟂ j | K` are tested by increasing `|K|`; one already implied by
/// the closure of those found so far is not tested again. The graphoid and
/// compositional levels need a strictly positive table; at the compositional
/// level the extracted graphoid must already be closed under composition.
pub fn extract_model_from_table(t: &JointTable, level: AxiomLevel, eps: f64) -> Result<ElementaryModel> {
    if level >= AxiomLevel::Graphoid && !t.is_positive() {
        return Err(Error::NotPositive);
    }
    let u = Arc::new(Universe::with_base(t.names())?);
    let working = level.min(AxiomLevel::Graphoid);
    let mut m = ElementaryModel::new(u.clone(), working);
    let n = t.len();
    let all = u.all();
    let mut by_size: Vec<VarSet> = all.subsets().collect();
    by_size.sort_by_key(|s| (s.len(), s.bits()));
    for k in by_size {
        let cols: Vec<usize> = k.iter().collect();
        for i in 0..n {
            if k.contains(i) {
                continue;
            }
            for j in i + 1..n {
                if k.contains(j) {
                    continue;
                }
                let cand = ElementaryTriplet::new(i, j, k);
                if m.contains(&cand) || !t.independent(i, j, &cols, eps) {
                    continue;
                }
                extend_closed(&mut m, &[cand])?;
            }
        }
    }
    if level == AxiomLevel::Compositional {
        let before = m.len();
        let c = close_elementary(&m.with_level(AxiomLevel::Compositional));
        if c.len() != before {
            return Err(Error::NotCompositional);
        }
        return Ok(c);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE_ONE: &str = "vars: 1 2 3 4 5 6
axioms: semigraphoid
triplet: 1 2 ; 3 4 | 5
triplet: 1 2 ; 3 4 | 6
triplet: 3 ; 1 4 | 2 5
triplet: 2 3 ; 1 4 | 5
triplet: 5 ; 6
";

    #[test]
    fn example_one_round_trip() {
        let f = parse_model(EXAMPLE_ONE).unwrap();
        assert_eq!(f.triplets.len(), 5);
        assert_eq!(serialize_model(&f), EXAMPLE_ONE);
        assert_eq!(parse_model(&serialize_model(&f)).unwrap(), f);
        let m = f.to_model(None).unwrap();
        assert_eq!(m.oriented_len(), 82);
        let stored = ModelFile::from_model(&m);
        let back = parse_model(&serialize_model(&stored)).unwrap();
        assert_eq!(back.to_model(None).unwrap(), m);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_model("vars: 1 2\ntriplet: 1 ; 1 | 2\n"),
            Err(Error::OverlappingSets)
        );
        assert_eq!(
            parse_model("vars: a b\ntriplet: a ; c\n"),
            Err(Error::UnknownVariable("c".into()))
        );
        assert!(matches!(
            parse_model("vars: a b\n\nbogus: 1\n"),
            Err(Error::Syntax { line: 3, .. })
        ));
        assert!(matches!(parse_model("vars: a b\nelem: a b ; a\n"), Err(Error::OverlappingSets)));
        assert!(matches!(
            parse_model("vars: a b c\nelem: a c ; b\n"),
            Err(Error::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn contexts_and_regimes() {
        let text = "vars: a b\ncontext-var: aux = 0,1\naxioms: graphoid\ntriplet: a ; b @ aux=1\n";
        let f = parse_model(text).unwrap();
        assert_eq!(serialize_model(&f), text);
        let r = "regime: x y\naxioms: compositional\nclosed: true\nelem: x ; y @ F_x=obs,F_y=int\n";
        let f = parse_model(r).unwrap();
        assert_eq!(f.universe.len(), 4);
        assert_eq!(serialize_model(&f), r);
    }

    #[test]
    fn false_closed_claim() {
        let f = parse_model("vars: a b c\nclosed: true\nelem: a ; b\nelem: a ; c | b\n").unwrap();
        assert_eq!(f.to_model(None), Err(Error::NotClosed));
    }

    #[test]
    fn tables() {
        let csv = "a,b,p\n0,0,0.12\n0,1,0.28\n1,0,0.18\n1,1,0.42\n";
        let t = parse_table(csv.as_bytes(), 1e-9).unwrap();
        assert!((t.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let again = parse_table(write_table(&t).unwrap().as_bytes(), 1e-9).unwrap();
        assert_eq!(again.names(), t.names());
        let dup = "a,p\n0,1/2\n0,1/2\n";
        assert_eq!(parse_table(dup.as_bytes(), 1e-9), Err(Error::DuplicateRow(2)));
        let short = "a,p\n0,0.5\n1,0.48\n";
        assert!(matches!(parse_table(short.as_bytes(), 1e-9), Err(Error::NotNormalized(_))));
        let nop = "a,q\n0,1\n";
        assert!(matches!(parse_table(nop.as_bytes(), 1e-9), Err(Error::TableMismatch(_))));
    }

    #[test]
    fn product_table_gives_everything() {
        let t = JointTable::product(vec!["a".into(), "b".into(), "c".into()], &[vec![0.2, 0.8], vec![0.5, 0.5], vec![0.3, 0.7]]).unwrap();
        for level in AxiomLevel::ALL {
            let m = extract_model_from_table(&t, level, 1e-9).unwrap();
            assert_eq!(m.len(), 6);
            assert!(m.is_closed());
        }
    }

    #[test]
    fn zeros_rejected_above_semigraphoid() {
        let csv = "a,b,p\n0,0,1/2\n1,1,1/2\n0,1,0\n1,0,0\n";
        let t = parse_table(csv.as_bytes(), 1e-9).unwrap();
        assert_eq!(extract_model_from_table(&t, AxiomLevel::Graphoid, 1e-9), Err(Error::NotPositive));
        assert!(extract_model_from_table(&t, AxiomLevel::Semigraphoid, 1e-9).unwrap().is_empty());
    }
}
