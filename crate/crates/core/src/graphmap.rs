//! DAGs over the base variables of a universe: d-separation, induced models,
//! minimal independence maps and perfect-map search.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::closure::{close_elementary, expand_e};
use crate::error::{Error, Result};
use crate::model::{ElementaryModel, ElementarySource};
use crate::table::JointTable;
use crate::triplet::{AxiomLevel, ElementaryTriplet, Triplet};
use crate::universe::{Context, Universe};
use crate::varset::VarSet;

/// Largest universe accepted by [`has_perfect_map`] by default.
pub const PM_NODE_LIMIT: usize = 8;

/// A directed acyclic graph whose nodes are the variables of a universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag {
    universe: Arc<Universe>,
    parents: Vec<VarSet>,
}

impl Dag {
    /// The edgeless graph.
    pub fn empty(universe: Arc<Universe>) -> Self {
        let n = universe.len();
        Dag {
            universe,
            parents: vec![VarSet::EMPTY; n],
        }
    }

    pub fn from_edges(universe: Arc<Universe>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Dag::empty(universe);
        for &(a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn from_parents(universe: Arc<Universe>, parents: Vec<VarSet>) -> Result<Self> {
        if parents.len() != universe.len() {
            return Err(Error::InvalidSets("one parent set per variable is required".into()));
        }
        let all = universe.all();
        if let Some(bad) = parents.iter().find_map(|p| (*p - all).first()) {
            return Err(Error::IndexOutOfRange(bad));
        }
        let g = Dag { universe, parents };
        if g.topological_order().is_none() {
            return Err(Error::Cyclic);
        }
        Ok(g)
    }

    /// The complete DAG in which every variable points to all later ones in `order`.
    pub fn complete(universe: Arc<Universe>, order: &[usize]) -> Result<Self> {
        let mut parents = vec![VarSet::EMPTY; universe.len()];
        for (s, &v) in order.iter().enumerate() {
            parents[v] = VarSet::from_indices(order[..s].iter().copied());
        }
        Dag::from_parents(universe, parents)
    }

    /// Adds `a → b`, rejecting self-loops and cycles.
    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        let n = self.parents.len();
        for v in [a, b] {
            if v >= n {
                return Err(Error::IndexOutOfRange(v));
            }
        }
        if a == b || self.ancestors(VarSet::singleton(a)).contains(b) {
            return Err(Error::Cyclic);
        }
        self.parents[b].insert(a);
        Ok(())
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.parents[b].remove(a);
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn parents(&self, v: usize) -> VarSet {
        self.parents[v]
    }

    pub fn parent_sets(&self) -> &[VarSet] {
        &self.parents
    }

    pub fn children(&self, v: usize) -> VarSet {
        (0..self.len()).filter(|&c| self.parents[c].contains(v)).collect()
    }

    /// All edges `(a, b)` for `a → b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(b, ps)| ps.iter().map(move |a| (a, b)))
            .collect();
        out.sort();
        out
    }

    /// `s` together with all its ancestors.
    pub fn ancestors(&self, s: VarSet) -> VarSet {
        ancestors_of(&self.parents, s)
    }

    /// A topological order, smallest index first among ready nodes; `None` if cyclic.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.len();
        let mut placed = VarSet::EMPTY;
        let mut order = Vec::with_capacity(n);
        while order.len() < n {
            let next = (0..n).find(|&v| !placed.contains(v) && self.parents[v].is_subset(placed))?;
            placed.insert(next);
            order.push(next);
        }
        Some(order)
    }

    /// Parses an edge list: one `a -> b` per line, or a bare name to declare an
    /// isolated node. Blank lines and `#` comments are ignored. Nodes are
    /// indexed in order of first appearance.
    pub fn parse_edge_list(text: &str) -> Result<Dag> {
        let mut u = Universe::new();
        let mut edges = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |m: &str| Error::Syntax {
                line: ln + 1,
                message: m.to_string(),
            };
            let mut node = |name: &str| -> Result<usize> {
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(syntax(&format!("bad node name `{name}`")));
                }
                match u.index_of(name) {
                    Some(i) => Ok(i),
                    None => u.add_base(name),
                }
            };
            match line.split_once("->") {
                Some((a, b)) => {
                    let a = node(a.trim())?;
                    let b = node(b.trim())?;
                    edges.push((a, b));
                }
                None => {
                    node(line)?;
                }
            }
        }
        Dag::from_edges(Arc::new(u), &edges)
    }

    /// Edge-list text accepted by [`Dag::parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let touched: VarSet = self.edges().iter().flat_map(|&(a, b)| [a, b]).collect();
        for v in 0..self.len() {
            if !touched.contains(v) {
                let _ = writeln!(out, "{}", self.universe.name(v));
            }
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "{} -> {}", self.universe.name(a), self.universe.name(b));
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph G {\n");
        for v in 0..self.len() {
            let _ = writeln!(out, "  \"{}\";", self.universe.name(v));
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  \"{}\" -> \"{}\";", self.universe.name(a), self.universe.name(b));
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn ancestors_of(parents: &[VarSet], s: VarSet) -> VarSet {
    let mut seen = s;
    let mut stack: Vec<usize> = s.iter().collect();
    while let Some(v) = stack.pop() {
        for p in parents[v] {
            if !seen.contains(p) {
                seen.insert(p);
                stack.push(p);
            }
        }
    }
    seen
}

/// True iff every path between `x` and `y` is blocked by `z`.
pub fn d_separated(g: &Dag, x: VarSet, y: VarSet, z: VarSet) -> bool {
    dsep_parents(&g.parents, x, y, z)
}

/// d-separation on a graph given as parent sets, by reachability over
/// (node, direction) states.
pub(crate) fn dsep_parents(parents: &[VarSet], x: VarSet, y: VarSet, z: VarSet) -> bool {
    let n = parents.len();
    let mut children = vec![VarSet::EMPTY; n];
    for (c, ps) in parents.iter().enumerate() {
        for p in *ps {
            children[p].insert(c);
        }
    }
    let anc_z = ancestors_of(parents, z);
    // Directions: arrived from a child (going up) or from a parent (going down).
    let mut up = VarSet::EMPTY;
    let mut down = VarSet::EMPTY;
    let mut queue: VecDeque<(usize, bool)> = x.iter().map(|v| (v, true)).collect();
    while let Some((v, from_child)) = queue.pop_front() {
        let seen = if from_child { &mut up } else { &mut down };
        if seen.contains(v) {
            continue;
        }
        seen.insert(v);
        if !z.contains(v) && y.contains(v) {
            return false;
        }
        if from_child {
            if !z.contains(v) {
                for p in parents[v] {
                    queue.push_back((p, true));
                }
                for c in children[v] {
                    queue.push_back((c, false));
                }
            }
        } else {
            if !z.contains(v) {
                for c in children[v] {
                    queue.push_back((c, false));
                }
            }
            if anc_z.contains(v) {
                for p in parents[v] {
                    queue.push_back((p, true));
                }
            }
        }
    }
    true
}

/// Every elementary triplet `i ⟂ j | K` that holds by d-separation in `g`.
pub fn induced_elementary_model(g: &Dag) -> ElementaryModel {
    let n = g.len();
    let mut m = ElementaryModel::new(g.universe.clone(), AxiomLevel::Compositional);
    for i in 0..n {
        for j in i + 1..n {
            let rest = g.universe.all().without(i).without(j);
            for k in rest.subsets() {
                if d_separated(g, VarSet::singleton(i), VarSet::singleton(j), k) {
                    m.insert(ElementaryTriplet::new(i, j, k)).expect("valid by construction");
                }
            }
        }
    }
    m.set_closed(true);
    m
}

fn holds_either<S: ElementarySource + ?Sized>(src: &S, i: usize, y: usize, cond: VarSet, ctx: &Context) -> bool {
    src.holds(i, y, cond, ctx) || src.holds(y, i, cond, ctx)
}

/// The candidate parent sets of `i` among `x`: the ends of every longest chain
/// `i ⟂ j₁ | X∖j₁…jₙ → … → i ⟂ jₙ | X∖jₙ`, or `{x}` when no chain exists.
/// Sorted by size, then mask.
pub fn all_pa(model: &ElementaryModel, i: usize, x: VarSet) -> Result<Vec<VarSet>> {
    if !model.is_closed() {
        return Err(Error::NotClosed);
    }
    if x.contains(i) {
        return Err(Error::InvalidSets(format!("variable {i} is among its own candidate parents")));
    }
    Ok(all_pa_in(model, i, x, &Context::empty()))
}

pub(crate) fn all_pa_in<S: ElementarySource + ?Sized>(src: &S, i: usize, x: VarSet, ctx: &Context) -> Vec<VarSet> {
    let mut ends: BTreeSet<(usize, u128)> = BTreeSet::new();
    let mut seen: HashSet<VarSet> = HashSet::new();
    let mut stack = vec![x];
    while let Some(y) = stack.pop() {
        if !seen.insert(y) {
            continue;
        }
        let mut extended = false;
        for v in y {
            let rest = y.without(v);
            if holds_either(src, i, v, rest, ctx) {
                extended = true;
                stack.push(rest);
            }
        }
        if !extended && y != x {
            ends.insert((y.len(), y.bits()));
        }
    }
    if ends.is_empty() {
        return vec![x];
    }
    ends.into_iter().map(|(_, b)| VarSet::from_bits(b)).collect()
}

/// A minimal independence map of the model relative to `order`, taking the
/// smallest candidate parent set (then smallest mask) at every step.
pub fn build_mim(model: &ElementaryModel, order: &[usize]) -> Result<Dag> {
    if !model.is_closed() {
        return Err(Error::NotClosed);
    }
    let u = model.universe_arc().clone();
    check_order(&u, order)?;
    let mut parents = vec![VarSet::EMPTY; u.len()];
    for (s, &v) in order.iter().enumerate() {
        let before = VarSet::from_indices(order[..s].iter().copied());
        parents[v] = all_pa_in(model, v, before, &Context::empty())[0];
    }
    Dag::from_parents(u, parents)
}

fn check_order(u: &Universe, order: &[usize]) -> Result<()> {
    let set = VarSet::from_indices(order.iter().copied());
    if order.len() != u.len() || set != u.all() {
        return Err(Error::InvalidSets("ordering must be a permutation of the variables".into()));
    }
    Ok(())
}

/// Searches for an ordering and DAG whose separations are exactly the model.
pub fn has_perfect_map(model: &ElementaryModel) -> Result<Option<(Vec<usize>, Dag)>> {
    has_perfect_map_limited(model, PM_NODE_LIMIT)
}

pub fn has_perfect_map_limited(model: &ElementaryModel, limit: usize) -> Result<Option<(Vec<usize>, Dag)>> {
    if !model.is_closed() {
        return Err(Error::NotClosed);
    }
    let u = model.universe_arc().clone();
    if u.len() > limit {
        return Err(Error::UniverseTooLarge { size: u.len(), limit });
    }
    if !u.context_set().is_empty() {
        return Err(Error::InvalidSets("perfect-map search needs a universe without context variables".into()));
    }
    let mut search = PmSearch {
        model,
        target: model.triplets().into_iter().collect(),
        failed: HashSet::new(),
        order: Vec::new(),
        parents: vec![VarSet::EMPTY; u.len()],
    };
    if search.run(VarSet::EMPTY, BTreeSet::new()) {
        let dag = Dag::from_parents(u, search.parents.clone())?;
        Ok(Some((search.order, dag)))
    } else {
        Ok(None)
    }
}

struct PmSearch<'a> {
    model: &'a ElementaryModel,
    target: BTreeSet<ElementaryTriplet>,
    failed: HashSet<(VarSet, Vec<ElementaryTriplet>)>,
    order: Vec<usize>,
    parents: Vec<VarSet>,
}

impl PmSearch<'_> {
    fn run(&mut self, visited: VarSet, marked: BTreeSet<ElementaryTriplet>) -> bool {
        let u = self.model.universe_arc().clone();
        let key = (visited, marked.iter().cloned().collect::<Vec<_>>());
        if self.failed.contains(&key) {
            return false;
        }
        if visited == u.all() {
            let mut m = ElementaryModel::new(u.clone(), AxiomLevel::Semigraphoid);
            for t in &marked {
                m.insert(t.clone()).expect("marked triplets are valid");
            }
            let closed = close_elementary(&m);
            let ok = closed.triplets().into_iter().collect::<BTreeSet<_>>() == self.target;
            if !ok {
                self.failed.insert(key);
            }
            return ok;
        }
        for i in u.all() - visited {
            for pa in all_pa_in(self.model, i, visited, &Context::empty()) {
                let mut next = marked.clone();
                let rest = visited - pa;
                if !rest.is_empty() {
                    let single = VarSet::singleton(i);
                    let derived = [Triplet::new(single, rest, pa), Triplet::new(rest, single, pa)];
                    next.extend(expand_e(&u, &derived).expect("valid by construction"));
                }
                self.order.push(i);
                self.parents[i] = pa;
                if self.run(visited.with(i), next) {
                    return true;
                }
                self.order.pop();
                self.parents[i] = VarSet::EMPTY;
            }
        }
        self.failed.insert(key);
        false
    }
}

/// Checks `p(V) = Π p(v | Pa(v))` pointwise within `eps`.
pub fn verify_factorization(g: &Dag, table: &JointTable, eps: f64) -> Result<bool> {
    let u = g.universe();
    if table.len() != g.len() {
        return Err(Error::TableMismatch(format!(
            "graph has {} variables, table has {}",
            g.len(),
            table.len()
        )));
    }
    let cols: Vec<usize> = (0..g.len())
        .map(|v| {
            table
                .column(u.name(v))
                .ok_or_else(|| Error::TableMismatch(format!("`{}` is not a table column", u.name(v))))
        })
        .collect::<Result<_>>()?;
    let cards = table.cards();
    // For each node: marginal over (parents, node) and over parents.
    let families: Vec<(Vec<usize>, Vec<f64>, Vec<f64>)> = (0..g.len())
        .map(|v| {
            let pa: Vec<usize> = g.parents(v).iter().map(|p| cols[p]).collect();
            let mut fam = pa.clone();
            fam.push(cols[v]);
            (fam.clone(), table.marginal(&fam), table.marginal(&pa))
        })
        .collect();
    for (vals, p) in table.rows() {
        let mut prod = 1.0;
        for (fam, joint, margin) in &families {
            let mut jk = 0;
            let mut mk = 0;
            for (pos, &c) in fam.iter().enumerate() {
                jk = jk * cards[c] + vals[c];
                if pos + 1 < fam.len() {
                    mk = mk * cards[c] + vals[c];
                }
            }
            if margin[mk] <= 0.0 {
                prod = 0.0;
                break;
            }
            prod *= joint[jk] / margin[mk];
        }
        if (prod - p).abs() > eps {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag(text: &str) -> Dag {
        Dag::parse_edge_list(text).unwrap()
    }

    fn s(g: &Dag, names: &[&str]) -> VarSet {
        g.universe().set_of(names).unwrap()
    }

    #[test]
    fn chain_and_collider() {
        let g = dag("a -> b\nb -> c");
        assert!(d_separated(&g, s(&g, &["a"]), s(&g, &["c"]), s(&g, &["b"])));
        assert!(!d_separated(&g, s(&g, &["a"]), s(&g, &["c"]), VarSet::EMPTY));
        let g = dag("a -> c\nb -> c");
        assert!(d_separated(&g, s(&g, &["a"]), s(&g, &["b"]), VarSet::EMPTY));
        assert!(!d_separated(&g, s(&g, &["a"]), s(&g, &["b"]), s(&g, &["c"])));
    }

    #[test]
    fn collider_descendant_opens() {
        let g = dag("a -> c\nb -> c\nc -> d");
        assert!(!d_separated(&g, s(&g, &["a"]), s(&g, &["b"]), s(&g, &["d"])));
    }

    #[test]
    fn cycles_rejected() {
        assert_eq!(Dag::parse_edge_list("a -> b\nb -> a"), Err(Error::Cyclic));
        assert_eq!(Dag::parse_edge_list("a -> a"), Err(Error::Cyclic));
    }

    #[test]
    fn edge_list_round_trip() {
        let g = dag("# comment\nx\na -> b\nb -> c\n");
        let again = Dag::parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(again.edges().len(), 2);
        assert_eq!(again.to_edge_list(), g.to_edge_list());
        assert!(g.to_dot().contains("\"a\" -> \"b\";"));
    }

    #[test]
    fn induced_models_extremes() {
        let u = Arc::new(Universe::with_base(&["a", "b", "c"]).unwrap());
        let empty = induced_elementary_model(&Dag::empty(u.clone()));
        assert_eq!(empty.len(), 3 * 2);
        let full = induced_elementary_model(&Dag::complete(u, &[0, 1, 2]).unwrap());
        assert!(full.is_empty());
    }

    #[test]
    fn chain_mim_recovered() {
        let g = dag("a -> b\nb -> c");
        let m = induced_elementary_model(&g);
        assert_eq!(all_pa(&m, 2, s(&g, &["a", "b"])).unwrap(), vec![s(&g, &["b"])]);
        assert_eq!(build_mim(&m, &[0, 1, 2]).unwrap(), g);
        assert_eq!(all_pa(&m, 0, VarSet::EMPTY).unwrap(), vec![VarSet::EMPTY]);
    }

    #[test]
    fn no_independence_gives_complete_mim() {
        let u = Arc::new(Universe::with_base(&["a", "b", "c"]).unwrap());
        let m = ElementaryModel::new(u.clone(), AxiomLevel::Semigraphoid);
        assert_eq!(all_pa(&m, 2, VarSet::from_indices([0, 1])).unwrap(), vec![VarSet::from_indices([0, 1])]);
        let g = build_mim(&m, &[2, 0, 1]).unwrap();
        assert_eq!(g, Dag::complete(u, &[2, 0, 1]).unwrap());
    }

    #[test]
    fn perfect_map_found_and_refused() {
        let g = dag("a -> c\nb -> c\nc -> d");
        let m = induced_elementary_model(&g);
        let (_, pm) = has_perfect_map(&m).unwrap().expect("generated by a DAG");
        assert_eq!(induced_elementary_model(&pm), m);

        let u = Arc::new(Universe::with_base(&["x", "y", "z"]).unwrap());
        let mut bad = ElementaryModel::new(u, AxiomLevel::Semigraphoid);
        bad.insert(ElementaryTriplet::new(0, 1, VarSet::EMPTY)).unwrap();
        bad.insert(ElementaryTriplet::new(0, 1, VarSet::singleton(2))).unwrap();
        let bad = close_elementary(&bad);
        assert_eq!(has_perfect_map(&bad).unwrap(), None);
    }

    #[test]
    fn factorization_checks() {
        let g = dag("a\nb");
        let t = JointTable::product(vec!["a".into(), "b".into()], &[vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        assert!(verify_factorization(&g, &t, 1e-12).unwrap());
        let d = vec![vec!["0".to_string(), "1".to_string()]; 2];
        let rows = [(vec![0, 0], 0.4), (vec![0, 1], 0.1), (vec![1, 0], 0.1), (vec![1, 1], 0.4)];
        let corr = JointTable::from_rows(vec!["a".into(), "b".into()], d, &rows, 1e-9).unwrap();
        assert!(!verify_factorization(&g, &corr, 1e-9).unwrap());
        assert!(verify_factorization(&dag("a -> b"), &corr, 1e-12).unwrap());
        let other = JointTable::product(vec!["a".into()], &[vec![0.5, 0.5]]).unwrap();
        assert!(matches!(verify_factorization(&g, &other, 1e-9), Err(Error::TableMismatch(_))));
    }
}
