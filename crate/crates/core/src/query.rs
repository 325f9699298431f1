//! Membership, inclusion, dominant triplets and the grid DAG of a closed model.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::model::{ElementaryModel, ElementarySource};
use crate::triplet::{AxiomLevel, ElementaryTriplet, Triplet};
use crate::universe::Context;
use crate::varset::VarSet;

fn check_query<S: ElementarySource + ?Sized>(
    src: &S,
    left: VarSet,
    right: VarSet,
    cond: VarSet,
    ctx: &Context,
) -> Result<()> {
    if !src.is_closed() {
        return Err(Error::NotClosed);
    }
    Triplet::new(left, right, cond)
        .with_context(ctx.clone())
        .validate(src.universe())
        .map_err(|e| Error::InvalidTriplet(e.to_string()))
}

/// Decides `left ⟂ right | cond` (under `ctx`) in the model represented by `src`,
/// using the test that matches the source's axiom level.
pub fn is_member<S: ElementarySource + ?Sized>(
    src: &S,
    left: VarSet,
    right: VarSet,
    cond: VarSet,
    ctx: &Context,
) -> Result<bool> {
    check_query(src, left, right, cond, ctx)?;
    Ok(member_unchecked(src, src.level(), left, right, cond, ctx))
}

/// [`is_member`] on a [`Triplet`].
pub fn is_member_triplet<S: ElementarySource + ?Sized>(src: &S, t: &Triplet) -> Result<bool> {
    is_member(src, t.left, t.right, t.cond, &t.ctx)
}

/// Membership using the test for `level` rather than the source's own level.
/// Only meaningful when the source is closed under at least `level`.
pub fn is_member_at<S: ElementarySource + ?Sized>(
    src: &S,
    level: AxiomLevel,
    left: VarSet,
    right: VarSet,
    cond: VarSet,
    ctx: &Context,
) -> Result<bool> {
    check_query(src, left, right, cond, ctx)?;
    Ok(member_unchecked(src, level, left, right, cond, ctx))
}

pub(crate) fn member_unchecked<S: ElementarySource + ?Sized>(
    src: &S,
    level: AxiomLevel,
    left: VarSet,
    right: VarSet,
    cond: VarSet,
    ctx: &Context,
) -> bool {
    match level {
        AxiomLevel::Semigraphoid => chain_member(src, left, right, cond, ctx),
        AxiomLevel::Graphoid => left.iter().all(|i| {
            right.iter().all(|j| {
                src.holds(i, j, left.without(i) | right.without(j) | cond, ctx)
            })
        }),
        AxiomLevel::Compositional => left
            .iter()
            .all(|i| right.iter().all(|j| src.holds(i, j, cond, ctx))),
    }
}

/// `i_s ⟂ j_t | i_<s j_<t K` for all s, t, in ascending index order.
fn chain_member<S: ElementarySource + ?Sized>(
    src: &S,
    left: VarSet,
    right: VarSet,
    cond: VarSet,
    ctx: &Context,
) -> bool {
    let mut before_i = VarSet::EMPTY;
    for i in left {
        let mut before_j = VarSet::EMPTY;
        for j in right {
            if !src.holds(i, j, before_i | before_j | cond, ctx) {
                return false;
            }
            before_j.insert(j);
        }
        before_i.insert(i);
    }
    true
}

/// True iff every triplet of `e` is in `e2`, i.e. the model of `e` is included in that of `e2`.
pub fn is_submodel(e: &ElementaryModel, e2: &ElementaryModel) -> Result<bool> {
    e.same_space(e2)?;
    if !e.is_closed() || !e2.is_closed() {
        return Err(Error::NotClosed);
    }
    Ok(e.is_subset_of(e2))
}

/// The dominant triplets of a closed model.
#[derive(Clone, Debug, PartialEq)]
pub struct Dominants {
    /// Every dominant triplet, sorted.
    pub all: Vec<Triplet>,
    /// One representative per mirror pair: the one whose left side has the smaller mask.
    pub non_symmetric: Vec<Triplet>,
}

/// Enumerates the dominant triplets.
///
/// For every conditioning set and context that occurs in the model, the
/// maximal pairs `(I, J)` with `I ⟂ J | K` are found by a pruned search over
/// the free variables, and the ones that survive the minimality test on `K`
/// are kept.
pub fn dominant_triplets(model: &ElementaryModel) -> Result<Dominants> {
    if !model.is_closed() {
        return Err(Error::NotClosed);
    }
    let u = model.universe_arc();
    let level = model.level();
    let mut keys: BTreeSet<(Context, VarSet)> = BTreeSet::new();
    for (ctx, stratum) in model.strata() {
        for c in stratum {
            keys.insert((ctx.clone(), c.cond));
        }
    }

    let mut found: BTreeSet<Triplet> = BTreeSet::new();
    for (ctx, cond) in keys {
        let free: Vec<usize> = (u.all() - ctx.keys() - cond).iter().collect();
        let member = |l: VarSet, r: VarSet, k: VarSet| member_unchecked(model, level, l, r, k, &ctx);
        let mut pairs = Vec::new();
        grow_pairs(&free, 0, VarSet::EMPTY, VarSet::EMPTY, &|l, r| member(l, r, cond), &mut pairs);
        for (l, r) in pairs {
            let maximal = free.iter().all(|&x| {
                l.contains(x)
                    || r.contains(x)
                    || (!member(l.with(x), r, cond) && !member(l, r.with(x), cond))
            });
            if !maximal {
                continue;
            }
            let minimal = cond.iter().all(|k| {
                let rest = cond.without(k);
                !member(l.with(k), r, rest) && !member(l, r.with(k), rest)
            });
            if minimal {
                found.insert(Triplet::new(l, r, cond).with_context(ctx.clone()));
            }
        }
    }

    let all: Vec<Triplet> = found.iter().cloned().collect();
    let non_symmetric = if model.is_symmetric() {
        found
            .iter()
            .filter(|t| !found.contains(&t.mirrored()) || t.left.bits() < t.right.bits())
            .cloned()
            .collect()
    } else {
        all.clone()
    };
    Ok(Dominants { all, non_symmetric })
}

/// Depth-first assignment of each free variable to the left side, the right
/// side or neither, keeping only member pairs. Membership is closed under
/// shrinking either side, so a failing partial pair prunes its subtree.
fn grow_pairs(
    free: &[usize],
    pos: usize,
    l: VarSet,
    r: VarSet,
    member: &dyn Fn(VarSet, VarSet) -> bool,
    out: &mut Vec<(VarSet, VarSet)>,
) {
    if !l.is_empty() && !r.is_empty() && !member(l, r) {
        return;
    }
    if pos == free.len() {
        if !l.is_empty() && !r.is_empty() {
            out.push((l, r));
        }
        return;
    }
    let x = free[pos];
    grow_pairs(free, pos + 1, l, r, member, out);
    grow_pairs(free, pos + 1, l.with(x), r, member, out);
    grow_pairs(free, pos + 1, l, r.with(x), member, out);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    /// `i ⟂ k | L → i ⟂ j | kL`
    Solid,
    /// `k ⟂ j | L ⇢ i ⟂ j | kL`
    Dashed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridNode {
    pub triplet: ElementaryTriplet,
    /// False for the mirror copy `j ⟂ i | K` of a stored `i ⟂ j | K`.
    pub canonical: bool,
}

/// The DAG whose nodes are the oriented elementary triplets of a model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GridDag {
    pub nodes: Vec<GridNode>,
    /// `(from, to, kind)` as indices into `nodes`, sorted.
    pub edges: Vec<(usize, usize, EdgeKind)>,
}

type NodeKey = (Context, usize, usize, VarSet);

impl GridDag {
    fn index(&self) -> HashMap<NodeKey, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(n, g)| {
                let t = &g.triplet;
                ((t.ctx.clone(), t.left, t.right, t.cond), n)
            })
            .collect()
    }

    pub fn node_index(&self, t: &ElementaryTriplet) -> Option<usize> {
        self.nodes.iter().position(|g| &g.triplet == t)
    }

    pub fn has_edge(&self, from: &ElementaryTriplet, to: &ElementaryTriplet, kind: EdgeKind) -> bool {
        match (self.node_index(from), self.node_index(to)) {
            (Some(a), Some(b)) => self.edges.binary_search(&(a, b, kind)).is_ok(),
            _ => false,
        }
    }
}

/// Builds the grid DAG, mirror copies included.
pub fn grid_dag(model: &ElementaryModel) -> Result<GridDag> {
    if !model.is_closed() {
        return Err(Error::NotClosed);
    }
    let mut nodes = Vec::new();
    for t in model.triplets() {
        let canonical = !model.is_symmetric() || t.left < t.right;
        if model.is_symmetric() {
            nodes.push(GridNode {
                triplet: t.mirrored(),
                canonical: !canonical,
            });
        }
        nodes.push(GridNode { triplet: t, canonical });
    }
    nodes.sort_by(|a, b| a.triplet.cmp(&b.triplet));
    let mut dag = GridDag { nodes, edges: Vec::new() };
    let index = dag.index();
    let mut edges = Vec::new();
    for (to, g) in dag.nodes.iter().enumerate() {
        let t = &g.triplet;
        for k in t.cond {
            let l = t.cond.without(k);
            if let Some(&from) = index.get(&(t.ctx.clone(), t.left, k, l)) {
                edges.push((from, to, EdgeKind::Solid));
            }
            if let Some(&from) = index.get(&(t.ctx.clone(), k, t.right, l)) {
                edges.push((from, to, EdgeKind::Dashed));
            }
        }
    }
    edges.sort();
    dag.edges = edges;
    Ok(dag)
}

/// Which nodes of the grid DAG a grid search may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridScope {
    Full,
    /// Only nodes `i ⟂ j | K` with `i < j`.
    CanonicalHalf,
}

/// An `m × n` grid: node `(s, t)` is `rows[s] ⟂ cols[t] | rows[..s] cols[..t] cond`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Grid {
    pub ctx: Context,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub cond: VarSet,
}

impl Grid {
    pub fn node(&self, s: usize, t: usize) -> ElementaryTriplet {
        let k = self.cond
            | VarSet::from_indices(self.rows[..s].iter().copied())
            | VarSet::from_indices(self.cols[..t].iter().copied());
        ElementaryTriplet::new(self.rows[s], self.cols[t], k).with_context(self.ctx.clone())
    }

    pub fn nodes(&self) -> Vec<Vec<ElementaryTriplet>> {
        (0..self.rows.len())
            .map(|s| (0..self.cols.len()).map(|t| self.node(s, t)).collect())
            .collect()
    }

    /// The triplet `I ⟂ J | K` certified by the grid.
    pub fn triplet(&self) -> Triplet {
        Triplet::new(
            VarSet::from_indices(self.rows.iter().copied()),
            VarSet::from_indices(self.cols.iter().copied()),
            self.cond,
        )
        .with_context(self.ctx.clone())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }
}

struct GridSpace {
    present: HashSet<NodeKey>,
}

impl GridSpace {
    fn has(&self, ctx: &Context, i: usize, j: usize, k: VarSet) -> bool {
        self.present.contains(&(ctx.clone(), i, j, k))
    }

    fn row_fits(&self, g: &Grid, i: usize, before: VarSet) -> bool {
        let mut k = g.cond | before;
        for &j in &g.cols {
            if !self.has(&g.ctx, i, j, k) {
                return false;
            }
            k.insert(j);
        }
        true
    }

    fn col_fits(&self, g: &Grid, j: usize, before: VarSet) -> bool {
        let mut k = g.cond | before;
        for &i in &g.rows {
            if !self.has(&g.ctx, i, j, k) {
                return false;
            }
            k.insert(i);
        }
        true
    }

    fn is_maximal(&self, g: &Grid, free: VarSet) -> bool {
        let rows = VarSet::from_indices(g.rows.iter().copied());
        let cols = VarSet::from_indices(g.cols.iter().copied());
        for x in free - rows - cols - g.cond {
            if self.row_fits(g, x, rows) || self.col_fits(g, x, cols) {
                return false;
            }
        }
        for k in g.cond {
            let shrunk = Grid {
                cond: g.cond.without(k),
                ..g.clone()
            };
            if self.row_fits(&shrunk, k, VarSet::EMPTY) || self.col_fits(&shrunk, k, VarSet::EMPTY) {
                return false;
            }
        }
        true
    }
}

/// All maximal grids of the DAG within `scope`, sorted.
pub fn maximal_grids(dag: &GridDag, scope: GridScope) -> Vec<Grid> {
    let present: HashSet<NodeKey> = dag
        .nodes
        .iter()
        .filter(|g| scope == GridScope::Full || g.triplet.left < g.triplet.right)
        .map(|g| {
            let t = &g.triplet;
            (t.ctx.clone(), t.left, t.right, t.cond)
        })
        .collect();
    let mut vars: HashMap<Context, VarSet> = HashMap::new();
    for (ctx, i, j, _) in &present {
        let v = vars.entry(ctx.clone()).or_default();
        v.insert(*i);
        v.insert(*j);
    }
    let space = GridSpace { present };
    let mut out = BTreeSet::new();
    for (ctx, i, j, k) in &space.present {
        let free = vars[ctx];
        let start = Grid {
            ctx: ctx.clone(),
            rows: vec![*i],
            cols: vec![*j],
            cond: *k,
        };
        grow_cols(&space, start, free, &mut out);
    }
    out.into_iter().collect()
}

fn used(g: &Grid) -> VarSet {
    g.cond | VarSet::from_indices(g.rows.iter().chain(&g.cols).copied())
}

fn grow_cols(space: &GridSpace, g: Grid, free: VarSet, out: &mut BTreeSet<Grid>) {
    grow_rows(space, g.clone(), free, out);
    let cols = VarSet::from_indices(g.cols.iter().copied());
    for x in free - used(&g) {
        if space.col_fits(&g, x, cols) {
            let mut next = g.clone();
            next.cols.push(x);
            grow_cols(space, next, free, out);
        }
    }
}

fn grow_rows(space: &GridSpace, g: Grid, free: VarSet, out: &mut BTreeSet<Grid>) {
    if space.is_maximal(&g, free) {
        out.insert(g.clone());
    }
    let rows = VarSet::from_indices(g.rows.iter().copied());
    for x in free - used(&g) {
        if space.row_fits(&g, x, rows) {
            let mut next = g.clone();
            next.rows.push(x);
            grow_rows(space, next, free, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::{close_elementary, expand_model};
    use crate::universe::Universe;
    use std::sync::Arc;

    fn dec(s: &[usize]) -> VarSet {
        s.iter().map(|x| x - 1).collect()
    }

    fn t(l: &[usize], r: &[usize], c: &[usize]) -> Triplet {
        Triplet::new(dec(l), dec(r), dec(c))
    }

    fn example_two(level: AxiomLevel) -> ElementaryModel {
        let u = Arc::new(Universe::with_base(&["1", "2", "3", "4", "5", "6"]).unwrap());
        close_elementary(&expand_model(u, level, &[t(&[1, 2], &[4, 5, 6], &[]), t(&[1, 2, 3], &[4], &[])]).unwrap())
    }

    #[test]
    fn membership_of_seeds() {
        let m = example_two(AxiomLevel::Semigraphoid);
        let c = Context::empty();
        assert!(is_member(&m, dec(&[1, 2]), dec(&[4, 5, 6]), VarSet::EMPTY, &c).unwrap());
        assert!(is_member(&m, dec(&[4, 5, 6]), dec(&[1, 2]), VarSet::EMPTY, &c).unwrap());
        assert!(is_member(&m, dec(&[1, 2, 3]), dec(&[4]), VarSet::EMPTY, &c).unwrap());
        assert!(!is_member(&m, dec(&[1, 2, 3]), dec(&[4, 5]), VarSet::EMPTY, &c).unwrap());
        assert!(matches!(
            is_member(&m, dec(&[1]), dec(&[1]), VarSet::EMPTY, &c),
            Err(Error::InvalidTriplet(_))
        ));
    }

    #[test]
    fn membership_needs_closed_model() {
        let u = Arc::new(Universe::with_base(&["a", "b"]).unwrap());
        let m = expand_model(u, AxiomLevel::Semigraphoid, &[Triplet::new(VarSet::singleton(0), VarSet::singleton(1), VarSet::EMPTY)]).unwrap();
        assert_eq!(
            is_member(&m, VarSet::singleton(0), VarSet::singleton(1), VarSet::EMPTY, &Context::empty()),
            Err(Error::NotClosed)
        );
    }

    #[test]
    fn example_two_dominants() {
        let m = example_two(AxiomLevel::Semigraphoid);
        let d = dominant_triplets(&m).unwrap();
        assert_eq!(d.non_symmetric, vec![t(&[1, 2], &[4, 5, 6], &[]), t(&[1, 2, 3], &[4], &[])]);
        assert_eq!(d.all.len(), 4);
    }

    #[test]
    fn trivial_dominants() {
        let u = Arc::new(Universe::with_base(&["1", "2"]).unwrap());
        let m = close_elementary(&expand_model(u, AxiomLevel::Semigraphoid, &[t(&[1], &[2], &[])]).unwrap());
        let d = dominant_triplets(&m).unwrap();
        assert_eq!(d.all, vec![t(&[1], &[2], &[]), t(&[2], &[1], &[])]);
        assert_eq!(d.non_symmetric, vec![t(&[1], &[2], &[])]);
    }

    #[test]
    fn submodel_checks() {
        let m = example_two(AxiomLevel::Semigraphoid);
        let small = close_elementary(
            &expand_model(m.universe_arc().clone(), AxiomLevel::Semigraphoid, &[t(&[1], &[4], &[])]).unwrap(),
        );
        assert!(is_submodel(&small, &m).unwrap());
        assert!(!is_submodel(&m, &small).unwrap());
        assert!(is_submodel(&m, &m).unwrap());
        let empty = ElementaryModel::new(m.universe_arc().clone(), AxiomLevel::Semigraphoid);
        assert!(is_submodel(&empty, &m).unwrap());
        let other = ElementaryModel::new(Arc::new(Universe::with_base(&["a"]).unwrap()), AxiomLevel::Semigraphoid);
        assert_eq!(is_submodel(&other, &m), Err(Error::UniverseMismatch));
    }

    #[test]
    fn grid_dag_shape_and_edges() {
        let m = example_two(AxiomLevel::Semigraphoid);
        let g = grid_dag(&m).unwrap();
        assert_eq!(g.nodes.len(), 112);
        assert_eq!(g.nodes.len(), m.oriented_len());
        let a = ElementaryTriplet::new(0, 5, VarSet::EMPTY);
        let b = ElementaryTriplet::new(0, 4, dec(&[6]));
        assert!(g.has_edge(&a, &b, EdgeKind::Solid));
        // Mirror copy swaps the edge kind.
        assert!(g.has_edge(&a.mirrored(), &b.mirrored(), EdgeKind::Dashed));
        let empty = ElementaryModel::new(m.universe_arc().clone(), AxiomLevel::Semigraphoid);
        assert_eq!(grid_dag(&empty).unwrap(), GridDag::default());
    }

    #[test]
    fn example_two_grids() {
        let m = example_two(AxiomLevel::Semigraphoid);
        let g = grid_dag(&m).unwrap();
        let half = maximal_grids(&g, GridScope::CanonicalHalf);
        assert_eq!(half.len(), 18);
        assert_eq!(half.iter().filter(|g| g.shape() == (2, 3)).count(), 12);
        assert_eq!(half.iter().filter(|g| g.shape() == (3, 1)).count(), 6);
        let full = maximal_grids(&g, GridScope::Full);
        assert_eq!(full.len(), 36);
        for grid in &full {
            assert!(is_member_triplet(&m, &grid.triplet()).unwrap());
        }
        let sample = Grid {
            ctx: Context::empty(),
            rows: vec![1, 0],
            cols: vec![4, 5],
            cond: dec(&[4]),
        };
        let nodes = sample.nodes();
        assert_eq!(nodes[0][0], ElementaryTriplet::new(1, 4, dec(&[4])));
        assert_eq!(nodes[1][1], ElementaryTriplet::new(0, 5, dec(&[2, 4, 5])));
        for row in nodes {
            for n in row {
                assert!(m.contains(&n));
            }
        }
    }

    #[test]
    fn single_node_grid() {
        let u = Arc::new(Universe::with_base(&["1", "2"]).unwrap());
        let m = close_elementary(&expand_model(u, AxiomLevel::Semigraphoid, &[t(&[1], &[2], &[])]).unwrap());
        let grids = maximal_grids(&grid_dag(&m).unwrap(), GridScope::CanonicalHalf);
        assert_eq!(grids.len(), 1);
        assert_eq!(grids[0].shape(), (1, 1));
    }
}
