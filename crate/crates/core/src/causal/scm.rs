//! Causal graphs with latent variables, the regime model they induce, and
//! random structural models used to check estimands numerically.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Regime, INT};
use crate::error::{Error, Result};
use crate::graphmap::{dsep_parents, Dag};
use crate::model::{ElementaryModel, ElementarySource};
use crate::table::{decode_into, Conditional, JointTable, DEFAULT_EPS};
use crate::triplet::{AxiomLevel, ElementaryTriplet};
use crate::universe::{Context, Universe};
use crate::varset::VarSet;

/// Largest number of nodes (observed and latent) handled by full enumeration.
pub const ENUMERATION_LIMIT: usize = 12;

/// Largest number of observed variables for [`RegimeDsepModel::materialize`].
pub const MATERIALIZE_LIMIT: usize = 4;

/// A DAG whose nodes are ordered observed first, latent last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalGraph {
    names: Vec<String>,
    observed: usize,
    parents: Vec<VarSet>,
}

impl CausalGraph {
    /// Reorders `dag` so that the nodes in `latent` come last, keeping the
    /// relative order within each group.
    pub fn new(dag: &Dag, latent: VarSet) -> Result<Self> {
        let u = dag.universe();
        if let Some(bad) = (latent - u.all()).first() {
            return Err(Error::IndexOutOfRange(bad));
        }
        let order: Vec<usize> = (u.all() - latent).iter().chain(latent.iter()).collect();
        let mut pos = vec![0; u.len()];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        let parents = order
            .iter()
            .map(|&old| dag.parents(old).iter().map(|p| pos[p]).collect())
            .collect();
        Ok(CausalGraph {
            names: order.iter().map(|&v| u.name(v).to_string()).collect(),
            observed: u.len() - latent.len(),
            parents,
        })
    }

    /// Builds from names and edges, marking the named latent nodes.
    pub fn from_named<S: AsRef<str>>(nodes: &[S], edges: &[(S, S)], latent: &[S]) -> Result<Self> {
        let u = Arc::new(Universe::with_base(nodes)?);
        let edges = edges
            .iter()
            .map(|(a, b)| Ok((u.lookup(a.as_ref())?, u.lookup(b.as_ref())?)))
            .collect::<Result<Vec<_>>>()?;
        let dag = Dag::from_edges(u.clone(), &edges)?;
        CausalGraph::new(&dag, u.set_of(latent)?)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn observed_count(&self) -> usize {
        self.observed
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn parents(&self, v: usize) -> VarSet {
        self.parents[v]
    }

    pub fn regime(&self) -> Result<Regime> {
        Regime::new(&self.names[..self.observed])
    }

    /// The F-augmented parent sets: observed node `j` gains the parent `F_j`,
    /// latents move up by the number of observed nodes.
    fn augmented_parents(&self) -> Vec<VarSet> {
        let n = self.observed;
        let shift = |s: VarSet| -> VarSet { s.iter().map(|v| if v < n { v } else { v + n }).collect() };
        let mut out = vec![VarSet::EMPTY; 2 * n + (self.len() - n)];
        for v in 0..self.len() {
            let ps = shift(self.parents[v]);
            if v < n {
                out[v] = ps.with(n + v);
            } else {
                out[v + n] = ps;
            }
        }
        out
    }
}

/// The regime model of a causal graph, answering membership by d-separation
/// in the F-augmented graph.
///
/// Under a context binding `F_j = int`, every edge into `j` other than
/// `F_j → j` is removed; every bound `F_j` is conditioned on.
#[derive(Clone, Debug)]
pub struct RegimeDsepModel {
    regime: Regime,
    parents: Vec<VarSet>,
}

impl RegimeDsepModel {
    pub fn new(graph: &CausalGraph) -> Result<Self> {
        Ok(RegimeDsepModel {
            regime: graph.regime()?,
            parents: graph.augmented_parents(),
        })
    }

    pub fn regime(&self) -> &Regime {
        &self.regime
    }

    pub fn universe_arc(&self) -> &Arc<Universe> {
        self.regime.universe()
    }

    /// Stores every triplet under every partial assignment of the F variables.
    pub fn materialize(&self) -> Result<ElementaryModel> {
        let n = self.regime.n();
        if n > MATERIALIZE_LIMIT {
            return Err(Error::UniverseTooLarge {
                size: n,
                limit: MATERIALIZE_LIMIT,
            });
        }
        let u = self.regime.universe().clone();
        let mut m = ElementaryModel::new(u.clone(), AxiomLevel::Compositional);
        for code in 0..3usize.pow(n as u32) {
            let mut ctx = Context::empty();
            let mut c = code;
            for j in 0..n {
                match c % 3 {
                    0 => {}
                    v => ctx = ctx.bind(self.regime.f(j), v - 1),
                }
                c /= 3;
            }
            let free = u.all() - ctx.keys();
            for i in free {
                for j in free {
                    if j <= i {
                        continue;
                    }
                    for k in (free.without(i).without(j)).subsets() {
                        if self.holds(i, j, k, &ctx) {
                            m.insert(ElementaryTriplet::new(i, j, k).with_context(ctx.clone()))?;
                        }
                    }
                }
            }
        }
        m.set_closed(true);
        Ok(m)
    }
}

impl ElementarySource for RegimeDsepModel {
    fn universe(&self) -> &Universe {
        self.regime.universe()
    }

    fn level(&self) -> AxiomLevel {
        AxiomLevel::Compositional
    }

    fn is_closed(&self) -> bool {
        true
    }

    fn holds(&self, left: usize, right: usize, cond: VarSet, ctx: &Context) -> bool {
        let n = self.regime.n();
        let mut parents = self.parents.clone();
        for (f, value) in ctx.bindings() {
            if value == INT {
                parents[f - n] = VarSet::singleton(f);
            }
        }
        dsep_parents(
            &parents,
            VarSet::singleton(left),
            VarSet::singleton(right),
            cond | ctx.keys(),
        )
    }
}

/// A causal graph with a conditional probability table per node.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuralModel {
    graph: CausalGraph,
    cards: Vec<usize>,
    /// `cpts[v][pa * cards[v] + value]`, parent configurations in mixed radix
    /// over the parents in ascending order.
    cpts: Vec<Vec<f64>>,
}

impl StructuralModel {
    /// Binary variables with every conditional probability drawn from [0.05, 0.95].
    pub fn random<R: Rng + ?Sized>(graph: &CausalGraph, rng: &mut R) -> Self {
        let cards = vec![2; graph.len()];
        let cpts = (0..graph.len())
            .map(|v| {
                let rows = 1usize << graph.parents(v).len();
                (0..rows)
                    .flat_map(|_| {
                        let p: f64 = rng.gen_range(0.05..0.95);
                        [p, 1.0 - p]
                    })
                    .collect()
            })
            .collect();
        StructuralModel {
            graph: graph.clone(),
            cards,
            cpts,
        }
    }

    pub fn from_seed(graph: &CausalGraph, seed: u64) -> Self {
        StructuralModel::random(graph, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    fn check_size(&self) -> Result<()> {
        if self.graph.len() > ENUMERATION_LIMIT {
            return Err(Error::UniverseTooLarge {
                size: self.graph.len(),
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok(())
    }

    fn cpt(&self, v: usize, vals: &[usize]) -> f64 {
        let pa = self
            .graph
            .parents(v)
            .iter()
            .fold(0, |acc, p| acc * self.cards[p] + vals[p]);
        self.cpts[v][pa * self.cards[v] + vals[v]]
    }

    /// Joint over all nodes, with the nodes in `fixed` clamped to the given values
    /// and their own tables dropped.
    fn joint(&self, fixed: &[(usize, usize)]) -> Vec<f64> {
        let size: usize = self.cards.iter().product();
        let mut vals = vec![0; self.cards.len()];
        let mut out = vec![0.0; size];
        for (idx, slot) in out.iter_mut().enumerate() {
            decode_into(&self.cards, idx, &mut vals);
            if fixed.iter().any(|&(v, x)| vals[v] != x) {
                continue;
            }
            *slot = (0..self.cards.len())
                .filter(|v| !fixed.iter().any(|&(f, _)| f == *v))
                .map(|v| self.cpt(v, &vals))
                .product();
        }
        out
    }

    /// The observational distribution of the observed variables.
    pub fn observational_table(&self) -> Result<JointTable> {
        self.check_size()?;
        let joint = self.joint(&[]);
        let n = self.graph.observed_count();
        let obs_cards = &self.cards[..n];
        let mut probs = vec![0.0; obs_cards.iter().product()];
        let mut vals = vec![0; self.cards.len()];
        for (idx, p) in joint.iter().enumerate() {
            decode_into(&self.cards, idx, &mut vals);
            let k = vals[..n].iter().zip(obs_cards).fold(0, |acc, (&v, &c)| acc * c + v);
            probs[k] += p;
        }
        let names = self.graph.names()[..n].to_vec();
        let domains = obs_cards
            .iter()
            .map(|&c| (0..c).map(|v| v.to_string()).collect())
            .collect();
        JointTable::new(names, domains, probs, DEFAULT_EPS)
    }

    /// Exact `p(y | do(x), w)` by truncated factorization. Sets index the
    /// observed variables. The result conditions on `x ∪ w` in ascending order.
    pub fn interventional_oracle(&self, x: VarSet, y: VarSet, w: VarSet) -> Result<Conditional> {
        self.check_size()?;
        let n = self.graph.observed_count();
        let obs = VarSet::full(n);
        if !(x | y | w).is_subset(obs) {
            return Err(Error::InvalidSets("oracle sets must be observed variables".into()));
        }
        if !x.is_disjoint(y) || !x.is_disjoint(w) || !y.is_disjoint(w) || y.is_empty() {
            return Err(Error::InvalidSets("oracle sets must be disjoint with a nonempty target".into()));
        }
        let target: Vec<usize> = y.iter().collect();
        let given: Vec<usize> = (x | w).iter().collect();
        let target_cards: Vec<usize> = target.iter().map(|&v| self.cards[v]).collect();
        let given_cards: Vec<usize> = given.iter().map(|&v| self.cards[v]).collect();
        let xs: Vec<usize> = x.iter().collect();
        let xcards: Vec<usize> = xs.iter().map(|&v| self.cards[v]).collect();
        let tsize: usize = target_cards.iter().product();
        let gsize: usize = given_cards.iter().product();
        let mut probs = vec![0.0; tsize * gsize];
        let mut xvals = vec![0; xs.len()];
        let mut vals = vec![0; self.cards.len()];
        for xi in 0..xcards.iter().product() {
            decode_into(&xcards, xi, &mut xvals);
            let fixed: Vec<(usize, usize)> = xs.iter().copied().zip(xvals.iter().copied()).collect();
            let joint = self.joint(&fixed);
            for (idx, &p) in joint.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                decode_into(&self.cards, idx, &mut vals);
                let g = given.iter().fold(0, |acc, &v| acc * self.cards[v] + vals[v]);
                let t = target.iter().fold(0, |acc, &v| acc * self.cards[v] + vals[v]);
                probs[g * tsize + t] += p;
            }
        }
        for chunk in probs.chunks_mut(tsize) {
            let mass: f64 = chunk.iter().sum();
            if mass <= 0.0 {
                return Err(Error::ZeroConditioner);
            }
            chunk.iter_mut().for_each(|p| *p /= mass);
        }
        let name = |v: &usize| self.graph.names()[*v].clone();
        Ok(Conditional {
            target: target.iter().map(name).collect(),
            given: given.iter().map(name).collect(),
            target_cards,
            given_cards,
            probs,
        })
    }
}
