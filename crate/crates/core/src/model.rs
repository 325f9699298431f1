//! Elementary models: sets of elementary triplets stratified by context.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::triplet::{AxiomLevel, ElementaryTriplet};
use crate::universe::{Context, Universe};
use crate::varset::VarSet;

/// Anything that can answer "is `left ⟂ right | cond` (under `ctx`) in the model?".
///
/// Membership queries, dominant enumeration and the causal machinery are written
/// against this trait, so they work the same over a stored [`ElementaryModel`] and
/// over a model computed on demand.
pub trait ElementarySource {
    fn universe(&self) -> &Universe;
    fn level(&self) -> AxiomLevel;
    fn is_closed(&self) -> bool;

    /// Whether `i ⟂ j | K` and `j ⟂ i | K` are identified.
    fn is_symmetric(&self) -> bool {
        true
    }

    /// Oriented lookup of a single elementary triplet.
    fn holds(&self, left: usize, right: usize, cond: VarSet, ctx: &Context) -> bool;
}

/// The per-stratum storage key: an elementary triplet without its context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Core {
    pub left: u8,
    pub right: u8,
    pub cond: VarSet,
}

impl Core {
    pub fn new(left: usize, right: usize, cond: VarSet) -> Self {
        Core {
            left: left as u8,
            right: right as u8,
            cond,
        }
    }

    pub fn canonical(self) -> Self {
        if self.left <= self.right {
            self
        } else {
            Core {
                left: self.right,
                right: self.left,
                cond: self.cond,
            }
        }
    }
}

pub(crate) type Stratum = HashSet<Core>;

/// A set of elementary triplets over one universe, tagged with an axiom level.
///
/// In the default symmetric mode every triplet is stored in canonical form
/// (smaller index first). A directed model keeps orientation and is closed with
/// the left- and right-anchored rule families instead of symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementaryModel {
    universe: Arc<Universe>,
    level: AxiomLevel,
    symmetric: bool,
    closed: bool,
    strata: BTreeMap<Context, Stratum>,
}

impl ElementaryModel {
    pub fn new(universe: Arc<Universe>, level: AxiomLevel) -> Self {
        ElementaryModel {
            universe,
            level,
            symmetric: true,
            closed: true,
            strata: BTreeMap::new(),
        }
    }

    /// An empty model in which `i ⟂ j | K` does not imply `j ⟂ i | K`.
    pub fn directed(universe: Arc<Universe>, level: AxiomLevel) -> Self {
        ElementaryModel {
            symmetric: false,
            ..ElementaryModel::new(universe, level)
        }
    }

    pub fn from_triplets<I>(universe: Arc<Universe>, level: AxiomLevel, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = ElementaryTriplet>,
    {
        let mut m = ElementaryModel::new(universe, level);
        for t in triplets {
            m.insert(t)?;
        }
        Ok(m)
    }

    pub fn universe_arc(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn level(&self) -> AxiomLevel {
        self.level
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub(crate) fn set_closed(&mut self, closed: bool) {
        self.closed = closed;
    }

    /// Reinterprets the same triplets at another level. The result is marked open
    /// unless the new level is weaker than the one the model was closed under.
    #[must_use]
    pub fn with_level(mut self, level: AxiomLevel) -> Self {
        self.closed = self.closed && level <= self.level;
        self.level = level;
        self
    }

    /// Adds a triplet; returns whether it was new. New triplets clear the closed flag.
    pub fn insert(&mut self, t: ElementaryTriplet) -> Result<bool> {
        t.validate(&self.universe)?;
        let core = Core::new(t.left, t.right, t.cond);
        let core = if self.symmetric { core.canonical() } else { core };
        let fresh = self.strata.entry(t.ctx).or_default().insert(core);
        if fresh {
            self.closed = false;
        }
        Ok(fresh)
    }


    pub fn contains(&self, t: &ElementaryTriplet) -> bool {
        self.holds(t.left, t.right, t.cond, &t.ctx)
    }

    pub fn len(&self) -> usize {
        self.strata.values().map(HashSet::len).sum()
    }

    /// Number of oriented triplets: each stored `i ⟂ j | K` of a symmetric
    /// model also counts as `j ⟂ i | K`.
    pub fn oriented_len(&self) -> usize {
        if self.symmetric {
            2 * self.len()
        } else {
            self.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contexts(&self) -> impl Iterator<Item = &Context> {
        self.strata.keys()
    }

    pub(crate) fn strata(&self) -> &BTreeMap<Context, Stratum> {
        &self.strata
    }


    /// All stored triplets in sorted order.
    pub fn triplets(&self) -> Vec<ElementaryTriplet> {
        let mut out: Vec<ElementaryTriplet> = self
            .strata
            .iter()
            .flat_map(|(ctx, s)| {
                s.iter().map(move |c| ElementaryTriplet {
                    left: c.left as usize,
                    right: c.right as usize,
                    cond: c.cond,
                    ctx: ctx.clone(),
                })
            })
            .collect();
        out.sort();
        out
    }

    /// Checks `self ⊆ other` as sets of elementary triplets.
    pub fn is_subset_of(&self, other: &ElementaryModel) -> bool {
        self.strata.iter().all(|(ctx, s)| match other.strata.get(ctx) {
            Some(o) => s.is_subset(o),
            None => s.is_empty(),
        })
    }

    pub(crate) fn same_space(&self, other: &ElementaryModel) -> Result<()> {
        if self.universe != other.universe || self.symmetric != other.symmetric {
            return Err(Error::UniverseMismatch);
        }
        Ok(())
    }

    pub(crate) fn from_parts(
        universe: Arc<Universe>,
        level: AxiomLevel,
        symmetric: bool,
        closed: bool,
        strata: BTreeMap<Context, Stratum>,
    ) -> Self {
        let strata = strata.into_iter().filter(|(_, s)| !s.is_empty()).collect();
        ElementaryModel {
            universe,
            level,
            symmetric,
            closed,
            strata,
        }
    }
}

impl ElementarySource for ElementaryModel {
    fn universe(&self) -> &Universe {
        &self.universe
    }

    fn level(&self) -> AxiomLevel {
        self.level
    }

    fn is_closed(&self) -> bool {
        self.closed
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn holds(&self, left: usize, right: usize, cond: VarSet, ctx: &Context) -> bool {
        let core = Core::new(left, right, cond);
        let core = if self.symmetric { core.canonical() } else { core };
        self.strata.get(ctx).is_some_and(|s| s.contains(&core))
    }
}

impl<T: ElementarySource + ?Sized> ElementarySource for &T {
    fn universe(&self) -> &Universe {
        (**self).universe()
    }
    fn level(&self) -> AxiomLevel {
        (**self).level()
    }
    fn is_closed(&self) -> bool {
        (**self).is_closed()
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
    fn holds(&self, left: usize, right: usize, cond: VarSet, ctx: &Context) -> bool {
        (**self).holds(left, right, cond, ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_canonicalizes_and_clears_closed() {
        let u = Arc::new(Universe::with_base(&["a", "b", "c"]).unwrap());
        let mut m = ElementaryModel::new(u, AxiomLevel::Semigraphoid);
        assert!(m.is_closed());
        assert!(m.insert(ElementaryTriplet::new(2, 0, VarSet::EMPTY)).unwrap());
        assert!(!m.is_closed());
        assert!(!m.insert(ElementaryTriplet::new(0, 2, VarSet::EMPTY)).unwrap());
        assert!(m.holds(2, 0, VarSet::EMPTY, &Context::empty()));
        assert_eq!(m.triplets(), vec![ElementaryTriplet::new(0, 2, VarSet::EMPTY)]);
    }

    #[test]
    fn directed_keeps_orientation() {
        let u = Arc::new(Universe::with_base(&["a", "b"]).unwrap());
        let mut m = ElementaryModel::directed(u, AxiomLevel::Semigraphoid);
        m.insert(ElementaryTriplet::new(1, 0, VarSet::EMPTY)).unwrap();
        assert!(m.holds(1, 0, VarSet::EMPTY, &Context::empty()));
        assert!(!m.holds(0, 1, VarSet::EMPTY, &Context::empty()));
    }

    #[test]
    fn invalid_triplet_rejected() {
        let u = Arc::new(Universe::with_base(&["a", "b"]).unwrap());
        let mut m = ElementaryModel::new(u, AxiomLevel::Semigraphoid);
        assert_eq!(
            m.insert(ElementaryTriplet::new(0, 1, VarSet::singleton(1))),
            Err(Error::OverlappingSets)
        );
    }
}
