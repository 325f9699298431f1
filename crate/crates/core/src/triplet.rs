//! Triplets, elementary triplets, axiom levels and dominance.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::universe::{Context, Universe};
use crate::varset::VarSet;

/// Which of the independence properties a model is closed under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxiomLevel {
    /// Symmetry plus contraction, weak union and decomposition.
    Semigraphoid,
    /// Semigraphoid plus intersection.
    Graphoid,
    /// Graphoid plus composition.
    Compositional,
}

impl AxiomLevel {
    pub const ALL: [AxiomLevel; 3] = [
        AxiomLevel::Semigraphoid,
        AxiomLevel::Graphoid,
        AxiomLevel::Compositional,
    ];

    pub fn has_intersection(self) -> bool {
        self >= AxiomLevel::Graphoid
    }

    pub fn has_composition(self) -> bool {
        self == AxiomLevel::Compositional
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AxiomLevel::Semigraphoid => "semigraphoid",
            AxiomLevel::Graphoid => "graphoid",
            AxiomLevel::Compositional => "compositional",
        }
    }
}

impl fmt::Display for AxiomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxiomLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "semigraphoid" | "ci0-1" | "semi" => Ok(AxiomLevel::Semigraphoid),
            "graphoid" | "ci0-2" => Ok(AxiomLevel::Graphoid),
            "compositional" | "compositional-graphoid" | "ci0-3" => Ok(AxiomLevel::Compositional),
            other => Err(Error::InvalidTriplet(format!("unknown axiom level `{other}`"))),
        }
    }
}

/// `left ⟂ right | cond` under the context assignment `ctx`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet {
    pub ctx: Context,
    pub left: VarSet,
    pub right: VarSet,
    pub cond: VarSet,
}

impl Triplet {
    pub fn new(left: VarSet, right: VarSet, cond: VarSet) -> Self {
        Triplet {
            left,
            right,
            cond,
            ctx: Context::empty(),
        }
    }

    #[must_use]
    pub fn with_context(mut self, ctx: Context) -> Self {
        self.ctx = ctx;
        self
    }

    /// `right ⟂ left | cond`.
    #[must_use]
    pub fn mirrored(&self) -> Triplet {
        Triplet {
            left: self.right,
            right: self.left,
            cond: self.cond,
            ctx: self.ctx.clone(),
        }
    }

    pub fn is_elementary(&self) -> bool {
        self.left.len() == 1 && self.right.len() == 1
    }

    pub fn members(&self) -> VarSet {
        self.left | self.right | self.cond
    }

    /// Checks disjointness, index bounds, nonempty sides and context separation.
    pub fn validate(&self, u: &Universe) -> Result<()> {
        let all = u.all();
        for s in [self.left, self.right, self.cond] {
            if let Some(bad) = (s - all).first() {
                return Err(Error::IndexOutOfRange(bad));
            }
        }
        if !self.left.is_disjoint(self.right)
            || !self.left.is_disjoint(self.cond)
            || !self.right.is_disjoint(self.cond)
        {
            return Err(Error::OverlappingSets);
        }
        if self.left.is_empty() || self.right.is_empty() {
            return Err(Error::EmptySide);
        }
        self.ctx.validate(u)?;
        if let Some(k) = (self.ctx.keys() & self.members()).first() {
            return Err(Error::ContextClash(k));
        }
        Ok(())
    }

    /// True iff `self` dominates `other`: `other.left ⊆ left`, `other.right ⊆ right`
    /// and `cond ⊆ other.cond ⊆ (left∖other.left)(right∖other.right)cond`.
    pub fn dominates(&self, other: &Triplet) -> Result<bool> {
        if self.ctx != other.ctx {
            return Err(Error::Incomparable);
        }
        let window = (self.left - other.left) | (self.right - other.right) | self.cond;
        Ok(other.left.is_subset(self.left)
            && other.right.is_subset(self.right)
            && self.cond.is_subset(other.cond)
            && other.cond.is_subset(window))
    }

    pub fn display<'a>(&'a self, u: &'a Universe) -> TripletDisplay<'a> {
        TripletDisplay {
            left: self.left,
            right: self.right,
            cond: self.cond,
            ctx: &self.ctx,
            u,
        }
    }
}

impl fmt::Debug for Triplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} ⟂ {:?} | {:?}", self.left, self.right, self.cond)?;
        if !self.ctx.is_empty() {
            write!(f, " @ {:?}", self.ctx)?;
        }
        Ok(())
    }
}

/// Free-function form of [`Triplet::dominates`].
pub fn dominates(t: &Triplet, t2: &Triplet) -> Result<bool> {
    t.dominates(t2)
}

/// Free-function form of [`Triplet::validate`].
pub fn validate(t: &Triplet, u: &Universe) -> Result<()> {
    t.validate(u)
}

/// `left ⟂ right | cond` between two single variables.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementaryTriplet {
    pub ctx: Context,
    pub left: usize,
    pub right: usize,
    pub cond: VarSet,
}

impl ElementaryTriplet {
    pub fn new(left: usize, right: usize, cond: VarSet) -> Self {
        ElementaryTriplet {
            left,
            right,
            cond,
            ctx: Context::empty(),
        }
    }

    #[must_use]
    pub fn with_context(mut self, ctx: Context) -> Self {
        self.ctx = ctx;
        self
    }

    /// Smaller index first. Idempotent.
    #[must_use]
    pub fn canonical(&self) -> ElementaryTriplet {
        if self.left <= self.right {
            self.clone()
        } else {
            self.mirrored()
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.left < self.right
    }

    #[must_use]
    pub fn mirrored(&self) -> ElementaryTriplet {
        ElementaryTriplet {
            left: self.right,
            right: self.left,
            cond: self.cond,
            ctx: self.ctx.clone(),
        }
    }

    pub fn to_triplet(&self) -> Triplet {
        Triplet {
            left: VarSet::singleton(self.left),
            right: VarSet::singleton(self.right),
            cond: self.cond,
            ctx: self.ctx.clone(),
        }
    }

    pub fn validate(&self, u: &Universe) -> Result<()> {
        if self.left >= u.len() {
            return Err(Error::IndexOutOfRange(self.left));
        }
        if self.right >= u.len() {
            return Err(Error::IndexOutOfRange(self.right));
        }
        if self.left == self.right
            || self.cond.contains(self.left)
            || self.cond.contains(self.right)
        {
            return Err(Error::OverlappingSets);
        }
        self.to_triplet().validate(u)
    }

    pub fn display<'a>(&'a self, u: &'a Universe) -> TripletDisplay<'a> {
        TripletDisplay {
            left: VarSet::singleton(self.left),
            right: VarSet::singleton(self.right),
            cond: self.cond,
            ctx: &self.ctx,
            u,
        }
    }
}

impl fmt::Debug for ElementaryTriplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⟂ {} | {:?}", self.left, self.right, self.cond)?;
        if !self.ctx.is_empty() {
            write!(f, " @ {:?}", self.ctx)?;
        }
        Ok(())
    }
}

/// Free-function form of [`ElementaryTriplet::canonical`].
pub fn canonicalize(t: &ElementaryTriplet) -> ElementaryTriplet {
    t.canonical()
}

pub struct TripletDisplay<'a> {
    left: VarSet,
    right: VarSet,
    cond: VarSet,
    ctx: &'a Context,
    u: &'a Universe,
}

impl fmt::Display for TripletDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ⟂ {} | {}",
            self.u.fmt_set(self.left),
            self.u.fmt_set(self.right),
            self.u.fmt_set(self.cond)
        )?;
        if !self.ctx.is_empty() {
            write!(f, ", {}", self.ctx.display(self.u))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(ix: &[usize]) -> VarSet {
        VarSet::from_indices(ix.iter().copied())
    }

    // Variables "1".."6" live at indices 0..5.
    fn six() -> Universe {
        Universe::with_base(&["1", "2", "3", "4", "5", "6"]).unwrap()
    }

    fn t(l: &[usize], r: &[usize], c: &[usize]) -> Triplet {
        let dec = |s: &[usize]| vs(&s.iter().map(|x| x - 1).collect::<Vec<_>>());
        Triplet::new(dec(l), dec(r), dec(c))
    }

    #[test]
    fn canonicalize_swaps_and_is_idempotent() {
        let e = ElementaryTriplet::new(3, 0, VarSet::EMPTY);
        assert_eq!(e.canonical(), ElementaryTriplet::new(0, 3, VarSet::EMPTY));
        let f = ElementaryTriplet::new(0, 3, vs(&[4, 5]));
        assert_eq!(f.canonical(), f);
        assert_eq!(e.canonical().canonical(), e.canonical());
    }

    #[test]
    fn dominance_examples() {
        assert!(t(&[1, 2], &[4, 5, 6], &[]).dominates(&t(&[1], &[4], &[6])).unwrap());
        assert!(!t(&[1, 2], &[3, 4], &[6]).dominates(&t(&[1], &[3], &[5])).unwrap());
        let x = t(&[1, 2], &[3], &[5]);
        assert!(x.dominates(&x).unwrap());
    }

    #[test]
    fn dominance_needs_equal_contexts() {
        let mut u = six();
        let aux = u.add_context("aux", &["0", "1"]).unwrap();
        let a = t(&[1], &[2], &[]).with_context(Context::empty().bind(aux, 0));
        let b = t(&[1], &[2], &[]);
        assert_eq!(a.dominates(&b), Err(Error::Incomparable));
    }

    #[test]
    fn validation_errors() {
        let mut u = six();
        assert_eq!(t(&[1], &[1], &[]).validate(&u), Err(Error::OverlappingSets));
        assert!(t(&[1], &[4], &[5, 6]).validate(&u).is_ok());
        assert_eq!(
            Triplet::new(vs(&[0]), vs(&[9]), VarSet::EMPTY).validate(&u),
            Err(Error::IndexOutOfRange(9))
        );
        assert_eq!(
            Triplet::new(vs(&[0]), VarSet::EMPTY, VarSet::EMPTY).validate(&u),
            Err(Error::EmptySide)
        );
        let aux = u.add_context("aux", &["0", "1"]).unwrap();
        let clash = Triplet::new(vs(&[0]), vs(&[1]), vs(&[aux]))
            .with_context(Context::empty().bind(aux, 1));
        assert_eq!(clash.validate(&u), Err(Error::ContextClash(aux)));
    }

    #[test]
    fn display_uses_names() {
        let u = six();
        assert_eq!(t(&[1, 2], &[3, 4], &[6]).display(&u).to_string(), "12 ⟂ 34 | 6");
        assert_eq!(t(&[5], &[6], &[]).display(&u).to_string(), "5 ⟂ 6 | ∅");
    }

    #[test]
    fn dominance_transitive_on_small_universe() {
        // Every triplet over 4 variables: each variable is in left, right, cond or absent.
        let mut all = Vec::new();
        for code in 0..4usize.pow(4) {
            let (mut l, mut r, mut c) = (VarSet::EMPTY, VarSet::EMPTY, VarSet::EMPTY);
            for v in 0..4 {
                match code / 4usize.pow(v as u32) % 4 {
                    0 => l.insert(v),
                    1 => r.insert(v),
                    2 => c.insert(v),
                    _ => {}
                }
            }
            if !l.is_empty() && !r.is_empty() {
                all.push(Triplet::new(l, r, c));
            }
        }
        for a in &all {
            assert!(a.dominates(a).unwrap());
            for b in all.iter().filter(|b| a.dominates(b).unwrap()) {
                for c in all.iter().filter(|c| b.dominates(c).unwrap()) {
                    assert!(a.dominates(c).unwrap(), "{a:?} {b:?} {c:?}");
                }
            }
        }
    }
}
