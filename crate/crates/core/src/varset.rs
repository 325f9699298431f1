//! Fixed-width variable sets.

use std::fmt;

/// Maximum number of variable slots in a universe.
pub const CAPACITY: usize = 128;

/// A subset of a universe's variable indices, stored as a 128-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarSet(u128);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub const fn from_bits(bits: u128) -> Self {
        VarSet(bits)
    }

    pub const fn bits(self) -> u128 {
        self.0
    }

    /// The set `{0, 1, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= CAPACITY, "universe capacity is {CAPACITY}");
        if n == CAPACITY {
            VarSet(u128::MAX)
        } else {
            VarSet((1u128 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        assert!(i < CAPACITY, "index {i} out of range");
        VarSet(1u128 << i)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        it.into_iter().fold(VarSet::EMPTY, |s, i| s.with(i))
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        i < CAPACITY && self.0 >> i & 1 == 1
    }

    #[must_use]
    pub fn with(self, i: usize) -> Self {
        self | VarSet::singleton(i)
    }

    #[must_use]
    pub fn without(self, i: usize) -> Self {
        if i < CAPACITY {
            VarSet(self.0 & !(1u128 << i))
        } else {
            self
        }
    }

    pub fn insert(&mut self, i: usize) {
        *self = self.with(i);
    }

    pub fn remove(&mut self, i: usize) {
        *self = self.without(i);
    }

    pub const fn union(self, other: VarSet) -> Self {
        VarSet(self.0 | other.0)
    }

    pub const fn intersection(self, other: VarSet) -> Self {
        VarSet(self.0 & other.0)
    }

    pub const fn difference(self, other: VarSet) -> Self {
        VarSet(self.0 & !other.0)
    }

    pub const fn is_subset(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub const fn is_disjoint(self, other: VarSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Smallest index in the set.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Largest index in the set.
    pub fn last(self) -> Option<usize> {
        (self.0 != 0).then(|| 127 - self.0.leading_zeros() as usize)
    }

    /// Indices in ascending order.
    pub fn iter(self) -> Iter {
        Iter(self.0)
    }

    /// All subsets of `self`, in ascending order of the packed mask.
    pub fn subsets(self) -> Subsets {
        Subsets {
            mask: self.0,
            next: Some(0),
        }
    }

    /// All subsets ordered by ascending cardinality, then ascending bit mask.
    pub fn subsets_by_size(self) -> Vec<VarSet> {
        let mut all: Vec<VarSet> = self.subsets().collect();
        all.sort_by_key(|s| (s.len(), s.0));
        all
    }
}

impl std::ops::BitOr for VarSet {
    type Output = VarSet;
    fn bitor(self, rhs: VarSet) -> VarSet {
        self.union(rhs)
    }
}

impl std::ops::BitOrAssign for VarSet {
    fn bitor_assign(&mut self, rhs: VarSet) {
        self.0 |= rhs.0;
    }
}

impl std::ops::BitAnd for VarSet {
    type Output = VarSet;
    fn bitand(self, rhs: VarSet) -> VarSet {
        self.intersection(rhs)
    }
}

impl std::ops::Sub for VarSet {
    type Output = VarSet;
    fn sub(self, rhs: VarSet) -> VarSet {
        self.difference(rhs)
    }
}

impl FromIterator<usize> for VarSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        VarSet::from_indices(iter)
    }
}

impl IntoIterator for VarSet {
    type Item = usize;
    type IntoIter = Iter;
    fn into_iter(self) -> Iter {
        self.iter()
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct Iter(u128);

impl Iterator for Iter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Iter {}

/// Carry-rippler enumeration of the subsets of a mask.
pub struct Subsets {
    mask: u128,
    next: Option<u128>,
}

impl Iterator for Subsets {
    type Item = VarSet;

    fn next(&mut self) -> Option<VarSet> {
        let cur = self.next?;
        let nxt = cur.wrapping_sub(self.mask) & self.mask;
        self.next = (nxt != 0).then_some(nxt);
        Some(VarSet(cur))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let a = VarSet::from_indices([1, 4, 5]);
        let b = VarSet::from_indices([4, 7]);
        assert_eq!((a | b).iter().collect::<Vec<_>>(), vec![1, 4, 5, 7]);
        assert_eq!((a & b).iter().collect::<Vec<_>>(), vec![4]);
        assert_eq!((a - b).iter().collect::<Vec<_>>(), vec![1, 5]);
        assert!(VarSet::singleton(4).is_subset(a));
        assert!(!b.is_subset(a));
        assert_eq!(a.first(), Some(1));
        assert_eq!(a.last(), Some(5));
        assert!(VarSet::singleton(127).contains(127));
        assert_eq!(VarSet::full(128).len(), 128);
    }

    #[test]
    fn subsets_enumerated_once() {
        let s = VarSet::from_indices([0, 3, 9]);
        let subs: Vec<_> = s.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|x| x.is_subset(s)));
        let mut dedup = subs.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 8);
        assert_eq!(VarSet::EMPTY.subsets().count(), 1);
    }

    #[test]
    fn subsets_by_size_order() {
        let s = VarSet::from_indices([0, 1, 2]);
        let order: Vec<u128> = s.subsets_by_size().iter().map(|v| v.bits()).collect();
        assert_eq!(order, vec![0, 1, 2, 4, 3, 5, 6, 7]);
    }
}
