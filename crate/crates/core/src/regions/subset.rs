use core::fmt;

/// A subset of source indices stored as a bitmask (at most 32 sources).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SourceSet(u32);

impl SourceSet {
    pub const MAX_SOURCES: usize = 32;

    pub const fn empty() -> Self {
        SourceSet(0)
    }

    pub const fn from_bits(bits: u32) -> Self {
        SourceSet(bits)
    }

    pub fn full(n: usize) -> Self {
        if n >= 32 {
            SourceSet(u32::MAX)
        } else {
            SourceSet((1u32 << n) - 1)
        }
    }

    pub fn from_indices(idx: &[usize]) -> Self {
        idx.iter().fold(Self::empty(), |s, &i| s.with(i))
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    #[must_use]
    pub fn with(self, i: usize) -> Self {
        SourceSet(self.0 | 1 << i)
    }

    #[must_use]
    pub fn without(self, i: usize) -> Self {
        SourceSet(self.0 & !(1 << i))
    }

    pub fn union(self, o: Self) -> Self {
        SourceSet(self.0 | o.0)
    }

    pub fn intersection(self, o: Self) -> Self {
        SourceSet(self.0 & o.0)
    }

    /// Complement within `{0, .., n-1}`.
    pub fn complement(self, n: usize) -> Self {
        SourceSet(!self.0 & Self::full(n).0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |i| bits >> i & 1 == 1)
    }

    /// `Σ_{i∈self} values[i]`.
    pub fn sum(self, values: &[f64]) -> f64 {
        self.iter().map(|i| values[i]).sum()
    }

    /// All `2^n` subsets of `{0, .., n-1}` in bitmask order.
    pub fn all_subsets(n: usize) -> impl Iterator<Item = SourceSet> {
        (0..(1u64 << n)).map(|b| SourceSet(b as u32))
    }

    pub fn nonempty_subsets(n: usize) -> impl Iterator<Item = SourceSet> {
        (1..(1u64 << n)).map(|b| SourceSet(b as u32))
    }
}

impl fmt::Debug for SourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
