//! Subsets of the observation index set `{0, .., L-1}` as bit masks.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported number of observations; regions are enumerated over
/// all `2^L` subsets.
pub const MAX_OBSERVATIONS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Subset(u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn from_mask(mask: u32) -> Self {
        Subset(mask)
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        Subset(indices.iter().fold(0, |m, &i| m | (1 << i)))
    }

    pub fn full(l: usize) -> Self {
        Subset(((1u64 << l) - 1) as u32)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn complement(self, l: usize) -> Subset {
        Subset(!self.0 & Subset::full(l).0)
    }

    pub fn with(self, i: usize) -> Subset {
        Subset(self.0 | (1 << i))
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..32).filter(move |i| mask & (1 << i) != 0)
    }

    pub(crate) fn check(self, l: usize) -> Result<()> {
        if self.0 & !Subset::full(l).0 != 0 {
            return Err(Error::SubsetOutOfRange { mask: self.0, l });
        }
        Ok(())
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.members().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// All `2^l` subsets, empty set first.
pub fn all_subsets(l: usize) -> impl Iterator<Item = Subset> {
    (0..(1u32 << l)).map(Subset)
}

pub fn nonempty_subsets(l: usize) -> impl Iterator<Item = Subset> {
    (1..(1u32 << l)).map(Subset)
}
