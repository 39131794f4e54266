//! Subsets of `{0, .., m-1}` stored as bitmasks.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::{Error, Result};

/// Hard ceiling on the dimension an [`IndexSet`] can address.
pub const MAX_SET_DIM: usize = 32;

/// A subset of `{0, .., dim-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet {
    dim: usize,
    mask: u32,
}

impl IndexSet {
    pub fn from_mask(dim: usize, mask: u32) -> Result<Self> {
        if dim == 0 || dim > MAX_SET_DIM {
            return Err(Error::Capacity {
                what: "index set dimension",
                found: dim,
                limit: MAX_SET_DIM,
            });
        }
        if dim < 32 && mask >> dim != 0 {
            return Err(Error::Invalid(format!(
                "mask {mask:#x} has members outside 0..{dim}"
            )));
        }
        Ok(Self { dim, mask })
    }

    pub fn from_indices(dim: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = 0u32;
        for &i in indices {
            if i >= dim {
                return Err(Error::Invalid(format!("index {i} out of range 0..{dim}")));
            }
            mask |= 1 << i;
        }
        Self::from_mask(dim, mask)
    }

    pub(crate) fn from_mask_unchecked(dim: usize, mask: u32) -> Self {
        debug_assert!(dim <= MAX_SET_DIM);
        Self { dim, mask }
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::from_mask(dim, 0)
    }

    pub fn full(dim: usize) -> Result<Self> {
        Self::from_mask(dim, full_mask(dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.dim && self.mask >> i & 1 == 1
    }

    /// Nonempty and proper.
    pub fn is_nontrivial(&self) -> bool {
        self.mask != 0 && self.mask != full_mask(self.dim)
    }

    pub fn complement(&self) -> Self {
        Self {
            dim: self.dim,
            mask: !self.mask & full_mask(self.dim),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).filter(move |&i| self.contains(i))
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// All nonempty proper subsets of `{0, .., dim-1}`, in increasing mask order.
    pub fn nontrivial_subsets(dim: usize) -> impl Iterator<Item = IndexSet> {
        let full = full_mask(dim);
        (1..full).map(move |mask| IndexSet { dim, mask })
    }

    /// All subsets of cardinality `card`, in increasing mask order.
    pub fn subsets_of_size(dim: usize, card: usize) -> Vec<IndexSet> {
        let full = full_mask(dim);
        (0..=full)
            .filter(|m| m.count_ones() as usize == card)
            .map(|mask| IndexSet { dim, mask })
            .collect()
    }
}

pub(crate) fn full_mask(dim: usize) -> u32 {
    if dim >= 32 {
        u32::MAX
    } else {
        (1u32 << dim) - 1
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for IndexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}
