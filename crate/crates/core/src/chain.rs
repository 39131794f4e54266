//! Eventually periodic chains of matrices and permutations.
//!
//! An infinite sequence `X(0), X(1), ...` is presented by a finite prefix
//! followed by a nonempty cycle that repeats forever:
//! `X(k) = prefix[k]` for `k < |prefix|`, otherwise
//! `X(k) = cycle[(k - |prefix|) mod |cycle|]`.

use serde::{Deserialize, Serialize};

use crate::matrix::{lcm, Permutation, StochMatrix};
use crate::set::IndexSet;
use crate::{Error, Result, Settings};

/// Prefix + cycle presentation of an infinite sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodic<T> {
    prefix: Vec<T>,
    cycle: Vec<T>,
}

impl<T> Periodic<T> {
    pub fn new(prefix: Vec<T>, cycle: Vec<T>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::Invalid("cycle must be nonempty".into()));
        }
        Ok(Self { prefix, cycle })
    }

    pub fn constant(item: T) -> Self {
        Self {
            prefix: Vec::new(),
            cycle: vec![item],
        }
    }

    pub fn prefix(&self) -> &[T] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[T] {
        &self.cycle
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix.len()
    }

    pub fn cycle_len(&self) -> usize {
        self.cycle.len()
    }

    pub fn at(&self, k: usize) -> &T {
        match k.checked_sub(self.prefix.len()) {
            None => &self.prefix[k],
            Some(t) => &self.cycle[t % self.cycle.len()],
        }
    }

    /// Prefix items followed by one pass through the cycle.
    pub fn items(&self) -> impl Iterator<Item = &T> {
        self.prefix.iter().chain(self.cycle.iter())
    }
}

/// First time from which every presentation is periodic, and the joint period.
pub(crate) fn joint_schedule(parts: &[(usize, usize)]) -> (usize, usize) {
    parts
        .iter()
        .fold((0, 1), |(start, period), &(p, l)| (start.max(p), lcm(period, l)))
}

/// Whether a chain is only row-stochastic or doubly stochastic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Stochastic,
    DoublyStochastic,
}

/// An eventually periodic chain `{A(k)}` of `m x m` stochastic matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    dim: usize,
    seq: Periodic<StochMatrix>,
    flavor: Flavor,
}

impl Chain {
    pub fn new(
        prefix: Vec<StochMatrix>,
        cycle: Vec<StochMatrix>,
        flavor: Flavor,
        settings: &Settings,
    ) -> Result<Self> {
        let seq = Periodic::new(prefix, cycle)?;
        let dim = seq.cycle[0].dim();
        for m in seq.items() {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
        }
        if flavor == Flavor::DoublyStochastic {
            for m in seq.items() {
                for (col, sum) in m.column_sums().into_iter().enumerate() {
                    if (sum - 1.0).abs() > settings.tol_stoch {
                        return Err(Error::ColumnSum { col, sum });
                    }
                }
            }
        }
        Ok(Self { dim, seq, flavor })
    }

    pub(crate) fn from_parts_unchecked(
        prefix: Vec<StochMatrix>,
        cycle: Vec<StochMatrix>,
        flavor: Flavor,
    ) -> Self {
        let dim = cycle[0].dim();
        Self {
            dim,
            seq: Periodic { prefix, cycle },
            flavor,
        }
    }

    /// The constant chain `A(k) = a`.
    pub fn constant(a: StochMatrix, flavor: Flavor, settings: &Settings) -> Result<Self> {
        Self::new(Vec::new(), vec![a], flavor, settings)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        self.flavor == Flavor::DoublyStochastic
    }

    pub fn presentation(&self) -> &Periodic<StochMatrix> {
        &self.seq
    }

    pub fn prefix_len(&self) -> usize {
        self.seq.prefix_len()
    }

    pub fn cycle_len(&self) -> usize {
        self.seq.cycle_len()
    }

    /// `A(k)`.
    pub fn matrix_at(&self, k: usize) -> &StochMatrix {
        self.seq.at(k)
    }

    /// The backward product `A(k:s) = A(k-1) A(k-2) ... A(s)` for `k > s`.
    pub fn backward_product(&self, k: usize, s: usize) -> Result<StochMatrix> {
        if k <= s {
            return Err(Error::Contract(format!(
                "backward product needs k > s, got k={k}, s={s}"
            )));
        }
        let mut acc = self.matrix_at(s).clone();
        for t in s + 1..k {
            acc = self.matrix_at(t).mul(&acc);
        }
        Ok(acc)
    }
}

/// An eventually periodic permutation chain `{P(k)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PermChain {
    dim: usize,
    seq: Periodic<Permutation>,
}

impl PermChain {
    pub fn new(prefix: Vec<Permutation>, cycle: Vec<Permutation>) -> Result<Self> {
        let seq = Periodic::new(prefix, cycle)?;
        let dim = seq.cycle[0].dim();
        for p in seq.items() {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
        }
        Ok(Self { dim, seq })
    }

    /// The trivial sequence `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Self::constant(Permutation::identity(dim))
    }

    pub fn constant(p: Permutation) -> Self {
        Self {
            dim: p.dim(),
            seq: Periodic::constant(p),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn presentation(&self) -> &Periodic<Permutation> {
        &self.seq
    }

    pub fn at(&self, k: usize) -> &Permutation {
        self.seq.at(k)
    }

    pub fn is_trivial(&self) -> bool {
        self.seq.items().all(Permutation::is_identity)
    }

    /// `P(k:0) = P(k-1) ... P(0)`, with `P(0:0) = I`.
    pub fn product(&self, k: usize) -> Permutation {
        let mut acc = Permutation::identity(self.dim);
        for t in 0..k {
            acc = self.at(t).mul(&acc);
        }
        acc
    }

    /// Start and period of the sequence `k -> P(k:0)`.
    ///
    /// Past the prefix, one trip through the cycle multiplies the running
    /// product by a conjugate of the cycle product, so `P(k:0)` repeats
    /// after `|cycle| * order(cycle product)` steps.
    pub fn product_schedule(&self) -> (usize, usize) {
        let mut period_product = Permutation::identity(self.dim);
        for p in self.seq.cycle() {
            period_product = p.mul(&period_product);
        }
        (
            self.seq.prefix_len(),
            self.seq.cycle_len() * period_product.order(),
        )
    }

    /// The same sequence viewed as a doubly stochastic chain.
    pub fn to_chain(&self) -> Chain {
        Chain::from_parts_unchecked(
            self.seq.prefix().iter().map(Permutation::to_matrix).collect(),
            self.seq.cycle().iter().map(Permutation::to_matrix).collect(),
            Flavor::DoublyStochastic,
        )
    }
}

/// The image `P(S)` of an index set under a permutation.
pub fn apply_perm_to_set(p: &Permutation, s: &IndexSet) -> IndexSet {
    p.apply_to_set(s)
}
