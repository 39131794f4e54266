//! Dense row-stochastic matrices and permutations.

use std::fmt;
use std::ops::Deref;

use crate::set::IndexSet;
use crate::{Error, Result};

/// Dense `m x m` row-stochastic matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StochMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl StochMatrix {
    /// Validates nonnegativity and unit row sums within `tol`.
    ///
    /// Entries in `[-tol, 0)` are clamped to zero.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Invalid("matrix has no rows".into()));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(dim, data, tol)
    }

    pub fn from_vec(dim: usize, mut data: Vec<f64>, tol: f64) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        for (idx, v) in data.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::Invalid(format!(
                    "entry ({}, {}) is not finite",
                    idx / dim,
                    idx % dim
                )));
            }
            if *v < 0.0 {
                if *v < -tol {
                    return Err(Error::NegativeEntry {
                        row: idx / dim,
                        col: idx % dim,
                        value: *v,
                    });
                }
                *v = 0.0;
            }
        }
        for (row, chunk) in data.chunks(dim).enumerate() {
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::RowSum { row, sum });
            }
        }
        Ok(Self { dim, data })
    }

    /// Caller guarantees the entries form a stochastic matrix up to rounding.
    pub(crate) fn from_vec_unchecked(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    /// The averaging matrix `(1/m) e e^T`.
    pub fn uniform(dim: usize) -> Self {
        Self {
            dim,
            data: vec![1.0 / dim as f64; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.data.chunks(self.dim).map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for row in self.data.chunks(self.dim) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        self.column_sums().iter().all(|s| (s - 1.0).abs() <= tol)
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &StochMatrix) -> StochMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in product");
        let m = self.dim;
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            let out_row = &mut out[i * m..(i + 1) * m];
            for l in 0..m {
                let a = self.data[i * m + l];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(&rhs.data[l * m..(l + 1) * m]) {
                    *o += a * b;
                }
            }
        }
        StochMatrix { dim: m, data: out }
    }

    /// Matrix-vector product `self * x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "vector length mismatch");
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &StochMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest Euclidean distance between two rows.
    pub fn row_spread(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                worst = worst.max(euclidean(self.row(i), self.row(j)));
            }
        }
        worst
    }

    /// Smallest diagonal entry.
    pub fn min_diagonal(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.get(i, i))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl fmt::Display for StochMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.data.chunks(self.dim) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// A stochastic matrix whose columns also sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublyStochMatrix(StochMatrix);

impl DoublyStochMatrix {
    pub fn new(base: StochMatrix, tol: f64) -> Result<Self> {
        for (col, sum) in base.column_sums().into_iter().enumerate() {
            if (sum - 1.0).abs() > tol {
                return Err(Error::ColumnSum { col, sum });
            }
        }
        Ok(Self(base))
    }

    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        Self::new(StochMatrix::from_rows(rows, tol)?, tol)
    }

    pub fn into_inner(self) -> StochMatrix {
        self.0
    }
}

impl Deref for DoublyStochMatrix {
    type Target = StochMatrix;

    fn deref(&self) -> &StochMatrix {
        &self.0
    }
}

/// A permutation of `{0, .., m-1}`, viewed as the matrix with
/// `P[i][map[i]] = 1`.
///
/// Under this convention `P e_j = e_{image(j)}` where `image(j)` is the row
/// holding the one in column `j`, and the set image `P(S)` is
/// `{ i : map[i] in S }`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        if map.is_empty() {
            return Err(Error::Invalid("empty permutation".into()));
        }
        let mut seen = vec![false; map.len()];
        for &j in &map {
            if j >= map.len() || seen[j] {
                return Err(Error::Invalid(format!("{map:?} is not a bijection")));
            }
            seen[j] = true;
        }
        Ok(Self { map })
    }

    pub(crate) fn from_map_unchecked(map: Vec<usize>) -> Self {
        Self { map }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            map: (0..dim).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.map.len()
    }

    /// Column of the one in row `i`.
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { map: inv }
    }

    /// Row index `i` with `P e_j = e_i`.
    pub fn image(&self, j: usize) -> usize {
        self.map.iter().position(|&c| c == j).expect("bijection")
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Permutation) -> Permutation {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in product");
        Permutation {
            map: self.map.iter().map(|&j| rhs.map[j]).collect(),
        }
    }

    pub fn to_matrix(&self) -> StochMatrix {
        let m = self.dim();
        let mut data = vec![0.0; m * m];
        for (i, &j) in self.map.iter().enumerate() {
            data[i * m + j] = 1.0;
        }
        StochMatrix::from_vec_unchecked(m, data)
    }

    /// The image set `P(S) = { i : P[i][j] = 1 for some j in S }`.
    pub fn apply_to_set(&self, s: &IndexSet) -> IndexSet {
        let mut mask = 0u32;
        for (i, &j) in self.map.iter().enumerate() {
            if s.contains(j) {
                mask |= 1 << i;
            }
        }
        IndexSet::from_mask_unchecked(self.dim(), mask)
    }

    /// `(P x)_i = x[map[i]]`.
    pub fn apply_to_vec(&self, x: &[f64]) -> Vec<f64> {
        self.map.iter().map(|&j| x[j]).collect()
    }

    /// Multiplicative order: the lcm of the cycle lengths.
    pub fn order(&self) -> usize {
        let mut seen = vec![false; self.dim()];
        let mut order = 1;
        for start in 0..self.dim() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.map[i];
                len += 1;
            }
            order = lcm(order, len);
        }
        order
    }
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}
