//! Birkhoff-von Neumann decompositions, permutation components and the
//! rotational transformation of a chain.

use serde::Serialize;

use crate::chain::{joint_schedule, Chain, PermChain};
use crate::matching::bottleneck_assignment;
use crate::matrix::{DoublyStochMatrix, Permutation, StochMatrix};
use crate::{Error, Result, Settings};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirkhoffTerm {
    pub weight: f64,
    #[serde(serialize_with = "crate::io::serialize_perm")]
    pub perm: Permutation,
}

/// A doubly stochastic matrix written as a convex combination of
/// permutation matrices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirkhoffDecomp {
    pub terms: Vec<BirkhoffTerm>,
    /// Largest entry left over after peeling.
    pub residual: f64,
}

impl BirkhoffDecomp {
    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// `sum_t weight_t * P_t` as a dense row-major array.
    pub fn reconstruct(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim * dim];
        for t in &self.terms {
            for (i, &j) in t.perm.map().iter().enumerate() {
                out[i * dim + j] += t.weight;
            }
        }
        out
    }
}

/// Greedy Birkhoff peeling.
///
/// Each round takes the bottleneck-optimal permutation on the support of
/// the remaining matrix, subtracts its bottleneck weight times that
/// permutation, and so zeroes at least one more entry.
pub fn birkhoff_decompose(a: &DoublyStochMatrix, settings: &Settings) -> Result<BirkhoffDecomp> {
    let m = a.dim();
    let mut work = a.as_slice().to_vec();
    let mut terms = Vec::new();
    for _ in 0..=m * m {
        let peak = work.iter().copied().fold(0.0, f64::max);
        if peak <= settings.tol_zero {
            return Ok(BirkhoffDecomp {
                terms,
                residual: peak,
            });
        }
        let remaining = StochMatrix::from_vec_unchecked(m, work.clone());
        let Some((weight, map)) = bottleneck_assignment(&remaining, settings.tol_zero) else {
            return Err(Error::Invalid(format!(
                "no perfect matching on the remaining support (largest entry {peak}); \
                 input is not doubly stochastic within tolerance"
            )));
        };
        for (i, &j) in map.iter().enumerate() {
            let cell = &mut work[i * m + j];
            *cell -= weight;
            if *cell < 0.0 {
                *cell = 0.0;
            }
        }
        terms.push(BirkhoffTerm {
            weight,
            perm: Permutation::from_map_unchecked(map),
        });
    }
    Err(Error::Internal(
        "Birkhoff peeling did not terminate within m^2 + 1 rounds".into(),
    ))
}

/// The permutation `p` maximizing `min_i a[i][p(i)]`, with that bottleneck
/// value. `None` when every permutation meets an entry at or below the zero
/// tolerance.
pub fn max_mixing_permutation(a: &StochMatrix, settings: &Settings) -> Option<(f64, Permutation)> {
    bottleneck_assignment(a, settings.tol_zero)
        .map(|(gamma, map)| (gamma, Permutation::from_map_unchecked(map)))
}

/// A split `A(k) = gamma P(k) + (1 - gamma) R(k)` with a single mixing
/// coefficient for the whole chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PermComponent {
    pub gamma: f64,
    pub pchain: PermChain,
    /// The stochastic remainder `R(k)`; identity matrices when degenerate.
    pub residual_chain: Chain,
    /// The chain is a pure permutation chain (`gamma = 1`).
    pub degenerate: bool,
}

/// Extracts a permutation component by taking the bottleneck permutation of
/// every matrix in the presentation and the smallest bottleneck as `gamma`.
pub fn decompose_chain(chain: &Chain, settings: &Settings) -> Option<PermComponent> {
    let pres = chain.presentation();
    let split = |mats: &[StochMatrix]| -> Option<Vec<(f64, Permutation)>> {
        mats.iter()
            .map(|a| max_mixing_permutation(a, settings))
            .collect()
    };
    let prefix = split(pres.prefix())?;
    let cycle = split(pres.cycle())?;
    let mut gamma = prefix
        .iter()
        .chain(&cycle)
        .map(|(g, _)| *g)
        .fold(f64::INFINITY, f64::min);
    let degenerate = gamma >= 1.0 - settings.tol_zero;
    if degenerate {
        gamma = 1.0;
    }
    let m = chain.dim();
    let remainder = |a: &StochMatrix, p: &Permutation| -> StochMatrix {
        if degenerate {
            return StochMatrix::identity(m);
        }
        let mut data: Vec<f64> = a.as_slice().iter().map(|v| v / (1.0 - gamma)).collect();
        for (i, &j) in p.map().iter().enumerate() {
            let v = (a.get(i, j) - gamma) / (1.0 - gamma);
            data[i * m + j] = v.max(0.0);
        }
        StochMatrix::from_vec_unchecked(m, data)
    };
    let residual_prefix = pres
        .prefix()
        .iter()
        .zip(&prefix)
        .map(|(a, (_, p))| remainder(a, p))
        .collect();
    let residual_cycle = pres
        .cycle()
        .iter()
        .zip(&cycle)
        .map(|(a, (_, p))| remainder(a, p))
        .collect();
    let pchain = PermChain::new(
        prefix.into_iter().map(|(_, p)| p).collect(),
        cycle.into_iter().map(|(_, p)| p).collect(),
    )
    .expect("shapes mirror a valid chain");
    Some(PermComponent {
        gamma,
        pchain,
        residual_chain: Chain::from_parts_unchecked(residual_prefix, residual_cycle, chain.flavor()),
        degenerate,
    })
}

/// The rotational transformation `B(k) = P(k+1:0)^T A(k) P(k:0)`.
///
/// The result is presented with prefix length `max(|prefix A|, |prefix P|)`
/// and cycle length `lcm(|cycle A|, |cycle P| * order of the cycle product)`.
pub fn rotate_chain(chain: &Chain, pchain: &PermChain, settings: &Settings) -> Result<Chain> {
    if chain.dim() != pchain.dim() {
        return Err(Error::DimensionMismatch {
            expected: chain.dim(),
            found: pchain.dim(),
        });
    }
    let (start, period) = joint_schedule(&[
        (chain.prefix_len(), chain.cycle_len()),
        pchain.product_schedule(),
    ]);
    if period > settings.max_period {
        return Err(Error::Capacity {
            what: "rotated chain period",
            found: period,
            limit: settings.max_period,
        });
    }
    let mut cur = Permutation::identity(chain.dim());
    let mut out = Vec::with_capacity(start + period);
    for k in 0..start + period {
        let next = pchain.at(k).mul(&cur);
        out.push(rotate_matrix(chain.matrix_at(k), &cur, &next));
        cur = next;
    }
    let cycle = out.split_off(start);
    Ok(Chain::from_parts_unchecked(out, cycle, chain.flavor()))
}

/// `P_next^T a P_cur` computed by re-indexing: entry `(i, j)` is
/// `a[i'][j']` where `P_next e_i = e_i'` and `P_cur e_j = e_j'`.
pub(crate) fn rotate_matrix(a: &StochMatrix, cur: &Permutation, next: &Permutation) -> StochMatrix {
    let m = a.dim();
    let row_src = next.inverse();
    let col_src = cur.inverse();
    let mut data = Vec::with_capacity(m * m);
    for &src in row_src.map() {
        data.extend(col_src.map().iter().map(|&j| a.get(src, j)));
    }
    StochMatrix::from_vec_unchecked(m, data)
}

/// Checks `B(k:s) = P(k:0)^T A(k:s) P(s:0)` entrywise within `1e-10`,
/// computing the right side by dense products.
pub fn rotated_product_identity_check(
    chain: &Chain,
    pchain: &PermChain,
    k: usize,
    s: usize,
    settings: &Settings,
) -> Result<bool> {
    let rotated = rotate_chain(chain, pchain, settings)?;
    let lhs = rotated.backward_product(k, s)?;
    let left = pchain.product(k).inverse().to_matrix();
    let right = pchain.product(s).to_matrix();
    let rhs = left.mul(&chain.backward_product(k, s)?).mul(&right);
    Ok(lhs.max_abs_diff(&rhs) <= 1e-10)
}
