//! Bipartite matching on small dense supports.
//!
//! Rows and columns are `0..m` with `m <= 32`; the allowed columns of row
//! `i` are the bits of `adj[i]`.

use crate::matrix::StochMatrix;

/// Any perfect matching, as a row -> column map (augmenting paths).
pub(crate) fn perfect_matching(adj: &[u32]) -> Option<Vec<usize>> {
    let m = adj.len();
    let mut col_owner: Vec<Option<usize>> = vec![None; m];
    for row in 0..m {
        let mut visited = 0u32;
        if !augment(row, adj, &mut col_owner, &mut visited) {
            return None;
        }
    }
    let mut rows = vec![0; m];
    for (col, owner) in col_owner.iter().enumerate() {
        rows[owner.expect("perfect")] = col;
    }
    Some(rows)
}

fn augment(row: usize, adj: &[u32], col_owner: &mut [Option<usize>], visited: &mut u32) -> bool {
    let mut cand = adj[row] & !*visited;
    while cand != 0 {
        let col = cand.trailing_zeros() as usize;
        cand &= cand - 1;
        *visited |= 1 << col;
        let free = match col_owner[col] {
            None => true,
            Some(other) => augment(other, adj, col_owner, visited),
        };
        if free {
            col_owner[col] = Some(row);
            return true;
        }
    }
    false
}

/// Whether rows `from..m` can be matched into `free_cols`.
fn completable(adj: &[u32], from: usize, free_cols: u32) -> bool {
    let sub: Vec<u32> = adj[from..].iter().map(|a| a & free_cols).collect();
    // |free_cols| == m - from, so saturating the rows saturates the columns.
    perfect_matching_partial(&sub)
}

fn perfect_matching_partial(adj: &[u32]) -> bool {
    let width = 32;
    let mut col_owner: Vec<Option<usize>> = vec![None; width];
    for row in 0..adj.len() {
        let mut visited = 0u32;
        if !augment(row, adj, &mut col_owner, &mut visited) {
            return false;
        }
    }
    true
}

/// The lexicographically smallest perfect matching (row -> column).
pub(crate) fn lexicographic_matching(adj: &[u32]) -> Option<Vec<usize>> {
    let m = adj.len();
    let mut free = if m >= 32 { u32::MAX } else { (1u32 << m) - 1 };
    let mut out = Vec::with_capacity(m);
    for row in 0..m {
        let mut cand = adj[row] & free;
        let mut chosen = None;
        while cand != 0 {
            let col = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            if completable(adj, row + 1, free & !(1 << col)) {
                chosen = Some(col);
                break;
            }
        }
        let col = chosen?;
        free &= !(1 << col);
        out.push(col);
    }
    Some(out)
}

fn threshold_support(a: &StochMatrix, theta: f64) -> Vec<u32> {
    (0..a.dim())
        .map(|i| {
            a.row(i)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v >= theta)
                .fold(0u32, |acc, (j, _)| acc | 1 << j)
        })
        .collect()
}

/// Bottleneck assignment: the permutation maximizing `min_i a[i][p(i)]`.
///
/// Binary search over the distinct entries above `tol` for the largest
/// threshold whose support still has a perfect matching; ties are broken
/// by the lexicographically smallest row -> column map. `None` when no
/// permutation avoids entries at or below `tol`.
pub(crate) fn bottleneck_assignment(a: &StochMatrix, tol: f64) -> Option<(f64, Vec<usize>)> {
    let mut values: Vec<f64> = a.as_slice().iter().copied().filter(|&v| v > tol).collect();
    values.sort_by(|x, y| x.partial_cmp(y).expect("finite entries"));
    values.dedup();
    if values.is_empty() || perfect_matching(&threshold_support(a, values[0])).is_none() {
        return None;
    }
    // Invariant: values[lo] feasible, values[hi] infeasible (or past end).
    let (mut lo, mut hi) = (0usize, values.len());
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if perfect_matching(&threshold_support(a, values[mid])).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let support = threshold_support(a, values[lo]);
    let map = lexicographic_matching(&support)?;
    let gamma = map
        .iter()
        .enumerate()
        .map(|(i, &j)| a.get(i, j))
        .fold(f64::INFINITY, f64::min);
    Some((gamma, map))
}
