//! Ergodicity verdicts, the Lyapunov function, accumulation times and rate
//! certificates for doubly stochastic chains, the infinite flow graph, and
//! limits of backward products up to a row permutation.

use serde::Serialize;

use crate::birkhoff::{decompose_chain, rotate_matrix, PermComponent};
use crate::chain::{joint_schedule, Chain, PermChain};
use crate::flow::{has_absolute_infinite_flow, total_flow, trajectory, RegularSeq};
use crate::matrix::{DoublyStochMatrix, Permutation, StochMatrix};
use crate::set::IndexSet;
use crate::{Error, Result, Settings};

/// `x(0), ..., x(horizon)` under `x(k+1) = A(k) x(k)`.
pub fn simulate(chain: &Chain, x0: &[f64], horizon: usize) -> Result<Vec<Vec<f64>>> {
    check_len(chain.dim(), x0.len())?;
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(x0.to_vec());
    for k in 0..horizon {
        let next = chain.matrix_at(k).apply(&out[k]);
        out.push(next);
    }
    Ok(out)
}

/// `V(x) = sum_i (x_i - mean)^2`.
pub fn lyapunov(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum()
}

/// Compares `V(Ax)` with `V(x) - sum_{i<j} H_ij (x_i - x_j)^2`, `H = A^T A`,
/// within `1e-10` relative to `1 + V(x)`.
pub fn lyapunov_decrease_identity_check(a: &DoublyStochMatrix, x: &[f64]) -> bool {
    let m = a.dim();
    if x.len() != m {
        return false;
    }
    let direct = lyapunov(&a.apply(x));
    let mut drop = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let h: f64 = (0..m).map(|l| a.get(l, i) * a.get(l, j)).sum();
            drop += h * (x[i] - x[j]).powi(2);
        }
    }
    let v = lyapunov(x);
    (direct - (v - drop)).abs() <= 1e-10 * (1.0 + v)
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Contract(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Yields the rotated matrices `B(0), B(1), ...` of a chain along a
/// permutation chain.
struct RotatedWalk<'a> {
    chain: &'a Chain,
    pchain: &'a PermChain,
    k: usize,
    cur: Permutation,
}

impl<'a> RotatedWalk<'a> {
    fn new(chain: &'a Chain, pchain: &'a PermChain) -> Self {
        Self {
            chain,
            pchain,
            k: 0,
            cur: Permutation::identity(chain.dim()),
        }
    }
}

impl Iterator for RotatedWalk<'_> {
    type Item = StochMatrix;

    fn next(&mut self) -> Option<StochMatrix> {
        let next = self.pchain.at(self.k).mul(&self.cur);
        let b = rotate_matrix(self.chain.matrix_at(self.k), &self.cur, &next);
        self.cur = next;
        self.k += 1;
        Some(b)
    }
}

/// One mask per complementary pair of nonempty proper subsets: those
/// without the last index.
fn representatives(m: usize) -> Vec<u32> {
    if m < 2 {
        return Vec::new();
    }
    (1..1u32 << (m - 1)).collect()
}

/// `B_S` for each mask. Rotated set flows equal the trajectory flows
/// `A_{S(k+1), S(k)}(k)` of the original chain.
fn set_flows(b: &StochMatrix, masks: &[u32]) -> Vec<f64> {
    let m = b.dim();
    masks
        .iter()
        .map(|&s| {
            let mut total = 0.0;
            for i in 0..m {
                let in_s = s >> i & 1 == 1;
                for (j, &v) in b.row(i).iter().enumerate() {
                    if in_s != (s >> j & 1 == 1) {
                        total += v;
                    }
                }
            }
            total
        })
        .collect()
}

/// Start and length of the joint period of a chain and the products of a
/// permutation chain, checked against the period cap.
fn rotated_schedule(chain: &Chain, pchain: &PermChain, settings: &Settings) -> Result<(usize, usize)> {
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
            what: "joint period",
            found: period,
            limit: settings.max_period,
        });
    }
    Ok((start, period))
}

/// Positions in `masks` whose trajectory flow is zero throughout the joint
/// period, i.e. whose total trajectory flow is finite. Also returns the
/// start of the joint period.
fn starving_masks(
    chain: &Chain,
    pchain: &PermChain,
    masks: &[u32],
    settings: &Settings,
) -> Result<(usize, Vec<usize>)> {
    let (start, period) = rotated_schedule(chain, pchain, settings)?;
    let mut positive = vec![false; masks.len()];
    for b in RotatedWalk::new(chain, pchain).skip(start).take(period) {
        for (p, f) in positive.iter_mut().zip(set_flows(&b, masks)) {
            *p |= f > settings.tol_zero;
        }
    }
    let starving = (0..masks.len()).filter(|&i| !positive[i]).collect();
    Ok((start, starving))
}

/// The accumulation times `t_1, ..., t_count` (with `t_0 = 0`).
///
/// `t_q` is the first time at which every trajectory under the permutation
/// component has gathered flow at least `delta` since `t_{q-1}`. Returns
/// [`Error::Starved`] with the offending initial set when some trajectory
/// carries only finite flow and the times stop existing.
pub fn accumulation_times(
    chain: &Chain,
    pcomp: &PermComponent,
    delta: f64,
    count: usize,
    settings: &Settings,
) -> Result<Vec<usize>> {
    check_delta(delta)?;
    let m = chain.dim();
    settings.check_dim(m)?;
    let pchain = &pcomp.pchain;
    let masks = representatives(m);
    let (start, starving) = starving_masks(chain, pchain, &masks, settings)?;

    let mut acc = vec![0.0; masks.len()];
    let mut times = Vec::with_capacity(count);
    let mut walk = RotatedWalk::new(chain, pchain);
    let mut t = 0usize;
    while times.len() < count {
        if t >= start {
            if let Some(&i) = starving.iter().find(|&&i| acc[i] < delta) {
                return Err(Error::Starved {
                    set: IndexSet::from_mask_unchecked(m, masks[i]),
                });
            }
        }
        let b = walk.next().expect("walk is infinite");
        for (a, f) in acc.iter_mut().zip(set_flows(&b, &masks)) {
            *a += f;
        }
        t += 1;
        if acc.iter().all(|&a| a >= delta) {
            times.push(t);
            acc.iter_mut().for_each(|a| *a = 0.0);
        }
    }
    Ok(times)
}

/// One row of a rate certificate trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub q: usize,
    pub t: usize,
    /// `V(x(t_q))`.
    pub v: f64,
    /// `c V(x(t_{q-1}))`, or `V(x(0))` for `q = 0`.
    pub bound: f64,
}

/// A checked geometric decrease of `V` along the accumulation times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCertificate {
    pub gamma: f64,
    pub delta: f64,
    pub accumulation_times: Vec<usize>,
    pub contraction_factor: f64,
    pub trace: Vec<RatePoint>,
}

/// Simulates a doubly stochastic chain from `x0` and verifies
/// `V(x(t_q)) <= (1 - gamma delta (1-delta)^2 / (m (m-1)^2)) V(x(t_{q-1}))`
/// at every accumulation time.
///
/// An absolute slack of `1e-24 (1 + |x0|^2)` absorbs rounding once `V`
/// reaches the floating-point noise floor.
pub fn rate_certificate(
    chain: &Chain,
    x0: &[f64],
    delta: f64,
    count: usize,
    settings: &Settings,
) -> Result<RateCertificate> {
    if !chain.is_doubly_stochastic() {
        return Err(Error::Contract(
            "rate certificates need a doubly stochastic chain".into(),
        ));
    }
    let m = chain.dim();
    if m < 2 {
        return Err(Error::Contract("rate certificates need dimension at least 2".into()));
    }
    check_len(m, x0.len())?;
    check_delta(delta)?;
    let pcomp = decompose_chain(chain, settings).ok_or_else(|| {
        Error::Internal("doubly stochastic chain without a permutation component".into())
    })?;
    let times = accumulation_times(chain, &pcomp, delta, count, settings)?;

    let gamma = pcomp.gamma;
    let mf = m as f64;
    let factor = 1.0 - gamma * delta * (1.0 - delta).powi(2) / (mf * (mf - 1.0).powi(2));
    let slack = 1e-24 * (1.0 + x0.iter().map(|v| v * v).sum::<f64>());

    let mut x = x0.to_vec();
    let mut k = 0usize;
    let v0 = lyapunov(&x);
    let mut trace = vec![RatePoint {
        q: 0,
        t: 0,
        v: v0,
        bound: v0,
    }];
    for (idx, &t) in times.iter().enumerate() {
        while k < t {
            x = chain.matrix_at(k).apply(&x);
            k += 1;
        }
        let v = lyapunov(&x);
        let bound = factor * trace[idx].v;
        if v > bound + slack {
            return Err(Error::Internal(format!(
                "contraction violated at q = {}: V = {v:e} exceeds bound {bound:e}",
                idx + 1
            )));
        }
        trace.push(RatePoint {
            q: idx + 1,
            t,
            v,
            bound,
        });
    }
    Ok(RateCertificate {
        gamma,
        delta,
        accumulation_times: times,
        contraction_factor: factor,
        trace,
    })
}

/// Undirected graph on `[m]` linking `i` and `j` when the flow between
/// their trajectories under a permutation chain diverges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfiniteFlowGraph {
    pub dim: usize,
    /// Pairs `[i, j]` with `i < j`, in lexicographic order.
    pub edges: Vec<[usize; 2]>,
    /// Connected components, ordered by smallest member.
    pub components: Vec<IndexSet>,
    pub perm_component: PermChain,
}

impl InfiniteFlowGraph {
    pub fn is_connected(&self) -> bool {
        self.components.len() <= 1
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&[i.min(j), i.max(j)])
    }
}

/// Builds the infinite flow graph: `{i, j}` is an edge when
/// `A_{i(k+1) j(k)}(k) + A_{j(k+1) i(k)}(k)` is positive somewhere in the
/// joint period, with `i(k)` the trajectory of `i` under `pcomp.pchain`.
pub fn infinite_flow_graph(
    chain: &Chain,
    pcomp: &PermComponent,
    settings: &Settings,
) -> Result<InfiniteFlowGraph> {
    let m = chain.dim();
    settings.check_dim(m)?;
    let pchain = &pcomp.pchain;
    let (start, period) = rotated_schedule(chain, pchain, settings)?;
    let mut linked = vec![false; m * m];
    for b in RotatedWalk::new(chain, pchain).skip(start).take(period) {
        for i in 0..m {
            for j in i + 1..m {
                linked[i * m + j] |= b.get(i, j) + b.get(j, i) > settings.tol_zero;
            }
        }
    }

    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut edges = Vec::new();
    let mut parent: Vec<usize> = (0..m).collect();
    for i in 0..m {
        for j in i + 1..m {
            if linked[i * m + j] {
                edges.push([i, j]);
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<(usize, u32)> = Vec::new();
    for i in 0..m {
        let r = root(&mut parent, i);
        match groups.iter_mut().find(|(g, _)| *g == r) {
            Some((_, mask)) => *mask |= 1 << i,
            None => groups.push((r, 1 << i)),
        }
    }
    let components = groups
        .into_iter()
        .map(|(_, mask)| IndexSet::from_mask_unchecked(m, mask))
        .collect();
    Ok(InfiniteFlowGraph {
        dim: m,
        edges,
        components,
        perm_component: pchain.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ergodic,
    NotErgodic,
    Undecided,
}

/// Which argument produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    /// Doubly stochastic chains are ergodic exactly when every trajectory
    /// under a permutation component carries infinite flow.
    AbsoluteFlowEquivalence,
    /// Absolute infinite flow fails, which rules out ergodicity.
    AbsoluteFlowViolation,
    /// Flow tests are inconclusive; only numerical evidence is attached.
    NumericalOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadSample {
    pub k: usize,
    /// Largest Euclidean distance between two rows of `A(k:0)`.
    pub spread: f64,
}

/// A non-constant vector fixed by every matrix of the chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPoint {
    pub vector: Vec<f64>,
    /// `max_k |A(k) v - v|_inf` over the presentation.
    pub residual: f64,
    /// `max_i v_i - min_i v_i`.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictWitness {
    /// A regular sequence with finite total flow.
    Sequence { sequence: RegularSeq },
    Numerical {
        spread_trace: Vec<SpreadSample>,
        fixed_point: Option<FixedPoint>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityVerdict {
    pub status: Status,
    pub reason: Reason,
    pub witness: Option<VerdictWitness>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictOptions {
    /// The spread trace samples `k = 2^0, ..., 2^spread_exponent`.
    pub spread_exponent: u32,
    /// Largest residual accepted for a fixed-point candidate.
    pub fixed_point_tol: f64,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            spread_exponent: 20,
            fixed_point_tol: 1e-9,
        }
    }
}

/// [`ergodicity_verdict_with`] under default options.
pub fn ergodicity_verdict(chain: &Chain, settings: &Settings) -> Result<ErgodicityVerdict> {
    ergodicity_verdict_with(chain, settings, &VerdictOptions::default())
}

/// Decides ergodicity exactly for doubly stochastic chains. For general
/// chains a failure of absolute infinite flow proves non-ergodicity, and
/// anything else is reported as undecided with numerical diagnostics.
pub fn ergodicity_verdict_with(
    chain: &Chain,
    settings: &Settings,
    options: &VerdictOptions,
) -> Result<ErgodicityVerdict> {
    let m = chain.dim();
    settings.check_dim(m)?;
    if chain.is_doubly_stochastic() {
        if let Some(pcomp) = decompose_chain(chain, settings) {
            return doubly_stochastic_verdict(chain, &pcomp, settings);
        }
    }
    let absolute = has_absolute_infinite_flow(chain, settings)?;
    if let Some(sequence) = absolute.witness {
        return Ok(ErgodicityVerdict {
            status: Status::NotErgodic,
            reason: Reason::AbsoluteFlowViolation,
            witness: Some(VerdictWitness::Sequence { sequence }),
        });
    }
    let (spread_trace, last) = spread_trace(chain, options.spread_exponent);
    let fixed_point = fixed_point_candidate(chain, &last, options.fixed_point_tol);
    Ok(ErgodicityVerdict {
        status: Status::Undecided,
        reason: Reason::NumericalOnly,
        witness: Some(VerdictWitness::Numerical {
            spread_trace,
            fixed_point,
        }),
    })
}

fn doubly_stochastic_verdict(
    chain: &Chain,
    pcomp: &PermComponent,
    settings: &Settings,
) -> Result<ErgodicityVerdict> {
    let m = chain.dim();
    let masks = representatives(m);
    let (_, starving) = starving_masks(chain, &pcomp.pchain, &masks, settings)?;
    let Some(&i) = starving.first() else {
        return Ok(ErgodicityVerdict {
            status: Status::Ergodic,
            reason: Reason::AbsoluteFlowEquivalence,
            witness: None,
        });
    };
    let s0 = IndexSet::from_mask_unchecked(m, masks[i]);
    let sequence = trajectory(&pcomp.pchain, &s0)?;
    if total_flow(chain, &sequence, settings)?.total_is_infinite {
        return Err(Error::Internal(format!(
            "trajectory of {s0} was flagged finite but carries infinite flow"
        )));
    }
    Ok(ErgodicityVerdict {
        status: Status::NotErgodic,
        reason: Reason::AbsoluteFlowEquivalence,
        witness: Some(VerdictWitness::Sequence { sequence }),
    })
}

fn spread_trace(chain: &Chain, exponent: u32) -> (Vec<SpreadSample>, StochMatrix) {
    let mut samples = Vec::new();
    let mut last = StochMatrix::identity(chain.dim());
    for h in 0..=exponent {
        let k = 1usize << h;
        last = fast_backward_product(chain, k, 0);
        samples.push(SpreadSample {
            k,
            spread: last.row_spread(),
        });
    }
    (samples, last)
}

/// The column of `product` with the largest spread, kept when every matrix
/// of the chain fixes it.
fn fixed_point_candidate(chain: &Chain, product: &StochMatrix, tol: f64) -> Option<FixedPoint> {
    let spread_of = |v: &[f64]| {
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for j in 0..product.dim() {
        let v = product.column(j);
        let s = spread_of(&v);
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((v, s));
        }
    }
    let (vector, spread) = best?;
    if spread <= tol.sqrt() {
        return None;
    }
    let residual = chain
        .presentation()
        .items()
        .map(|a| {
            a.apply(&vector)
                .iter()
                .zip(&vector)
                .map(|(y, x)| (y - x).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    (residual <= tol).then_some(FixedPoint {
        vector,
        residual,
        spread,
    })
}

fn matrix_power(a: &StochMatrix, mut n: usize) -> StochMatrix {
    let mut result = StochMatrix::identity(a.dim());
    let mut base = a.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = base.mul(&result);
        }
        n >>= 1;
        if n > 0 {
            base = base.mul(&base);
        }
    }
    result
}

/// `A(k-1) ... A(s)` by direct multiplication, identity when `k <= s`.
fn direct_product(chain: &Chain, k: usize, s: usize) -> StochMatrix {
    let mut acc = StochMatrix::identity(chain.dim());
    for t in s..k {
        acc = chain.matrix_at(t).mul(&acc);
    }
    acc
}

/// `A(k:s)`, using repeated squaring of the cycle product for long spans.
pub(crate) fn fast_backward_product(chain: &Chain, k: usize, s: usize) -> StochMatrix {
    let (p, l) = (chain.prefix_len(), chain.cycle_len());
    if k <= s + 4 * l || k <= p + 2 * l {
        return direct_product(chain, k, s);
    }
    // First cycle-aligned time at or after max(s, p).
    let base = s.max(p);
    let aligned = base + (l - (base - p) % l) % l;
    let cycles = (k - aligned) / l;
    let end = aligned + cycles * l;
    let head = direct_product(chain, aligned, s);
    let period = direct_product(chain, aligned + l, aligned);
    let tail = direct_product(chain, k, end);
    tail.mul(&matrix_power(&period, cycles)).mul(&head)
}

/// `Q(h) A(h:t0)` with `Q(h) = P(h:0)^T`, the predicted row clusters and a
/// Cauchy residual against the midpoint horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate {
    pub q: Permutation,
    pub limit_estimate: StochMatrix,
    pub clusters: Vec<IndexSet>,
    /// `max |Q(h) A(h:t0) - Q(h') A(h':t0)|` with `h' = t0 + (h - t0) / 2`.
    pub cauchy_residual: f64,
}

/// Row `i` of `Q(h) A(h:t0)` is row `i(h)` of `A(h:t0)`.
fn permuted_product(
    chain: &Chain,
    pchain: &PermChain,
    h: usize,
    t0: usize,
) -> (Permutation, StochMatrix) {
    let q = pchain.product(h).inverse();
    let prod = fast_backward_product(chain, h, t0);
    let m = chain.dim();
    let mut data = Vec::with_capacity(m * m);
    for &src in q.map() {
        data.extend_from_slice(prod.row(src));
    }
    (q, StochMatrix::from_vec_unchecked(m, data))
}

/// Estimates the limit of `Q(k) A(k:t0)` for a doubly stochastic chain at
/// `k = horizon`.
pub fn limit_up_to_permutation(
    chain: &Chain,
    t0: usize,
    horizon: usize,
    settings: &Settings,
) -> Result<LimitEstimate> {
    if !chain.is_doubly_stochastic() {
        return Err(Error::Contract(
            "limits up to permutation need a doubly stochastic chain".into(),
        ));
    }
    if horizon <= t0 {
        return Err(Error::Contract(format!(
            "horizon {horizon} must exceed the start time {t0}"
        )));
    }
    settings.check_dim(chain.dim())?;
    let pcomp = decompose_chain(chain, settings).ok_or_else(|| {
        Error::Internal("doubly stochastic chain without a permutation component".into())
    })?;
    let graph = infinite_flow_graph(chain, &pcomp, settings)?;
    let (q, estimate) = permuted_product(chain, &pcomp.pchain, horizon, t0);
    let (_, earlier) = permuted_product(chain, &pcomp.pchain, t0 + (horizon - t0) / 2, t0);
    Ok(LimitEstimate {
        q,
        cauchy_residual: estimate.max_abs_diff(&earlier),
        limit_estimate: estimate,
        clusters: graph.components,
    })
}
