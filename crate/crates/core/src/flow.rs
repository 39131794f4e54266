//! Flow functionals over index sets and exact deciders for the infinite
//! flow and absolute infinite flow properties.
//!
//! Every chain here is eventually periodic, so each infinite sum of flows is
//! either driven by a repeating positive term or is finite. A term counts as
//! positive when it exceeds `Settings::tol_zero`; terms at or below it are
//! treated as exact zeros.

use serde::Serialize;

use crate::chain::{joint_schedule, Chain, PermChain, Periodic};
use crate::matrix::StochMatrix;
use crate::set::IndexSet;
use crate::{Error, Result, Settings};

/// A sequence of index sets sharing one nonzero cardinality, presented as
/// prefix + cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularSeq {
    dim: usize,
    seq: Periodic<IndexSet>,
}

impl RegularSeq {
    pub fn new(prefix: Vec<IndexSet>, cycle: Vec<IndexSet>) -> Result<Self> {
        let seq = Periodic::new(prefix, cycle)?;
        let first = seq.cycle()[0];
        for s in seq.items() {
            if s.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: s.dim(),
                });
            }
            if !s.is_nontrivial() {
                return Err(Error::Invalid(format!(
                    "regular sequences need nonempty proper sets, got {s}"
                )));
            }
            if s.len() != first.len() {
                return Err(Error::Invalid(format!(
                    "sets {first} and {s} differ in cardinality"
                )));
            }
        }
        Ok(Self {
            dim: first.dim(),
            seq,
        })
    }

    pub fn constant(s: IndexSet) -> Result<Self> {
        Self::new(Vec::new(), vec![s])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cardinality(&self) -> usize {
        self.seq.cycle()[0].len()
    }

    pub fn at(&self, k: usize) -> IndexSet {
        *self.seq.at(k)
    }

    pub fn presentation(&self) -> &Periodic<IndexSet> {
        &self.seq
    }
}

impl Serialize for RegularSeq {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("RegularSeq", 3)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("prefix", self.seq.prefix())?;
        st.serialize_field("cycle", self.seq.cycle())?;
        st.end()
    }
}

/// How a [`total_flow`] verdict was reached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowWitness {
    /// First time from which chain and sequence are jointly periodic.
    pub period_start: usize,
    pub period_length: usize,
    /// Sum of the step flows over one joint period.
    pub period_flow: f64,
    /// Largest single step flow within the period.
    pub max_step_flow: f64,
}

/// The total flow `F({A(k)}; {S(k)})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    #[serde(rename = "infinite")]
    pub total_is_infinite: bool,
    /// Sum of all terms before the joint period; `None` when infinite.
    #[serde(rename = "value")]
    pub finite_value: Option<f64>,
    pub witness: FlowWitness,
}

/// Outcome of [`has_infinite_flow`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfiniteFlowVerdict {
    pub holds: bool,
    /// A set `S` whose accumulated flow stays finite.
    pub violating_set: Option<IndexSet>,
}

/// Outcome of [`has_absolute_infinite_flow`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsoluteFlowVerdict {
    pub holds: bool,
    /// A regular sequence carrying finite total flow.
    pub witness: Option<RegularSeq>,
}

fn check_nontrivial(s: &IndexSet) -> Result<()> {
    if !s.is_nontrivial() {
        return Err(Error::Contract(format!("{s} is not a nonempty proper subset")));
    }
    Ok(())
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `A_S`: the weight crossing between `S` and its complement in either
/// direction.
pub fn set_flow(a: &StochMatrix, s: &IndexSet) -> Result<f64> {
    check_dim(a.dim(), s.dim())?;
    check_nontrivial(s)?;
    Ok(step_flow_unchecked(a, s, s))
}

/// `A_{T,S}`: weight from rows in `next` to columns outside `cur`, plus rows
/// outside `next` to columns in `cur`.
pub fn step_flow(a: &StochMatrix, next: &IndexSet, cur: &IndexSet) -> Result<f64> {
    check_dim(a.dim(), next.dim())?;
    check_dim(a.dim(), cur.dim())?;
    check_nontrivial(next)?;
    check_nontrivial(cur)?;
    if next.len() != cur.len() {
        return Err(Error::Contract(format!(
            "step flow between sets of different size: {next} and {cur}"
        )));
    }
    Ok(step_flow_unchecked(a, next, cur))
}

pub(crate) fn step_flow_unchecked(a: &StochMatrix, next: &IndexSet, cur: &IndexSet) -> f64 {
    let mut total = 0.0;
    for i in 0..a.dim() {
        let row = a.row(i);
        let in_next = next.contains(i);
        for (j, &v) in row.iter().enumerate() {
            if in_next != cur.contains(j) {
                total += v;
            }
        }
    }
    total
}

/// Decides whether `F({A(k)}; {S(k)})` diverges.
pub fn total_flow(chain: &Chain, seq: &RegularSeq, settings: &Settings) -> Result<FlowReport> {
    check_dim(chain.dim(), seq.dim())?;
    let (start, period) = joint_schedule(&[
        (chain.prefix_len(), chain.cycle_len()),
        (seq.presentation().prefix_len(), seq.presentation().cycle_len()),
    ]);
    if period > settings.max_period {
        return Err(Error::Capacity {
            what: "joint period",
            found: period,
            limit: settings.max_period,
        });
    }
    let term = |k: usize| step_flow_unchecked(chain.matrix_at(k), &seq.at(k + 1), &seq.at(k));
    let head: f64 = (0..start).map(term).sum();
    let mut period_flow = 0.0;
    let mut max_step_flow = 0.0f64;
    for k in start..start + period {
        let f = term(k);
        period_flow += f;
        max_step_flow = max_step_flow.max(f);
    }
    let infinite = max_step_flow > settings.tol_zero;
    Ok(FlowReport {
        total_is_infinite: infinite,
        finite_value: (!infinite).then_some(head),
        witness: FlowWitness {
            period_start: start,
            period_length: period,
            period_flow,
            max_step_flow,
        },
    })
}

/// Whether `sum_k A_S(k)` diverges for every nonempty proper `S`.
pub fn has_infinite_flow(chain: &Chain, settings: &Settings) -> Result<InfiniteFlowVerdict> {
    settings.check_dim(chain.dim())?;
    let cycle = chain.presentation().cycle();
    // A_S = A_{complement of S}, so half of the lattice suffices.
    let half = 1u32 << (chain.dim() - 1);
    for s in IndexSet::nontrivial_subsets(chain.dim()).filter(|s| s.mask() < half) {
        let diverges = cycle
            .iter()
            .any(|a| step_flow_unchecked(a, &s, &s) > settings.tol_zero);
        if !diverges {
            return Ok(InfiniteFlowVerdict {
                holds: false,
                violating_set: Some(s),
            });
        }
    }
    Ok(InfiniteFlowVerdict {
        holds: true,
        violating_set: None,
    })
}

/// Per-matrix data for the zero-step graph: for each row, the mask of
/// columns carrying weight above the zero tolerance.
pub(crate) struct SupportTable {
    rows: Vec<u32>,
}

impl SupportTable {
    pub(crate) fn new(a: &StochMatrix, tol: f64) -> Self {
        let rows = (0..a.dim())
            .map(|i| {
                a.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v > tol)
                    .fold(0u32, |m, (j, _)| m | 1 << j)
            })
            .collect();
        Self { rows }
    }

    /// The only set `T` that can satisfy `A_{T,S} <= tol`.
    ///
    /// A zero step flow forces every row in `T` to be supported inside `S`
    /// and every row outside `T` to be supported outside `S`, so `T` is
    /// exactly the set of rows supported inside `S`.
    fn zero_flow_successor(&self, s: u32) -> Option<u32> {
        let mut t = 0u32;
        for (i, &supp) in self.rows.iter().enumerate() {
            if supp & !s == 0 {
                t |= 1 << i;
            } else if supp & s != 0 {
                return None;
            }
        }
        Some(t)
    }
}

/// Nodes `(set, phase)` of the zero-step graph for one cardinality class.
pub(crate) fn zero_step_successor(
    a: &StochMatrix,
    table: &SupportTable,
    s: IndexSet,
    settings: &Settings,
) -> Option<IndexSet> {
    let t = table.zero_flow_successor(s.mask())?;
    if t.count_ones() as usize != s.len() {
        return None;
    }
    let t = IndexSet::from_mask_unchecked(s.dim(), t);
    (step_flow_unchecked(a, &t, &s) <= settings.tol_zero).then_some(t)
}

/// Whether `F({A(k)}; {S(k)})` diverges along every regular sequence.
///
/// Over the chain's cycle, build for each cardinality the graph on
/// `(S, phase)` with an edge to `(T, phase + 1)` whenever the step flow
/// from `S` to `T` is zero. The property fails exactly when one of these
/// graphs has a cycle; that cycle, entered after the prefix, is returned as
/// a witness sequence.
pub fn has_absolute_infinite_flow(chain: &Chain, settings: &Settings) -> Result<AbsoluteFlowVerdict> {
    let m = chain.dim();
    settings.check_dim(m)?;
    let cycle = chain.presentation().cycle();
    let phases = cycle.len();
    let tables: Vec<SupportTable> = cycle
        .iter()
        .map(|a| SupportTable::new(a, settings.tol_zero))
        .collect();

    // Complementing both sets preserves step flows, so classes c and m - c
    // are mirror images.
    for card in 1..=m / 2 {
        let sets = IndexSet::subsets_of_size(m, card);
        if let Some((start_phase, cyc)) =
            find_zero_step_cycle(cycle, &tables, &sets, phases, settings)
        {
            let start = chain.prefix_len() + start_phase;
            let witness = RegularSeq::new(vec![cyc[0]; start], cyc)?;
            return Ok(AbsoluteFlowVerdict {
                holds: false,
                witness: Some(witness),
            });
        }
    }
    Ok(AbsoluteFlowVerdict {
        holds: true,
        witness: None,
    })
}

/// Cycle search in the functional zero-step graph of one cardinality class.
/// Returns the phase of the first cycle node and the sets along the cycle.
fn find_zero_step_cycle(
    cycle: &[StochMatrix],
    tables: &[SupportTable],
    sets: &[IndexSet],
    phases: usize,
    settings: &Settings,
) -> Option<(usize, Vec<IndexSet>)> {
    const UNSEEN: u8 = 0;
    const ON_PATH: u8 = 1;
    const DONE: u8 = 2;

    let index_of: std::collections::HashMap<u32, usize> =
        sets.iter().enumerate().map(|(n, s)| (s.mask(), n)).collect();
    let node = |set_idx: usize, phase: usize| set_idx * phases + phase;
    let mut state = vec![UNSEEN; sets.len() * phases];

    for root_set in 0..sets.len() {
        for root_phase in 0..phases {
            if state[node(root_set, root_phase)] != UNSEEN {
                continue;
            }
            let mut path: Vec<(usize, usize)> = Vec::new();
            let (mut si, mut ph) = (root_set, root_phase);
            loop {
                let id = node(si, ph);
                match state[id] {
                    ON_PATH => {
                        let pos = path.iter().position(|&n| n == (si, ph)).unwrap();
                        let cyc = path[pos..].iter().map(|&(s, _)| sets[s]).collect();
                        return Some((ph, cyc));
                    }
                    DONE => break,
                    _ => {}
                }
                state[id] = ON_PATH;
                path.push((si, ph));
                match zero_step_successor(&cycle[ph], &tables[ph], sets[si], settings) {
                    Some(t) => {
                        si = index_of[&t.mask()];
                        ph = (ph + 1) % phases;
                    }
                    None => break,
                }
            }
            for (s, p) in path {
                state[node(s, p)] = DONE;
            }
        }
    }
    None
}

/// The trajectory `S(k) = P(k:0)(S(0))` of a set under a permutation chain.
pub fn trajectory(pchain: &PermChain, s0: &IndexSet) -> Result<RegularSeq> {
    check_dim(pchain.dim(), s0.dim())?;
    check_nontrivial(s0)?;
    let pres = pchain.presentation();
    let p = pres.prefix_len();
    let l = pres.cycle_len();
    let mut sets = vec![*s0];
    let mut first_seen = std::collections::HashMap::new();
    let mut k = 0usize;
    loop {
        let s = sets[k];
        if k >= p {
            let key = (s.mask(), (k - p) % l);
            if let Some(&k0) = first_seen.get(&key) {
                let cycle = sets[k0..k].to_vec();
                sets.truncate(k0);
                return RegularSeq::new(sets, cycle);
            }
            first_seen.insert(key, k);
        }
        sets.push(pchain.at(k).apply_to_set(&s));
        k += 1;
    }
}
