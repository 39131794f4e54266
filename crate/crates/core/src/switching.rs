//! Absolute asymptotic stability of finite matrix collections through the
//! zero-flow graph on index sets.

use serde::{Deserialize, Serialize};

use crate::chain::{Chain, Flavor};
use crate::flow::{step_flow_unchecked, zero_step_successor, RegularSeq, SupportTable};
use crate::matrix::StochMatrix;
use crate::set::IndexSet;
use crate::{Error, Result, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionFlavor {
    Stochastic,
    DoublyStochastic,
    /// Doubly stochastic with every diagonal entry above the zero tolerance,
    /// so the identity is a common permutation component.
    DoublyStochasticTrivialComponent,
}

impl CollectionFlavor {
    fn is_doubly_stochastic(self) -> bool {
        self != CollectionFlavor::Stochastic
    }
}

/// A nonempty finite set of stochastic matrices of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    dim: usize,
    matrices: Vec<StochMatrix>,
    flavor: CollectionFlavor,
}

impl Collection {
    pub fn new(
        matrices: Vec<StochMatrix>,
        flavor: CollectionFlavor,
        settings: &Settings,
    ) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::Invalid("a collection needs at least one matrix".into()));
        };
        let dim = first.dim();
        for (idx, a) in matrices.iter().enumerate() {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.dim(),
                });
            }
            if flavor.is_doubly_stochastic() && !a.is_doubly_stochastic(settings.tol_stoch) {
                return Err(Error::Invalid(format!(
                    "matrix {idx} is not doubly stochastic"
                )));
            }
            if flavor == CollectionFlavor::DoublyStochasticTrivialComponent
                && a.min_diagonal() <= settings.tol_zero
            {
                return Err(Error::Invalid(format!(
                    "matrix {idx} has a zero diagonal entry, so the identity is not a permutation component"
                )));
            }
        }
        Ok(Self {
            dim,
            matrices,
            flavor,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrices(&self) -> &[StochMatrix] {
        &self.matrices
    }

    pub fn flavor(&self) -> CollectionFlavor {
        self.flavor
    }
}

/// Zero-flow edges among the sets of one cardinality.
#[derive(Debug, Clone, PartialEq)]
pub struct CardinalityClass {
    pub cardinality: usize,
    /// Nodes in increasing mask order.
    pub nodes: Vec<IndexSet>,
    /// `successors[n]` lists node positions, increasing and deduplicated.
    pub successors: Vec<Vec<usize>>,
}

/// The directed graph with an edge `(S, T)` whenever some matrix of the
/// collection carries zero flow from `S` to `T`. Edges only join sets of
/// equal size, so the graph is stored one cardinality class at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroFlowGraph {
    pub dim: usize,
    pub classes: Vec<CardinalityClass>,
}

impl ZeroFlowGraph {
    pub fn edges(&self) -> Vec<(IndexSet, IndexSet)> {
        let mut out = Vec::new();
        for class in &self.classes {
            for (n, succ) in class.successors.iter().enumerate() {
                out.extend(succ.iter().map(|&t| (class.nodes[n], class.nodes[t])));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.classes
            .iter()
            .map(|c| c.successors.iter().map(Vec::len).sum::<usize>())
            .sum()
    }

    pub fn has_edge(&self, s: &IndexSet, t: &IndexSet) -> bool {
        if s.len() != t.len() || s.dim() != self.dim || t.dim() != self.dim {
            return false;
        }
        let Some(class) = self.classes.iter().find(|c| c.cardinality == s.len()) else {
            return false;
        };
        let pos = |x: &IndexSet| class.nodes.binary_search_by_key(&x.mask(), |n| n.mask());
        match (pos(s), pos(t)) {
            (Ok(i), Ok(j)) => class.successors[i].contains(&j),
            _ => false,
        }
    }

    /// The first set, in class then mask order, carrying a loop.
    pub fn first_loop(&self) -> Option<IndexSet> {
        self.classes.iter().find_map(|class| {
            (0..class.nodes.len())
                .find(|&n| class.successors[n].contains(&n))
                .map(|n| class.nodes[n])
        })
    }
}

/// Builds the zero-flow graph of a collection.
///
/// For one matrix and a set `S`, zero flow forces the successor to be the
/// set of rows supported inside `S`, so each matrix contributes at most one
/// out-edge per node.
pub fn build_zero_flow_graph(coll: &Collection, settings: &Settings) -> Result<ZeroFlowGraph> {
    let m = coll.dim();
    if m > settings.max_switching_dim {
        return Err(Error::Capacity {
            what: "zero-flow graph dimension",
            found: m,
            limit: settings.max_switching_dim,
        });
    }
    let tables: Vec<SupportTable> = coll
        .matrices()
        .iter()
        .map(|a| SupportTable::new(a, settings.tol_zero))
        .collect();
    let mut classes = Vec::new();
    for card in 1..m {
        let nodes = IndexSet::subsets_of_size(m, card);
        let successors = nodes
            .iter()
            .map(|s| {
                let mut succ: Vec<usize> = coll
                    .matrices()
                    .iter()
                    .zip(&tables)
                    .filter_map(|(a, table)| zero_step_successor(a, table, *s, settings))
                    .map(|t| {
                        nodes
                            .binary_search_by_key(&t.mask(), |n| n.mask())
                            .expect("successor has the same cardinality")
                    })
                    .collect();
                succ.sort_unstable();
                succ.dedup();
                succ
            })
            .collect();
        classes.push(CardinalityClass {
            cardinality: card,
            nodes,
            successors,
        });
    }
    Ok(ZeroFlowGraph { dim: m, classes })
}

/// Result of [`is_cycle_free`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleCheck {
    pub cycle_free: bool,
    /// `S_0 -> S_1 -> ... -> S_{r-1} -> S_0`; a single set for a loop.
    pub cycle: Option<Vec<IndexSet>>,
}

/// Directed cycle detection, loops included. Classes are searched in
/// increasing cardinality and nodes in increasing mask order.
pub fn is_cycle_free(g: &ZeroFlowGraph) -> CycleCheck {
    for class in &g.classes {
        if let Some(cycle) = find_cycle(class) {
            return CycleCheck {
                cycle_free: false,
                cycle: Some(cycle),
            };
        }
    }
    CycleCheck {
        cycle_free: true,
        cycle: None,
    }
}

fn find_cycle(class: &CardinalityClass) -> Option<Vec<IndexSet>> {
    const UNSEEN: u8 = 0;
    const ON_STACK: u8 = 1;
    const DONE: u8 = 2;
    let n = class.nodes.len();
    let mut state = vec![UNSEEN; n];
    for root in 0..n {
        if state[root] != UNSEEN {
            continue;
        }
        // Each frame holds a node and the index of its next successor.
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = ON_STACK;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&w) = class.successors[v].get(*next) {
                *next += 1;
                match state[w] {
                    UNSEEN => {
                        state[w] = ON_STACK;
                        stack.push((w, 0));
                    }
                    ON_STACK => {
                        let pos = stack.iter().position(|&(u, _)| u == w).unwrap();
                        return Some(stack[pos..].iter().map(|&(u, _)| class.nodes[u]).collect());
                    }
                    _ => {}
                }
            } else {
                state[v] = DONE;
                stack.pop();
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Yes,
    No,
    Undecided,
}

/// Outcome of [`stability_verdict`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub stable: Stability,
    /// A zero-flow cycle, or a single set for a loop.
    pub cycle: Option<Vec<IndexSet>>,
    /// A periodic chain drawn from the collection whose flow along
    /// `witness_sequence` is finite; present whenever `stable` is `no`.
    pub witness_chain: Option<Chain>,
    pub witness_sequence: Option<RegularSeq>,
}

/// Whether every chain drawn from the collection is ergodic.
///
/// Doubly stochastic collections are stable exactly when the zero-flow
/// graph is cycle-free. With the identity as a common permutation
/// component, loops are the only possible cycles and their absence is
/// cross-checked against `min_{A, S} A_S > tol_zero`. For general stochastic
/// collections a cycle proves instability and its absence proves nothing.
pub fn stability_verdict(coll: &Collection, settings: &Settings) -> Result<StabilityVerdict> {
    let g = build_zero_flow_graph(coll, settings)?;
    let (stable, cycle) = match coll.flavor() {
        CollectionFlavor::DoublyStochastic => {
            let check = is_cycle_free(&g);
            let verdict = if check.cycle_free { Stability::Yes } else { Stability::No };
            (verdict, check.cycle)
        }
        CollectionFlavor::DoublyStochasticTrivialComponent => {
            let first_loop = g.first_loop();
            let min_flow = min_set_flow(coll);
            if first_loop.is_none() != (min_flow > settings.tol_zero) {
                return Err(Error::Internal(format!(
                    "loop detection disagrees with the minimum set flow {min_flow:e}"
                )));
            }
            match first_loop {
                Some(s) => (Stability::No, Some(vec![s])),
                None => (Stability::Yes, None),
            }
        }
        CollectionFlavor::Stochastic => {
            let check = is_cycle_free(&g);
            let verdict = if check.cycle_free { Stability::Undecided } else { Stability::No };
            (verdict, check.cycle)
        }
    };
    let (witness_chain, witness_sequence) = match &cycle {
        Some(c) => {
            let (chain, seq) = witness_chain_from_cycle(coll, c, settings)?;
            (Some(chain), Some(seq))
        }
        None => (None, None),
    };
    Ok(StabilityVerdict {
        stable,
        cycle,
        witness_chain,
        witness_sequence,
    })
}

/// `min_{A, S} A_S` over the collection and all nonempty proper `S`.
fn min_set_flow(coll: &Collection) -> f64 {
    let mut best = f64::INFINITY;
    for a in coll.matrices() {
        for s in IndexSet::nontrivial_subsets(coll.dim()) {
            best = best.min(step_flow_unchecked(a, &s, &s));
        }
    }
    best
}

/// Turns a zero-flow cycle into a periodic chain from the collection and
/// the regular sequence that walks the cycle. Each step uses the matrix
/// with the smallest flow across its edge.
pub fn witness_chain_from_cycle(
    coll: &Collection,
    cycle: &[IndexSet],
    settings: &Settings,
) -> Result<(Chain, RegularSeq)> {
    if cycle.is_empty() {
        return Err(Error::Contract("empty cycle".into()));
    }
    for s in cycle {
        if s.dim() != coll.dim() {
            return Err(Error::DimensionMismatch {
                expected: coll.dim(),
                found: s.dim(),
            });
        }
    }
    let seq = RegularSeq::new(Vec::new(), cycle.to_vec())
        .map_err(|e| Error::Contract(format!("cycle is not a regular sequence: {e}")))?;
    let mut mats = Vec::with_capacity(cycle.len());
    for (r, cur) in cycle.iter().enumerate() {
        let next = &cycle[(r + 1) % cycle.len()];
        let (flow, a) = coll
            .matrices()
            .iter()
            .map(|a| (step_flow_unchecked(a, next, cur), a))
            .fold(None, |best: Option<(f64, &StochMatrix)>, cand| match best {
                Some(b) if b.0 <= cand.0 => Some(b),
                _ => Some(cand),
            })
            .expect("collections are nonempty");
        if flow > settings.tol_zero {
            return Err(Error::Contract(format!(
                "({cur}, {next}) is not a zero-flow edge: smallest flow {flow:e}"
            )));
        }
        mats.push(a.clone());
    }
    let flavor = if coll.flavor().is_doubly_stochastic() {
        Flavor::DoublyStochastic
    } else {
        Flavor::Stochastic
    };
    Ok((Chain::from_parts_unchecked(Vec::new(), mats, flavor), seq))
}
