//! Ergodicity analysis for backward products of stochastic matrix chains.
//!
//! A chain `A(0), A(1), ...` of row-stochastic matrices is given by a finite
//! prefix followed by a repeating cycle. On top of that presentation the
//! crate decides the infinite flow and absolute infinite flow properties
//! exactly, extracts Birkhoff and permutation structure, certifies
//! ergodicity and convergence rates for doubly stochastic chains, predicts
//! limiting row clusters, and checks absolute asymptotic stability of finite
//! matrix collections through their zero-flow graph.
//!
//! Index sets, permutations and matrices are all 0-based.

pub mod birkhoff;
pub mod chain;
pub mod cli;
mod error;
pub mod ergodicity;
pub mod flow;
pub mod io;
mod matching;
pub mod matrix;
pub mod random;
pub mod set;
mod settings;
pub mod switching;

pub use birkhoff::{
    birkhoff_decompose, decompose_chain, max_mixing_permutation, rotate_chain,
    rotated_product_identity_check, BirkhoffDecomp, BirkhoffTerm, PermComponent,
};
pub use chain::{Chain, Flavor, PermChain, Periodic};
pub use error::{Error, Result};
pub use ergodicity::{
    accumulation_times, ergodicity_verdict, infinite_flow_graph, limit_up_to_permutation,
    lyapunov, lyapunov_decrease_identity_check, rate_certificate, simulate, ErgodicityVerdict,
    InfiniteFlowGraph, RateCertificate, Status,
};
pub use flow::{
    has_absolute_infinite_flow, has_infinite_flow, set_flow, step_flow, total_flow, trajectory,
    FlowReport, RegularSeq,
};
pub use matrix::{DoublyStochMatrix, Permutation, StochMatrix};
pub use set::IndexSet;
pub use settings::Settings;
pub use switching::{
    build_zero_flow_graph, is_cycle_free, stability_verdict, witness_chain_from_cycle, Collection,
    CollectionFlavor, Stability, StabilityVerdict, ZeroFlowGraph,
};
