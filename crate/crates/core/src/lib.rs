//! Opinion aggregation on directed networks.
//!
//! A network is a digraph whose vertices each aggregate the values of their
//! in-neighbors with a mean of their choice. Iterating the resulting
//! mean-type mapping drives the network toward a shared value exactly when
//! the root of the incidence graph (the influencer layer) is ergodic; this
//! crate computes roots, decides ergodicity, iterates mappings to their
//! invariant mean, constructs non-uniqueness witnesses for non-ergodic
//! roots, and solves the weighted-arithmetic case exactly through
//! row-stochastic matrices.

pub mod dynamics;
pub mod error;
pub mod graph;
pub mod mapping;
pub mod means;
pub mod stochastic;

pub use dynamics::{
    estimate_invariant_mean, iterate, nonuniqueness_witness, verify_invariance, IterationTrace,
    Verdict, WitnessReport, DEFAULT_MAX_ITER, DEFAULT_TAIL_WINDOW, DEFAULT_TOL,
};
pub use error::{Error, Result};
pub use graph::{Condensation, DiGraph, RootReport, DEFAULT_ORACLE_CAP};
pub use mapping::{AveragingSystem, Interval, RootSubsystem};
pub use means::{MeanFlags, MeanSpec};
pub use stochastic::{
    parse_rational, stationary_distribution, to_matrix, RationalMatrix, RowStochasticMatrix,
};
