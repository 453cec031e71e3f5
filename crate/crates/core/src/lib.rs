//! Choosing which nodes or edges of a Markov chain to observe after one
//! transition step so that the expected remaining variance of the item
//! counts is as small as possible.
//!
//! [`chain`] holds the matrix types and the closed-form objectives,
//! [`selection`] the optimisers, [`baselines`] the comparison rankers, and
//! [`simulate`] sampling and enumeration oracles for the closed forms.

pub mod baselines;
pub mod chain;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod ingest;
pub mod selection;
pub mod simulate;

pub use chain::{
    baseline_uncertainty, expected_items, residual_probability, uncertainty_children,
    uncertainty_edge, uncertainty_node, Edge, EdgeSelection, ItemDistribution, NodeObjective,
    NodeSelection, TransitionMatrix, UncertaintyReport,
};
pub use error::{Error, Result};
