//! Graphon estimation with the iterative step-function estimator (ISFE).
//!
//! The crate covers the whole pipeline on dense simple graphs: exact
//! W-random graph sampling with retained latents, quotient and step-function
//! constructions, the ISFE partition refinement, evaluation metrics including
//! exact cut metrics at small scale, and a Monte-Carlo harness for the
//! correct-classification guarantee of the random-centroid ISFE variant on
//! two-block stochastic block models.

// Parameter checks are written as `!(x > 0.0)` on purpose so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod generators;
pub mod graph;
pub mod graphon;
pub mod isfe;
pub mod metrics;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{Graph, Partition, WeightedGraph};
pub use graphon::{AnalyticGraphon, Graphon, GraphonSample, StepGraphon};
