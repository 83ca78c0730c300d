//! Sparse deep neural network inference benchmark.
//!
//! * [`radixnet`] builds synthetic RadiX-Net topologies and weights them.
//! * [`ingest`] turns MNIST images into sparse binary inputs and handles
//!   the TSV, binary and truth file formats.
//! * [`engine`] runs the sparse inference kernel serially, data-parallel or
//!   as a layer pipeline, with identical results in every mode.
//! * [`challenge`] categorizes outputs, checks them against truth, holds
//!   the dense reference evaluator and computes rates and reports.
//! * [`cli`] ties these together as the `sdnn` command.

pub mod challenge;
pub mod cli;
pub mod engine;
pub mod error;
pub mod ingest;
pub mod model;
pub mod radixnet;

pub use error::{Error, Result};
pub use model::{CategorySet, FeatureBatch, LayerWeights, NetworkModel, SparseMatrix, Triple};
