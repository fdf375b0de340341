//! Fairness and diversity evaluation for generative image reconstruction.
//!
//! The crate scores a reconstruction model on a labeled test set: per-sample
//! attribute losses aggregated by class, the RDP, PR and UCPR fairness
//! distributions with their discrepancies from uniform, and the significance
//! tests used to compare two models or two training datasets. It also holds
//! the dataset-side tooling (biased subsampling, uninformative conditions,
//! a confusion-matrix simulator) and report rendering.

pub mod attribute;
pub mod dataset;
pub mod error;
pub mod fairness;
pub mod image;
pub mod model;
pub mod report;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
pub use fairness::{FairnessKind, FairnessScores, RdpVariant};
pub use model::{ClassPartition, DiscreteDistribution, DiversitySet, EvalRecord, EvalSet};
