//! Hybrid quantum-classical GANs for small-molecule graph generation.
//!
//! * [`qsim`]: statevector simulator, patched rotation ansatz and
//!   parameter-shift Jacobians.
//! * [`molgraph`]: atom-vector / bond-matrix molecules, their continuous
//!   relaxation, validity, canonical keys and fingerprints.
//! * [`dataset`]: MOL/SDF V2000 reading and training batches.
//! * [`nn`]: dense networks with explicit forward/backward passes and Adam.
//! * [`gan`]: generator/critic models, losses, gradient penalty, training.
//! * [`metrics`]: Fréchet and Wasserstein-1 distances plus molecule scores.

pub mod dataset;
pub mod gan;
pub mod metrics;
pub mod molgraph;
pub mod nn;
pub mod qsim;
pub mod rng;

pub use dataset::{DatasetSplit, SdfRecord};
pub use gan::{ArchitectureConfig, CriticModel, GeneratorModel, TrainingLog};
pub use metrics::{BatchStatistics, MetricsReport};
pub use molgraph::{DenseGraph, MolecularGraph};
pub use qsim::{CircuitParams, CircuitSpec, FeatureVector, StateVector};
