//! Hybrid Fourier-autoregressive (HFA) schedules for QAOA on weighted MaxCut.
//!
//! The crate is split along the pipeline a benchmark run walks through:
//!
//! - [`instance`]: weighted Erdős–Rényi instances and an exhaustive MaxCut oracle.
//! - [`engine`]: a statevector simulator specialised to diagonal costs and the
//!   transverse-field mixer.
//! - [`schedule`]: the HFA generator, the standard layer-wise packing, depth
//!   resampling and the layer-gap certificate.
//! - [`optim`]: derivative-free and finite-difference minimizers plus the
//!   LOTUS multi-start loop and the layer-wise baseline loop.
//! - [`harness`]: sweeps, the composite Score, significance tests, persistence
//!   and the invariant suite.
//!
//! Qubit convention: node `i` of a graph is bit `i` of a basis-state index.

pub mod engine;
pub mod error;
pub mod harness;
pub mod instance;
pub mod optim;
pub mod oracle;
pub mod schedule;
pub mod seed;

pub use engine::{CostDiagonal, QaoaCircuit, StateVector};
pub use error::{Error, Result};
pub use harness::{RunRecord, ScoreRecord, SweepConfig};
pub use instance::{CutResult, Edge, Instance, WeightedGraph};
pub use optim::{LotusInitConfig, Objective, OptimizerOutcome};
pub use schedule::{HfaParams, LipschitzReport, Schedule};
