use serde::{Deserialize, Serialize};

use crate::instance::CutResult;

/// One optimization outcome as persisted in result files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Sweep cell index; 0 for standalone runs.
    pub cell: usize,
    pub instance_seed: u64,
    /// Seed of this optimization run.
    pub seed: u64,
    /// `"lotus"` or the baseline's method id.
    pub optimizer: String,
    /// Classical optimizer that drove the run.
    pub method: String,
    pub n_qubits: usize,
    pub depth: usize,
    pub p_graph: f64,
    /// Fourier modes; 0 for baselines.
    pub k: usize,
    /// Shots per evaluation during optimization; 0 = exact.
    pub shots: u32,
    /// Final verification estimate.
    pub expectation: f64,
    pub expectation_stderr: f64,
    pub expectation_exact: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub best_cut: CutResult,
    pub approx_ratio: Option<f64>,
    /// Seconds.
    pub wall_time: f64,
}

impl RunRecord {
    /// Comparison arm: `lotus-k<K>` for LOTUS runs, the optimizer id otherwise.
    pub fn arm(&self) -> String {
        if self.optimizer == "lotus" {
            format!("lotus-k{}", self.k)
        } else {
            self.optimizer.clone()
        }
    }

    pub fn is_lotus(&self) -> bool {
        self.optimizer == "lotus"
    }

    /// Records sharing a key were run on the same instance at the same depth.
    pub fn group_key(&self) -> GroupKey {
        GroupKey { n_qubits: self.n_qubits, depth: self.depth, p_graph_bits: self.p_graph.to_bits(), instance_seed: self.instance_seed }
    }

    /// Copy with the timing field cleared, for payload comparisons.
    pub fn without_timing(&self) -> Self {
        Self { wall_time: 0.0, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub n_qubits: usize,
    pub depth: usize,
    pub p_graph_bits: u64,
    pub instance_seed: u64,
}
