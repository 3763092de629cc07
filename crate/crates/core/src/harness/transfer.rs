//! Depth transfer: evaluating an optimized HFA point on other layer grids and
//! using it to warm-start deeper circuits.

use serde::{Deserialize, Serialize};

use crate::engine::QaoaCircuit;
use crate::error::{Error, Result};
use crate::instance::{Instance, WeightedGraph};
use crate::optim::{lotus_descent, LotusInitConfig, Registry, RunSettings};
use crate::schedule::{resample, HfaParams, ResampleMode};
use crate::seed::{derive_seed, stream};

/// Exact expectation of `resample(params, p)` at every depth.
pub fn depth_values(g: &WeightedGraph, params: &HfaParams, depths: &[usize], mode: ResampleMode) -> Result<Vec<f64>> {
    let circuit = QaoaCircuit::new(g)?;
    depths.iter().map(|&p| circuit.expectation(&resample(params, p, mode)?, 0, 0)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthGap {
    pub p: usize,
    pub p_next: usize,
    pub value: f64,
    pub value_next: f64,
    /// `|C(p) − C(p_next)|`.
    pub gap: f64,
}

/// Gaps between consecutive entries of `depths`.
pub fn depth_gaps(g: &WeightedGraph, params: &HfaParams, depths: &[usize]) -> Result<Vec<DepthGap>> {
    let values = depth_values(g, params, depths, ResampleMode::KeepLambda)?;
    Ok(depths
        .windows(2)
        .zip(values.windows(2))
        .map(|(p, v)| DepthGap { p: p[0], p_next: p[1], value: v[0], value_next: v[1], gap: (v[0] - v[1]).abs() })
        .collect())
}

/// Warm versus cold start at one depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HotStart {
    pub depth: usize,
    /// Expectation the cold start finished with.
    pub target: f64,
    pub cold_value: f64,
    pub warm_value: f64,
    /// Evaluations until the cold start first came within tolerance of its
    /// final value.
    pub cold_evaluations: usize,
    /// Evaluations until the warm start reached the same value; all of its
    /// evaluations when it never did.
    pub warm_evaluations: usize,
    pub warm_reached: bool,
    /// Expectation of the resampled point before any optimization.
    pub warm_initial: f64,
}

impl HotStart {
    pub fn warm_wins(&self) -> bool {
        self.warm_reached && self.warm_evaluations <= self.cold_evaluations
    }
}

#[derive(Clone, Debug)]
pub struct TransferOptions {
    /// Also run warm- and cold-started optimizations at every depth other than
    /// the source.
    pub hot_start: bool,
    pub settings: RunSettings,
    pub init: LotusInitConfig,
    pub seed: u64,
}

impl Default for TransferOptions {
    fn default() -> Self {
        Self { hot_start: true, settings: RunSettings::exact("nelder-mead"), init: LotusInitConfig::default(), seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub source_depth: usize,
    pub source_value: f64,
    pub depths: Vec<usize>,
    pub values: Vec<f64>,
    pub gaps: Vec<DepthGap>,
    pub hot_start: Vec<HotStart>,
}

fn first_reaching(trace: &[f64], target: f64) -> Option<usize> {
    trace.iter().position(|&f| f <= target).map(|i| i + 1)
}

/// Evaluates `params` (optimized at `p_source`) at each of `depths` and, when
/// requested, compares warm starts from `params` with cold LOTUS starts.
pub fn depth_transfer_experiment(
    instance: &Instance,
    params: &HfaParams,
    p_source: usize,
    depths: &[usize],
    opts: &TransferOptions,
    registry: &Registry,
) -> Result<TransferReport> {
    if depths.is_empty() || depths.contains(&0) || p_source == 0 {
        return Err(Error::InvalidParameter("depths must be non-empty and positive".into()));
    }
    let g = &instance.graph;
    let values = depth_values(g, params, depths, ResampleMode::KeepLambda)?;
    let source_value = depth_values(g, params, &[p_source], ResampleMode::KeepLambda)?[0];
    let gaps = depth_gaps(g, params, depths)?;

    let mut hot_start = Vec::new();
    if opts.hot_start {
        let circuit = QaoaCircuit::new(g)?;
        let tol = opts.settings.tolerance();
        for (&p, &warm_initial) in depths.iter().zip(&values) {
            if p == p_source {
                continue;
            }
            let seed = derive_seed(opts.seed, p as u64);
            let start = opts.init.sample(params.modes(), derive_seed(seed, stream::INIT))?;
            let (cold, cold_trace) = lotus_descent(&circuit, p, &start, &opts.settings, seed, registry)?;
            let (warm, warm_trace) = lotus_descent(&circuit, p, params, &opts.settings, seed, registry)?;
            let target = cold.f_best + tol;
            let cold_evaluations = first_reaching(&cold_trace, target).unwrap_or(cold.evaluations);
            let warm_hit = first_reaching(&warm_trace, target);
            hot_start.push(HotStart {
                depth: p,
                target: -cold.f_best,
                cold_value: -cold.f_best,
                warm_value: -warm.f_best,
                cold_evaluations,
                warm_evaluations: warm_hit.unwrap_or(warm.evaluations),
                warm_reached: warm_hit.is_some(),
                warm_initial,
            });
        }
    }
    Ok(TransferReport { source_depth: p_source, source_value, depths: depths.to_vec(), values, gaps, hot_start })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fourier(k: usize) -> HfaParams {
        HfaParams { a: vec![0.6; k], b: vec![0.3; k], ..HfaParams::zeros(k) }
    }

    #[test]
    fn same_depth_has_zero_gap() {
        let inst = Instance::generate(5, 0.8, 1).unwrap();
        let gaps = depth_gaps(&inst.graph, &fourier(2), &[8, 8]).unwrap();
        assert_eq!(gaps[0].gap, 0.0);
    }

    #[test]
    fn gaps_match_direct_evaluation() {
        let inst = Instance::generate(6, 0.8, 3).unwrap();
        let params = fourier(2);
        let gaps = depth_gaps(&inst.graph, &params, &[8, 16, 32]).unwrap();
        let circuit = QaoaCircuit::new(&inst.graph).unwrap();
        let c = |p| circuit.expectation(&crate::schedule::hfa_generate(&params, p).unwrap(), 0, 0).unwrap();
        assert_eq!(gaps[0].gap, (c(8) - c(16)).abs());
        assert_eq!(gaps[1].gap, (c(16) - c(32)).abs());
        assert_eq!((gaps[1].p, gaps[1].p_next), (16, 32));
    }

    #[test]
    fn experiment_report_shape() {
        let inst = Instance::generate(4, 1.0, 2).unwrap();
        let opts = TransferOptions {
            settings: RunSettings { budget: 150, ..RunSettings::exact("nelder-mead") },
            init: LotusInitConfig { n_restarts: 1, ..Default::default() },
            ..Default::default()
        };
        let rep = depth_transfer_experiment(&inst, &fourier(1), 4, &[4, 8], &opts, &Registry::default()).unwrap();
        assert_eq!(rep.values.len(), 2);
        assert_eq!(rep.source_value, rep.values[0]);
        assert_eq!(rep.gaps.len(), 1);
        assert_eq!(rep.hot_start.len(), 1);
        let h = &rep.hot_start[0];
        assert!(h.cold_evaluations >= 1 && h.cold_evaluations <= 150);
        assert!(h.warm_evaluations <= 150);
        assert!(depth_transfer_experiment(&inst, &fourier(1), 4, &[], &opts, &Registry::default()).is_err());
    }
}
