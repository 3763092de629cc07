//! QAOA training loops: LOTUS over HFA parameters and the layer-wise baseline.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engine::{evolve_with, QaoaCircuit};
use crate::error::{Error, Result};
use crate::harness::RunRecord;
use crate::instance::{Instance, BRUTE_FORCE_CAP};
use crate::schedule::{hfa_generate, standard_dimension, HfaParams, Schedule};
use crate::seed::{derive_seed, rng, stream};

use super::{Bound, Objective, OptimizerOutcome, Registry, DEFAULT_BUDGET, EXACT_TOL, SAMPLED_TOL};

/// λ is kept inside this interval during optimization.
pub const LAMBDA_CLAMP: f64 = 0.999;

/// Random initialization of the LOTUS restarts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LotusInitConfig {
    pub n_restarts: usize,
    /// Std-dev of the Fourier coefficients `a`, `b`.
    pub sigma_spectral: f64,
    /// λ_γ and λ_β are drawn uniformly from this interval.
    pub lambda_range: (f64, f64),
    /// Std-dev of the initial residuals δ_γ0, δ_β0.
    pub sigma_residual: f64,
    /// Weights start at `1 + N(0, weight_sigma²)`.
    pub weight_sigma: f64,
}

impl Default for LotusInitConfig {
    fn default() -> Self {
        Self { n_restarts: 5, sigma_spectral: 0.5, lambda_range: (0.5, 0.95), sigma_residual: 0.1, weight_sigma: 0.1 }
    }
}

impl LotusInitConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.lambda_range;
        if self.n_restarts == 0 {
            return Err(Error::Config("n_restarts must be at least 1".into()));
        }
        if !(lo > -1.0 && hi < 1.0 && lo <= hi) {
            return Err(Error::Config(format!("lambda_range ({lo}, {hi}) must lie inside (-1, 1)")));
        }
        if !(self.sigma_spectral >= 0.0 && self.sigma_residual >= 0.0 && self.weight_sigma >= 0.0) {
            return Err(Error::Config("standard deviations must be non-negative".into()));
        }
        Ok(())
    }

    /// Draws one starting point.
    pub fn sample(&self, k: usize, seed: u64) -> Result<HfaParams> {
        self.validate()?;
        let mut rng = rng(seed);
        let normal = |sigma: f64| Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()));
        let spectral = normal(self.sigma_spectral)?;
        let residual = normal(self.sigma_residual)?;
        let weight = normal(self.weight_sigma)?;
        let (lo, hi) = self.lambda_range;
        let lambda = |rng: &mut crate::seed::Rng| if hi > lo { rng.random_range(lo..=hi) } else { lo };
        Ok(HfaParams {
            a: (0..k).map(|_| spectral.sample(&mut rng)).collect(),
            b: (0..k).map(|_| spectral.sample(&mut rng)).collect(),
            lambda_gamma: lambda(&mut rng),
            lambda_beta: lambda(&mut rng),
            delta_gamma0: residual.sample(&mut rng),
            delta_beta0: residual.sample(&mut rng),
            weights: (0..k).map(|_| 1.0 + weight.sample(&mut rng)).collect(),
        })
    }
}

/// Estimation and optimizer settings shared by both loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    /// Classical optimizer id.
    pub method: String,
    /// Shots per objective evaluation; 0 uses exact expectations.
    pub shots: u32,
    /// Shots for the final verification and best-bitstring readout.
    pub verify_shots: u32,
    /// Objective evaluations per optimizer run (per restart for LOTUS).
    pub budget: usize,
    /// Absolute f-tolerance; defaults by estimation mode when absent.
    pub tol: Option<f64>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self { method: "nelder-mead".into(), shots: 1024, verify_shots: 8192, budget: DEFAULT_BUDGET, tol: None }
    }
}

impl RunSettings {
    pub fn exact(method: &str) -> Self {
        Self { method: method.into(), shots: 0, ..Self::default() }
    }

    pub fn tolerance(&self) -> f64 {
        self.tol.unwrap_or(if self.shots == 0 { EXACT_TOL } else { SAMPLED_TOL })
    }
}

/// Objective `−E(schedule(θ))`. Evaluation `e` of the run samples with seed
/// `derive_seed(run_seed, EVAL + e)`.
fn negative_expectation<'c>(
    circuit: &'c QaoaCircuit,
    shots: u32,
    run_seed: u64,
    to_schedule: impl Fn(&[f64]) -> Result<Schedule> + 'c,
) -> impl FnMut(&[f64]) -> f64 + 'c {
    let mut calls = 0u64;
    move |theta: &[f64]| {
        let seed = derive_seed(run_seed, stream::EVAL + calls);
        calls += 1;
        match to_schedule(theta).and_then(|s| circuit.expectation(&s, shots, seed)) {
            Ok(e) => -e,
            Err(_) => f64::NAN,
        }
    }
}

/// Result of [`lotus_optimize`].
#[derive(Clone, Debug)]
pub struct LotusRun {
    pub params: HfaParams,
    pub schedule: Schedule,
    /// The winning restart's point and trace, with iterations and
    /// evaluations summed over all restarts.
    pub outcome: OptimizerOutcome,
    pub restarts: Vec<OptimizerOutcome>,
    pub record: RunRecord,
}

/// Result of [`baseline_optimize`].
#[derive(Clone, Debug)]
pub struct BaselineRun {
    pub schedule: Schedule,
    pub outcome: OptimizerOutcome,
    pub record: RunRecord,
}

fn lotus_bounds(k: usize) -> Vec<Bound> {
    let mut b = vec![(f64::NEG_INFINITY, f64::INFINITY); HfaParams::dimension(k)];
    for i in HfaParams::lambda_indices(k) {
        b[i] = (-LAMBDA_CLAMP, LAMBDA_CLAMP);
    }
    b
}

/// Multi-start LOTUS training at depth `p` with `k` Fourier modes.
///
/// Restart `r` starts from `init.sample(k, derive_seed(seed, RESTART + r))` and
/// minimizes `−E` over the `3k + 4` HFA parameters. The restart with the lowest
/// final objective wins; the verification estimate and best-cut readout use
/// `settings.verify_shots`.
pub fn lotus_optimize(
    instance: &Instance,
    p: usize,
    k: usize,
    init: &LotusInitConfig,
    settings: &RunSettings,
    seed: u64,
    registry: &Registry,
) -> Result<LotusRun> {
    let started = Instant::now();
    init.validate()?;
    if p == 0 || k == 0 {
        return Err(Error::InvalidParameter("depth and mode count must be at least 1".into()));
    }
    let circuit = QaoaCircuit::new(&instance.graph)?;

    let mut restarts = Vec::with_capacity(init.n_restarts);
    for r in 0..init.n_restarts {
        let restart_seed = derive_seed(seed, stream::RESTART + r as u64);
        let start = init.sample(k, derive_seed(restart_seed, stream::INIT))?;
        restarts.push(lotus_descent(&circuit, p, &start, settings, restart_seed, registry)?.0);
    }

    let best = restarts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.f_best.total_cmp(&b.1.f_best).then(a.0.cmp(&b.0)))
        .map(|(_, o)| o.clone())
        .expect("at least one restart");
    let outcome = OptimizerOutcome {
        iterations: restarts.iter().map(|o| o.iterations).sum(),
        evaluations: restarts.iter().map(|o| o.evaluations).sum(),
        ..best
    };
    debug_assert_eq!(circuit.executions(), outcome.evaluations);

    let params = HfaParams::from_flat(&outcome.x_best, k)?;
    let schedule = hfa_generate(&params, p)?;
    let mut record = verify(instance, &circuit, &schedule, settings, seed, &outcome)?;
    record.optimizer = "lotus".into();
    record.k = k;
    record.wall_time = started.elapsed().as_secs_f64();
    Ok(LotusRun { params, schedule, outcome, restarts, record })
}

/// One LOTUS descent from `start` at depth `p`, without restarts or
/// verification. Also returns the best-so-far value after every evaluation.
pub fn lotus_descent(
    circuit: &QaoaCircuit,
    p: usize,
    start: &HfaParams,
    settings: &RunSettings,
    seed: u64,
    registry: &Registry,
) -> Result<(OptimizerOutcome, Vec<f64>)> {
    let k = start.modes();
    let f = negative_expectation(circuit, settings.shots, seed, move |theta| hfa_generate(&HfaParams::from_flat(theta, k)?, p));
    let mut obj = Objective::new(HfaParams::dimension(k), f).with_bounds(lotus_bounds(k))?;
    assert_eq!(obj.dimension(), 3 * k + 4);
    let outcome = registry.minimize(&settings.method, &mut obj, &start.to_flat(), settings.budget, settings.tolerance())?;
    Ok((outcome, obj.eval_trace().to_vec()))
}

/// Layer-wise baseline: all `2p` angles optimized directly from a uniform
/// draw in `[0, 2π]^{2p}`.
pub fn baseline_optimize(instance: &Instance, p: usize, settings: &RunSettings, seed: u64, registry: &Registry) -> Result<BaselineRun> {
    let started = Instant::now();
    if p == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    let circuit = QaoaCircuit::new(&instance.graph)?;
    let dim = standard_dimension(p);
    let mut init = rng(derive_seed(seed, stream::INIT));
    let x0: Vec<f64> = (0..dim).map(|_| init.random_range(0.0..=std::f64::consts::TAU)).collect();

    let f = negative_expectation(&circuit, settings.shots, seed, Schedule::unpack);
    let mut obj = Objective::new(dim, f);
    assert_eq!(obj.dimension(), 2 * p);
    let outcome = registry.minimize(&settings.method, &mut obj, &x0, settings.budget, settings.tolerance())?;
    debug_assert_eq!(circuit.executions(), outcome.evaluations);

    let schedule = Schedule::unpack(&outcome.x_best)?;
    let mut record = verify(instance, &circuit, &schedule, settings, seed, &outcome)?;
    record.optimizer = settings.method.clone();
    record.k = 0;
    record.wall_time = started.elapsed().as_secs_f64();
    Ok(BaselineRun { schedule, outcome, record })
}

/// Final readout outside the optimizer's evaluation count.
fn verify(
    instance: &Instance,
    circuit: &QaoaCircuit,
    schedule: &Schedule,
    settings: &RunSettings,
    seed: u64,
    outcome: &OptimizerOutcome,
) -> Result<RunRecord> {
    let d = circuit.diagonal();
    let state = evolve_with(d, schedule)?;
    let exact = state.expectation_exact(d)?;
    let estimate = state.expectation_sampled(d, settings.verify_shots.max(1), derive_seed(seed, stream::VERIFY))?;
    let best_cut = state.sample_best_bitstring(&instance.graph, settings.verify_shots.max(1), derive_seed(seed, stream::READOUT))?;
    let optimum = d.max_value();
    let approx_ratio = (instance.graph.n() <= BRUTE_FORCE_CAP && optimum > 0.0).then(|| exact / optimum);
    Ok(RunRecord {
        cell: 0,
        instance_seed: instance.seed,
        seed,
        optimizer: String::new(),
        method: settings.method.clone(),
        n_qubits: instance.graph.n(),
        depth: schedule.depth(),
        p_graph: instance.p_graph,
        k: 0,
        shots: settings.shots,
        expectation: estimate.value,
        expectation_stderr: estimate.stderr,
        expectation_exact: exact,
        iterations: outcome.iterations,
        evaluations: outcome.evaluations,
        converged: outcome.converged,
        best_cut,
        approx_ratio,
        wall_time: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::WeightedGraph;

    fn edge() -> Instance {
        Instance { graph: WeightedGraph::new(2, [(0, 1, 1.0)]).unwrap(), seed: 0, p_graph: 1.0 }
    }

    #[test]
    fn init_sampling() {
        let cfg = LotusInitConfig::default();
        let a = cfg.sample(3, 5).unwrap();
        assert_eq!(a, cfg.sample(3, 5).unwrap());
        assert_ne!(a, cfg.sample(3, 6).unwrap());
        assert_eq!(a.to_flat().len(), 13);
        assert!((0.5..=0.95).contains(&a.lambda_gamma) && (0.5..=0.95).contains(&a.lambda_beta));

        let bad = LotusInitConfig { lambda_range: (0.5, 1.0), ..cfg.clone() };
        assert!(bad.sample(2, 0).is_err());
        let bad = LotusInitConfig { n_restarts: 0, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lotus_single_edge_reaches_optimum() {
        let reg = Registry::default();
        let init = LotusInitConfig::default();
        for method in ["nelder-mead", "powell", "fd-lbfgs"] {
            let run = lotus_optimize(&edge(), 1, 1, &init, &RunSettings::exact(method), 3, &reg).unwrap();
            assert!(run.record.expectation_exact >= 0.95, "{method}: {}", run.record.expectation_exact);
            assert_eq!(run.outcome.evaluations, run.restarts.iter().map(|o| o.evaluations).sum::<usize>());
            assert!(run.outcome.trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn lotus_sampled_mode() {
        let reg = Registry::default();
        let init = LotusInitConfig { n_restarts: 2, ..Default::default() };
        let settings = RunSettings { budget: 200, ..RunSettings::default() };
        let run = lotus_optimize(&edge(), 1, 1, &init, &settings, 8, &reg).unwrap();
        assert!(run.record.expectation >= 0.9);
        assert!(run.outcome.evaluations <= 400);
        assert_eq!(run.record.shots, 1024);
    }

    #[test]
    fn baseline_single_edge() {
        let reg = Registry::default();
        for method in ["nelder-mead", "powell"] {
            let settings = RunSettings { budget: 500, ..RunSettings::exact(method) };
            let run = baseline_optimize(&edge(), 1, &settings, 21, &reg).unwrap();
            assert!(run.record.expectation_exact >= 0.95, "{method}");
            assert!(run.outcome.evaluations <= 500);
            assert_eq!(run.outcome.x_best.len(), 2);
        }
    }

    #[test]
    fn baseline_dimension() {
        let inst = Instance::generate(4, 1.0, 2).unwrap();
        let settings = RunSettings { budget: 60, ..RunSettings::exact("nelder-mead") };
        let run = baseline_optimize(&inst, 24, &settings, 1, &Registry::default()).unwrap();
        assert_eq!(run.outcome.x_best.len(), 48);
        assert_eq!(run.record.depth, 24);
    }

    #[test]
    fn runs_are_reproducible() {
        let reg = Registry::default();
        let inst = Instance::generate(5, 0.8, 4).unwrap();
        let init = LotusInitConfig { n_restarts: 2, ..Default::default() };
        let settings = RunSettings { budget: 150, ..RunSettings::default() };
        let strip = |mut r: RunRecord| {
            r.wall_time = 0.0;
            r
        };
        let a = lotus_optimize(&inst, 3, 2, &init, &settings, 77, &reg).unwrap();
        let b = lotus_optimize(&inst, 3, 2, &init, &settings, 77, &reg).unwrap();
        assert_eq!(strip(a.record), strip(b.record));
        assert_eq!(a.params, b.params);
        let a = baseline_optimize(&inst, 3, &settings, 77, &reg).unwrap();
        let b = baseline_optimize(&inst, 3, &settings, 77, &reg).unwrap();
        assert_eq!(strip(a.record), strip(b.record));
    }

    #[test]
    fn exact_mode_trace_is_monotone() {
        let reg = Registry::default();
        let inst = Instance::generate(5, 0.8, 9).unwrap();
        let init = LotusInitConfig { n_restarts: 1, ..Default::default() };
        let run = lotus_optimize(&inst, 4, 2, &init, &RunSettings::exact("nelder-mead"), 2, &reg).unwrap();
        assert!(run.outcome.trace.windows(2).all(|w| w[1] <= w[0]));
        // f_best is the objective at x_best, i.e. minus the exact expectation
        assert!((run.outcome.f_best + run.record.expectation_exact).abs() < 1e-12);
    }
}
