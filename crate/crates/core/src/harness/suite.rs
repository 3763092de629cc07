//! One-shot runner over the library's invariants at full scale.

use std::fmt;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{evolve_with, CostDiagonal, QaoaCircuit, StateVector, NORM_TOLERANCE};
use crate::error::Result;
use crate::instance::{brute_force_maxcut, gen_erdos_renyi, Instance, WeightedGraph};
use crate::optim::{finite_difference_gradient, lotus_descent, LotusInitConfig, Objective, Registry, RunSettings};
use crate::oracle;
use crate::schedule::{certify_schedule, hfa_generate, max_layer_gap, resample, HfaParams, ResampleMode, Schedule};
use crate::seed::{derive_seed, rng};

use super::record::RunRecord;
use super::score::{improvement_summary, score_group, score_records};
use super::stats::{significance_matrix, wilcoxon_signed_rank};

#[derive(Clone, Debug, Default)]
pub struct SuiteOptions {
    /// Corrupt one schedule layer before the certificate check, which must
    /// then fail.
    pub inject_lipschitz_violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {:<28} {:>7.2}s  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.seconds, c.detail)?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

type Outcome = Result<(bool, String)>;

fn run_check(name: &str, check: impl FnOnce() -> Outcome) -> CheckResult {
    let started = Instant::now();
    let (passed, detail) = match check() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckResult { name: name.into(), passed, detail, seconds: started.elapsed().as_secs_f64() }
}

/// Runs every check and collects the results; a failing check never stops
/// the others.
pub fn invariant_suite(opts: &SuiteOptions) -> SuiteReport {
    let inject = opts.inject_lipschitz_violation;
    let checks = vec![
        run_check("oracle-equivalence", oracle_equivalence),
        run_check("analytic-anchor", analytic_anchor),
        run_check("norm-and-beta-periodicity", norm_and_periodicity),
        run_check("sampled-estimator", sampled_estimator),
        run_check("cut-symmetry-and-dominance", cut_properties),
        run_check("lipschitz-certificate", move || lipschitz(inject)),
        run_check("layer-gap-decay", layer_gap_decay),
        run_check("symmetry-breaking", symmetry_breaking),
        run_check("generator-round-trips", generator_round_trips),
        run_check("evaluation-accounting", evaluation_accounting),
        run_check("gradient-stencil", gradient_stencil),
        run_check("score-properties", score_properties),
        run_check("improvement-self-zero", improvement_self_zero),
        run_check("significance", significance),
        run_check("persistence", persistence),
    ];
    SuiteReport { checks }
}

fn random_schedule(r: &mut crate::seed::Rng, p: usize) -> Result<Schedule> {
    let g: Vec<f64> = (0..p).map(|_| r.random_range(-4.0..4.0)).collect();
    let b: Vec<f64> = (0..p).map(|_| r.random_range(-4.0..4.0)).collect();
    Schedule::from_raw(g, b)
}

fn oracle_equivalence() -> Outcome {
    let mut r = rng(0x0a);
    let mut worst_fid: f64 = 1.0;
    let mut worst_e: f64 = 0.0;
    for i in 0..50 {
        let n = r.random_range(2..=3);
        let g = gen_erdos_renyi(n, r.random_range(0.6..=1.0), derive_seed(0x0a, i))?;
        let p = r.random_range(1..=2);
        let sched = random_schedule(&mut r, p)?;
        let d = CostDiagonal::build(&g)?;
        let fast = evolve_with(&d, &sched)?;
        let dense = oracle::evolve_dense(&g, sched.raw_gammas(), sched.betas());
        let dense_state = StateVector::from_amplitudes(dense.clone())?;
        worst_fid = worst_fid.min(fast.fidelity(&dense_state)?);
        let e_dense = oracle::expectation_dense(&oracle::cost_hamiltonian(&g), &dense);
        worst_e = worst_e.max((fast.expectation_exact(&d)? - e_dense).abs());
    }
    Ok((worst_fid > 1.0 - 1e-10 && worst_e < 1e-10, format!("min fidelity {worst_fid:.15}, max |dE| {worst_e:.2e}")))
}

fn analytic_anchor() -> Outcome {
    let edge = WeightedGraph::new(2, [(0, 1, 1.0)])?;
    let sched = Schedule::from_raw(vec![std::f64::consts::FRAC_PI_2], vec![std::f64::consts::FRAC_PI_8])?;
    let anchor = QaoaCircuit::new(&edge)?.expectation(&sched, 0, 0)?;
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let g = gen_erdos_renyi(2 + (i % 9) as usize, 0.7, derive_seed(0x0b, i))?;
        let d = CostDiagonal::build(&g)?;
        let e = StateVector::plus(g.n())?.expectation_exact(&d)?;
        worst = worst.max((e - g.total_weight() / 2.0).abs());
    }
    let ok = (anchor - 1.0).abs() < 1e-9 && worst < 1e-12;
    Ok((ok, format!("single edge {anchor:.12}, uniform-state max error {worst:.1e}")))
}

fn norm_and_periodicity() -> Outcome {
    let mut r = rng(0x0c);
    let mut worst_norm: f64 = 0.0;
    let mut worst_period: f64 = 0.0;
    for i in 0..50 {
        let g = gen_erdos_renyi(r.random_range(2..=8), 0.6, derive_seed(0x0c, i))?;
        let d = CostDiagonal::build(&g)?;
        let p = r.random_range(1..=6);
        let sched = random_schedule(&mut r, p)?;
        let state = evolve_with(&d, &sched)?;
        worst_norm = worst_norm.max((state.norm_sqr() - 1.0).abs());
        let l = r.random_range(0..p);
        let mut betas = sched.raw_betas().to_vec();
        betas[l] += std::f64::consts::TAU;
        let mut shifted = StateVector::plus(g.n())?;
        for (gamma, beta) in sched.raw_gammas().iter().zip(&betas) {
            shifted.apply_cost_phase(&d, *gamma)?;
            shifted.apply_mixer(*beta);
        }
        worst_period = worst_period.max((state.expectation_exact(&d)? - shifted.expectation_exact(&d)?).abs());
    }
    let ok = worst_norm < NORM_TOLERANCE && worst_period < 1e-10;
    Ok((ok, format!("max |norm - 1| {worst_norm:.1e}, max beta-shift change {worst_period:.1e}")))
}

fn sampled_estimator() -> Outcome {
    let inst = Instance::generate(6, 0.7, 0x0d)?;
    let d = CostDiagonal::build(&inst.graph)?;
    let sched = Schedule::from_raw(vec![0.4, 0.9], vec![0.7, 0.3])?;
    let state = evolve_with(&d, &sched)?;
    let exact = state.expectation_exact(&d)?;
    let runs = 200;
    let mut sum = 0.0;
    let mut var = 0.0;
    for i in 0..runs {
        let est = state.expectation_sampled(&d, 1024, derive_seed(0x0d, i))?;
        sum += est.value;
        var += est.stderr * est.stderr;
    }
    let mean = sum / runs as f64;
    let pooled = (var / runs as f64).sqrt() / (runs as f64).sqrt();
    let z = (mean - exact).abs() / pooled;
    Ok((z < 4.0, format!("|mean - exact| = {z:.2} pooled standard errors")))
}

fn cut_properties() -> Outcome {
    let mut r = rng(0x0e);
    let mut failures = 0;
    for i in 0..100 {
        let n = r.random_range(2..=10);
        let g = gen_erdos_renyi(n, r.random_range(0.3..=1.0), derive_seed(0x0e, i))?;
        let best = brute_force_maxcut(&g)?;
        let full = (1u64 << n) - 1;
        for _ in 0..50 {
            let z = r.random_range(0..=full);
            let c = g.cut_value_of_index(z);
            let symmetric = c == g.cut_value_of_index(z ^ full);
            let bounded = c >= 0.0 && c <= g.total_weight() + 1e-12 && c <= best.cut_value;
            if !(symmetric && bounded) {
                failures += 1;
            }
        }
    }
    Ok((failures == 0, format!("{failures} violations over 5000 samples")))
}

fn random_params(r: &mut crate::seed::Rng, k: usize, pure_fourier: bool) -> HfaParams {
    let mut p = HfaParams {
        a: (0..k).map(|_| r.random_range(-1.0..=1.0)).collect(),
        b: (0..k).map(|_| r.random_range(-1.0..=1.0)).collect(),
        lambda_gamma: r.random_range(0.5..=0.95),
        lambda_beta: r.random_range(0.5..=0.95),
        delta_gamma0: r.random_range(-1.0..=1.0),
        delta_beta0: r.random_range(-1.0..=1.0),
        weights: (0..k).map(|_| r.random_range(-1.0..=1.0)).collect(),
    };
    if pure_fourier {
        p.delta_gamma0 = 0.0;
        p.delta_beta0 = 0.0;
    }
    p
}

fn lipschitz(inject: bool) -> Outcome {
    let mut r = rng(0x0f);
    let mut violations = 0;
    let mut checked = 0;
    for draw in 0..1000 {
        let k = r.random_range(1..=4);
        let params = random_params(&mut r, k, false);
        for p in [4, 8, 16, 32, 64] {
            let mut sched = hfa_generate(&params, p)?;
            if inject && draw == 0 && p == 16 {
                let mut raw = sched.raw_gammas().to_vec();
                raw[p / 2] += 1.0;
                sched = Schedule::from_raw(raw, sched.raw_betas().to_vec())?;
            }
            checked += 1;
            if !certify_schedule(&params, &sched)?.holds() {
                violations += 1;
            }
        }
    }
    Ok((violations == 0, format!("{violations} violations over {checked} schedules")))
}

fn layer_gap_decay() -> Outcome {
    let mut r = rng(0x10);
    let (mut g16, mut g64) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let k = r.random_range(1..=4);
        let params = random_params(&mut r, k, true);
        g16 = g16.max(max_layer_gap(&hfa_generate(&params, 16)?));
        g64 = g64.max(max_layer_gap(&hfa_generate(&params, 64)?));
    }
    Ok((g64 <= g16 / 4.0, format!("max gap p=16 {g16:.4}, p=64 {g64:.4}, ratio {:.2}", g16 / g64)))
}

fn symmetry_breaking() -> Outcome {
    let mut r = rng(0x11);
    let draws = 1000;
    let cfg = LotusInitConfig::default();
    let mut ordered = 0;
    for i in 0..draws {
        let k = r.random_range(2..=4);
        let p = r.random_range(4..=24);
        let s = hfa_generate(&cfg.sample(k, derive_seed(0x11, i))?, p)?;
        let mut sorted = s.gammas().to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted != s.gammas() {
            ordered += 1;
        }
    }
    let frac = ordered as f64 / draws as f64;
    Ok((frac >= 0.95, format!("{:.1}% of draws not already sorted", 100.0 * frac)))
}

fn generator_round_trips() -> Outcome {
    let mut r = rng(0x12);
    let mut bad = Vec::new();
    for _ in 0..500 {
        let k = r.random_range(1..=5);
        let p = r.random_range(1..=40);
        let v: Vec<f64> = (0..HfaParams::dimension(k)).map(|_| r.random_range(-3.0..3.0)).collect();
        let params = HfaParams::from_flat(&v, k)?;
        if params.to_flat() != v {
            bad.push("flat layout");
        }
        let a = hfa_generate(&params, p)?;
        if a != hfa_generate(&params, p)? {
            bad.push("determinism");
        }
        if a != resample(&params, p, ResampleMode::KeepLambda)? {
            bad.push("resample");
        }
        if Schedule::unpack(&a.pack())?.gammas() != a.gammas() {
            bad.push("pack");
        }
        let in_range = a.raw_gammas().iter().zip(a.gammas()).all(|(raw, w)| !(0.0..std::f64::consts::TAU).contains(raw) || raw == w);
        if !in_range {
            bad.push("wrap");
        }
    }
    let g1 = gen_erdos_renyi(9, 0.5, 42)?;
    if g1 != gen_erdos_renyi(9, 0.5, 42)? {
        bad.push("instance generator");
    }
    bad.dedup();
    Ok((bad.is_empty(), if bad.is_empty() { "500 draws".into() } else { format!("failed: {}", bad.join(", ")) }))
}

fn evaluation_accounting() -> Outcome {
    let inst = Instance::generate(5, 0.8, 0x13)?;
    let reg = Registry::default();
    let mut mismatches = Vec::new();
    for method in ["nelder-mead", "powell", "fd-lbfgs"] {
        for shots in [0, 256] {
            let circuit = QaoaCircuit::new(&inst.graph)?;
            let start = LotusInitConfig::default().sample(2, 3)?;
            let settings = RunSettings { shots, budget: 300, ..RunSettings::exact(method) };
            let (out, trace) = lotus_descent(&circuit, 4, &start, &settings, 9, &reg)?;
            let monotone = trace.windows(2).all(|w| w[1] <= w[0]);
            if circuit.executions() != out.evaluations || trace.len() != out.evaluations || !monotone {
                mismatches.push(format!("{method}/{shots}"));
            }
        }
    }
    Ok((mismatches.is_empty(), if mismatches.is_empty() { "executions = evaluations".into() } else { mismatches.join(", ") }))
}

fn gradient_stencil() -> Outcome {
    let inst = Instance::generate(6, 0.7, 0x14)?;
    let circuit = QaoaCircuit::new(&inst.graph)?;
    let mut r = rng(0x14);
    let x: Vec<f64> = (0..6).map(|_| r.random_range(0.0..3.0)).collect();
    let f = |v: &[f64]| -circuit.expectation(&Schedule::unpack(v).expect("even length"), 0, 0).expect("exact");
    let mut obj = Objective::new(6, f);
    let h = 1e-5;
    let grad = finite_difference_gradient(&mut obj, &x, h)?;
    let mut worst: f64 = 0.0;
    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    for i in 0..x.len() {
        let at = |s: f64| {
            let mut y = x.clone();
            y[i] += s * h;
            f(&y)
        };
        let five = (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h);
        worst = worst.max((grad[i] - five).abs() / scale.max(1e-12));
    }
    Ok((worst < 1e-4, format!("max relative difference {worst:.1e}")))
}

fn score_properties() -> Outcome {
    let mut r = rng(0x15);
    let mut bad = Vec::new();
    let endpoint = score_group(&[(2.0, 50.0), (1.0, 100.0)], 0.7)?;
    if endpoint[0].score != 1.0 || endpoint[1].score != 0.0 {
        bad.push("endpoint example");
    }
    for _ in 0..10_000 {
        let size = r.random_range(1..=8);
        let alpha: f64 = r.random_range(0.0..=1.0);
        let mut group: Vec<(f64, f64)> =
            (0..size).map(|_| (r.random_range(-10.0..10.0), r.random_range(1..=2000) as f64)).collect();
        if r.random_bool(0.2) {
            let e = group[0].0;
            group.iter_mut().for_each(|g| g.0 = e);
        }
        let s = score_group(&group, alpha)?;
        if s.iter().any(|x| !(0.0..=1.0).contains(&x.score)) {
            bad.push("range");
        }
        if s.iter().any(|x| (x.score - (alpha * x.e_norm + (1.0 - alpha) * x.i_norm)).abs() > 1e-12) {
            bad.push("equation");
        }
        let e_hi = group.iter().map(|g| g.0).fold(f64::NEG_INFINITY, f64::max);
        let i_lo = group.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
        if group.iter().zip(&s).any(|(g, x)| g.0 == e_hi && g.1 == i_lo && x.score != 1.0) {
            bad.push("best scores 1");
        }
        if group.iter().all(|g| g.0 == group[0].0) && s.iter().any(|x| x.e_norm != 1.0) {
            bad.push("degenerate rule");
        }
        let (scale, shift) = (r.random_range(0.1..10.0), r.random_range(-5.0..5.0));
        let moved: Vec<(f64, f64)> = group.iter().map(|&(e, i)| (scale * e + shift, i)).collect();
        let t = score_group(&moved, alpha)?;
        if s.iter().zip(&t).any(|(a, b)| (a.e_norm - b.e_norm).abs() > 1e-9) {
            bad.push("affine invariance");
        }
    }
    bad.sort_unstable();
    bad.dedup();
    Ok((bad.is_empty(), if bad.is_empty() { "10000 random groups".into() } else { format!("failed: {}", bad.join(", ")) }))
}

fn synthetic_records() -> Vec<RunRecord> {
    let mut r = rng(0x16);
    let mut out = Vec::new();
    for cell in 0..12u64 {
        for (optimizer, k) in [("lotus", 2), ("powell", 0), ("nelder-mead", 0)] {
            let e: f64 = r.random_range(1.0..5.0);
            out.push(RunRecord {
                cell: cell as usize,
                instance_seed: cell,
                seed: derive_seed(cell, k as u64),
                optimizer: optimizer.into(),
                method: "nelder-mead".into(),
                n_qubits: 8,
                depth: 8,
                p_graph: 0.75,
                k,
                shots: 0,
                expectation: e,
                expectation_stderr: 0.01,
                expectation_exact: e,
                iterations: 10,
                evaluations: r.random_range(50..500),
                converged: true,
                best_cut: crate::instance::CutResult { n: 8, bits: cell, cut_value: e },
                approx_ratio: Some(r.random_range(0.5..1.0)),
                wall_time: 0.1,
            });
        }
    }
    out
}

fn improvement_self_zero() -> Outcome {
    let recs: Vec<RunRecord> = synthetic_records().into_iter().filter(|r| r.is_lotus()).collect();
    let mut mirrored = recs.clone();
    for r in &recs {
        mirrored.push(RunRecord { optimizer: "mirror".into(), k: 0, ..r.clone() });
    }
    let s = improvement_summary(&mirrored, Some(2))?;
    let ok = s.len() == 1 && s[0].expectation_pct == 0.0 && s[0].iteration_pct == 0.0;
    Ok((ok, format!("{:+.3}% / {:+.3}%", s[0].expectation_pct, s[0].iteration_pct)))
}

fn significance() -> Outcome {
    let x: Vec<f64> = (0..10).map(|i| 0.3 * i as f64).collect();
    let offset: Vec<f64> = x.iter().map(|v| v - (v + 1.0)).collect();
    let p_offset = wilcoxon_signed_rank(&offset)?;
    let m = significance_matrix(&synthetic_records(), 0.05)?;
    let n = m.arms.len();
    let symmetric = (0..n).all(|i| (0..n).all(|j| m.p_values[i][j] == m.p_values[j][i]));
    let diagonal = (0..n).all(|i| m.p_values[i][i] == Some(1.0) && m.significant(i, i) == Some(false));
    let ok = p_offset < 0.05 && (p_offset - 2.0 / 1024.0).abs() < 1e-15 && symmetric && diagonal;
    Ok((ok, format!("offset p = {p_offset:.6}, {n}x{n} matrix symmetric: {symmetric}")))
}

fn persistence() -> Outcome {
    let recs = synthetic_records();
    let mut text = String::new();
    for r in &recs {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    let back: Vec<RunRecord> = text.lines().map(serde_json::from_str).collect::<std::result::Result<_, _>>()?;
    let ok = back == recs && score_records(&back, 0.7)? == score_records(&recs, 0.7)?;
    Ok((ok, format!("{} records reloaded and rescored", recs.len())))
}
