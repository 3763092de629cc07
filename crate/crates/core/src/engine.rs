//! Statevector QAOA engine for diagonal MaxCut costs and the Σ X mixer.
//!
//! Basis index `z` encodes node `i` in bit `i`. The cost unitary is a pointwise
//! phase and the mixer is a product of commuting single-qubit rotations, so
//! both are applied exactly without Trotterization.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::instance::{canonical, CutResult, WeightedGraph};
use crate::schedule::Schedule;
use crate::seed::rng;

pub const DEFAULT_QUBIT_CAP: usize = 20;

/// Tolerance on `| ‖ψ‖² − 1 |` after any sequence of unitaries.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Diagonal of the cost Hamiltonian: `values[z]` is the cut value of `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostDiagonal {
    n: usize,
    values: Vec<f64>,
}

impl CostDiagonal {
    pub fn build(g: &WeightedGraph) -> Result<Self> {
        Self::build_with_cap(g, DEFAULT_QUBIT_CAP)
    }

    pub fn build_with_cap(g: &WeightedGraph, cap: usize) -> Result<Self> {
        let n = g.n();
        if n > cap {
            return Err(Error::TooManyQubits { n, cap });
        }
        let dim = 1usize << n;
        let mut values = vec![0.0; dim];
        for e in g.edges() {
            for (z, v) in values.iter_mut().enumerate() {
                if ((z >> e.i) ^ (z >> e.j)) & 1 == 1 {
                    *v += e.w;
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest cut value, i.e. the MaxCut optimum.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |+⟩^⊗n.
    pub fn plus(n: usize) -> Result<Self> {
        Self::check_qubits(n)?;
        let dim = 1usize << n;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(Self { n, amps: vec![a; dim] })
    }

    /// Computational basis state |z⟩.
    pub fn basis(n: usize, z: usize) -> Result<Self> {
        Self::check_qubits(n)?;
        let dim = 1usize << n;
        if z >= dim {
            return Err(Error::InvalidParameter(format!("basis index {z} out of range for {n} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[z] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Wraps raw amplitudes. The length must be a power of two; no
    /// normalization is applied.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidParameter(format!("{} amplitudes is not a power of two", amps.len())));
        }
        let n = amps.len().trailing_zeros() as usize;
        Ok(Self { n, amps })
    }

    fn check_qubits(n: usize) -> Result<()> {
        if n == 0 || n > DEFAULT_QUBIT_CAP {
            return Err(Error::TooManyQubits { n, cap: DEFAULT_QUBIT_CAP });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// |⟨self|other⟩|, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        self.check_dim(other.amps.len())?;
        let overlap: Complex64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(overlap.norm())
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.amps.len() != other {
            return Err(Error::DimensionMismatch { expected: self.amps.len(), got: other });
        }
        Ok(())
    }

    /// amps[z] ← amps[z]·exp(−iγ·c(z)).
    pub fn apply_cost_phase(&mut self, d: &CostDiagonal, gamma: f64) -> Result<()> {
        self.check_dim(d.values.len())?;
        for (a, &c) in self.amps.iter_mut().zip(&d.values) {
            let (s, co) = (gamma * c).sin_cos();
            *a *= Complex64::new(co, -s);
        }
        Ok(())
    }

    /// exp(−iβ Σ_i X_i), applied as cos β·I − i sin β·X on every qubit.
    pub fn apply_mixer(&mut self, beta: f64) {
        let (s, c) = beta.sin_cos();
        let dim = self.amps.len();
        for q in 0..self.n {
            let stride = 1usize << q;
            for block in (0..dim).step_by(stride << 1) {
                for z in block..block + stride {
                    let a0 = self.amps[z];
                    let a1 = self.amps[z + stride];
                    // (c, -i s; -i s, c)
                    self.amps[z] = Complex64::new(c * a0.re + s * a1.im, c * a0.im - s * a1.re);
                    self.amps[z + stride] = Complex64::new(c * a1.re + s * a0.im, c * a1.im - s * a0.re);
                }
            }
        }
    }

    /// Σ_z |amps[z]|²·c(z).
    pub fn expectation_exact(&self, d: &CostDiagonal) -> Result<f64> {
        self.check_dim(d.values.len())?;
        Ok(self.amps.iter().zip(&d.values).map(|(a, &c)| a.norm_sqr() * c).sum())
    }

    /// Draws `shots` basis states from |amps|² and returns the sample mean of
    /// the cost and its standard error.
    pub fn expectation_sampled(&self, d: &CostDiagonal, shots: u32, seed: u64) -> Result<Estimate> {
        self.check_dim(d.values.len())?;
        if shots == 0 {
            return Err(Error::InvalidParameter("shots must be at least 1".into()));
        }
        let samples = self.sample(shots, seed)?;
        let k = samples.len() as f64;
        let mean = samples.iter().map(|&z| d.values[z]).sum::<f64>() / k;
        let stderr = if samples.len() > 1 {
            let var = samples.iter().map(|&z| (d.values[z] - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            0.0
        };
        Ok(Estimate { value: mean, stderr })
    }

    /// Samples `shots` basis states and keeps the best cut. Ties go to the
    /// lowest canonical assignment (node 0 on side 0).
    pub fn sample_best_bitstring(&self, g: &WeightedGraph, shots: u32, seed: u64) -> Result<CutResult> {
        if g.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: g.n() });
        }
        if shots == 0 {
            return Err(Error::InvalidParameter("shots must be at least 1".into()));
        }
        let mut best: Option<CutResult> = None;
        for z in self.sample(shots, seed)? {
            let bits = canonical(z as u64, self.n);
            let v = g.cut_value_of_index(bits);
            let better = match best {
                None => true,
                Some(b) => v > b.cut_value || (v == b.cut_value && bits < b.bits),
            };
            if better {
                best = Some(CutResult { n: self.n, bits, cut_value: v });
            }
        }
        Ok(best.expect("shots >= 1"))
    }

    fn sample(&self, shots: u32, seed: u64) -> Result<Vec<usize>> {
        let dist = WeightedIndex::new(self.amps.iter().map(|a| a.norm_sqr()))
            .map_err(|e| Error::InvalidParameter(format!("cannot sample state: {e}")))?;
        let mut rng = rng(seed);
        Ok((0..shots).map(|_| dist.sample(&mut rng)).collect())
    }
}

/// A sampled expectation value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Runs `sched` from |+⟩: for each layer, the cost phase then the mixer.
///
/// The cost phase uses the unwrapped γ (the cost spectrum is not integral, so
/// γ mod 2π is a different unitary); β enters 2π-periodically and the wrapped
/// value is used.
pub fn evolve_with(d: &CostDiagonal, sched: &Schedule) -> Result<StateVector> {
    if sched.depth() == 0 {
        return Err(Error::InvalidParameter("schedule has no layers".into()));
    }
    let mut s = StateVector::plus(d.n)?;
    for (&gamma, &beta) in sched.raw_gammas().iter().zip(sched.betas()) {
        s.apply_cost_phase(d, gamma)?;
        s.apply_mixer(beta);
    }
    Ok(s)
}

/// Builds the cost diagonal for `g` and evolves `sched`.
pub fn evolve(g: &WeightedGraph, sched: &Schedule) -> Result<StateVector> {
    evolve_with(&CostDiagonal::build(g)?, sched)
}

/// A problem instance bound to its cost diagonal, with a counter of circuit
/// executions.
#[derive(Debug)]
pub struct QaoaCircuit {
    diagonal: CostDiagonal,
    executions: AtomicUsize,
}

impl QaoaCircuit {
    pub fn new(g: &WeightedGraph) -> Result<Self> {
        Ok(Self::from_diagonal(CostDiagonal::build(g)?))
    }

    pub fn from_diagonal(diagonal: CostDiagonal) -> Self {
        Self { diagonal, executions: AtomicUsize::new(0) }
    }

    pub fn diagonal(&self) -> &CostDiagonal {
        &self.diagonal
    }

    pub fn evolve(&self, sched: &Schedule) -> Result<StateVector> {
        self.executions.fetch_add(1, Ordering::Relaxed);
        evolve_with(&self.diagonal, sched)
    }

    /// Expectation of the cost after `sched`. `shots == 0` selects the exact
    /// value; otherwise a sampled estimate seeded by `seed`.
    pub fn expectation(&self, sched: &Schedule, shots: u32, seed: u64) -> Result<f64> {
        let s = self.evolve(sched)?;
        if shots == 0 {
            s.expectation_exact(&self.diagonal)
        } else {
            Ok(s.expectation_sampled(&self.diagonal, shots, seed)?.value)
        }
    }

    pub fn executions(&self) -> usize {
        self.executions.load(Ordering::Relaxed)
    }
}
