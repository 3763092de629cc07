//! Dense-matrix reference for the statevector engine.
//!
//! Everything here is built the slow way: Hamiltonians are assembled from
//! Kronecker products of Pauli matrices and exponentiated with a generic
//! scaling-and-squaring Taylor series, with no use of the diagonal structure
//! the fast engine relies on. Intended for n ≤ ~6.

use num_complex::Complex64;

use crate::instance::WeightedGraph;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn pauli_x() -> Self {
        Self { dim: 2, data: vec![ZERO, ONE, ONE, ZERO] }
    }

    pub fn pauli_z() -> Self {
        Self { dim: 2, data: vec![ONE, ZERO, ZERO, -ONE] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn kron(&self, other: &Self) -> Self {
        let dim = self.dim * other.dim;
        let mut out = Self::zeros(dim);
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                let a = self.get(r1, c1);
                for r2 in 0..other.dim {
                    for c2 in 0..other.dim {
                        out.data[(r1 * other.dim + r2) * dim + c1 * other.dim + c2] = a * other.get(r2, c2);
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * other.data[k * n + c];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim).map(|r| (0..self.dim).map(|c| self.get(r, c) * v[c]).sum()).collect()
    }

    fn norm1(&self) -> f64 {
        (0..self.dim).map(|c| (0..self.dim).map(|r| self.get(r, c).norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Matrix exponential by scaling and squaring a degree-30 Taylor series.
    pub fn expm(&self) -> Self {
        let norm = self.norm1();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let a = self.scale(Complex64::new(0.5f64.powi(squarings), 0.0));
        let mut sum = Self::identity(self.dim);
        let mut term = Self::identity(self.dim);
        for k in 1..=30 {
            term = term.matmul(&a).scale(Complex64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
        }
        for _ in 0..squarings {
            sum = sum.matmul(&sum);
        }
        sum
    }
}

/// `op` acting on qubit `q` of `n`; qubit 0 is the least significant index bit.
pub fn single_qubit_operator(op: &DenseMatrix, q: usize, n: usize) -> DenseMatrix {
    let id = DenseMatrix::identity(2);
    let mut out = DenseMatrix::identity(1);
    for k in (0..n).rev() {
        out = out.kron(if k == q { op } else { &id });
    }
    out
}

/// `H_C = Σ_(i,j) w_ij·(I − Z_i Z_j)/2`.
pub fn cost_hamiltonian(g: &WeightedGraph) -> DenseMatrix {
    let n = g.n();
    let dim = 1 << n;
    let mut h = DenseMatrix::zeros(dim);
    let id = DenseMatrix::identity(dim);
    for e in g.edges() {
        let zz = single_qubit_operator(&DenseMatrix::pauli_z(), e.i, n).matmul(&single_qubit_operator(&DenseMatrix::pauli_z(), e.j, n));
        let term = id.add(&zz.scale(-ONE)).scale(Complex64::new(0.5 * e.w, 0.0));
        h = h.add(&term);
    }
    h
}

/// `H_B = Σ_i X_i`.
pub fn mixer_hamiltonian(n: usize) -> DenseMatrix {
    (0..n).fold(DenseMatrix::zeros(1 << n), |acc, q| acc.add(&single_qubit_operator(&DenseMatrix::pauli_x(), q, n)))
}

/// `Π_l e^{−iβ_l H_B} e^{−iγ_l H_C} |+⟩^⊗n` by dense exponentiation.
pub fn evolve_dense(g: &WeightedGraph, gammas: &[f64], betas: &[f64]) -> Vec<Complex64> {
    let n = g.n();
    let dim = 1usize << n;
    let hc = cost_hamiltonian(g);
    let hb = mixer_hamiltonian(n);
    let mut psi = vec![Complex64::new((dim as f64).sqrt().recip(), 0.0); dim];
    for (&gamma, &beta) in gammas.iter().zip(betas) {
        psi = hc.scale(Complex64::new(0.0, -gamma)).expm().apply(&psi);
        psi = hb.scale(Complex64::new(0.0, -beta)).expm().apply(&psi);
    }
    psi
}

/// `⟨ψ|H|ψ⟩` (real part).
pub fn expectation_dense(h: &DenseMatrix, psi: &[Complex64]) -> f64 {
    let h_psi = h.apply(psi);
    psi.iter().zip(&h_psi).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_pauli_x() {
        // exp(−iθX) = cos θ I − i sin θ X
        let theta = 0.7f64;
        let u = DenseMatrix::pauli_x().scale(Complex64::new(0.0, -theta)).expm();
        assert!((u.get(0, 0) - Complex64::new(theta.cos(), 0.0)).norm() < 1e-14);
        assert!((u.get(0, 1) - Complex64::new(0.0, -theta.sin())).norm() < 1e-14);
    }

    #[test]
    fn cost_hamiltonian_is_cut_diagonal() {
        let g = WeightedGraph::new(3, [(0, 1, 0.5), (1, 2, 0.25)]).unwrap();
        let h = cost_hamiltonian(&g);
        for z in 0..8 {
            assert!((h.get(z, z).re - g.cut_value_of_index(z as u64)).abs() < 1e-15);
        }
    }

    #[test]
    fn single_edge_optimum() {
        let g = WeightedGraph::new(2, [(0, 1, 1.0)]).unwrap();
        let psi = evolve_dense(&g, &[std::f64::consts::FRAC_PI_2], &[std::f64::consts::FRAC_PI_8]);
        assert!((expectation_dense(&cost_hamiltonian(&g), &psi) - 1.0).abs() < 1e-12);
    }
}
