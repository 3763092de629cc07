//! Layer schedules: the hybrid Fourier-autoregressive generator and the plain
//! layer-wise packing.
//!
//! An HFA parameter vector describes both angle families as smooth functions of
//! the normalized layer coordinate `x_l = (l − ½)/p`:
//!
//! ```text
//! γ_l = Σ_k a_k·W_k·sin(kπ x_l) + λ_γ^(l−1)·δ_γ0
//! β_l = Σ_k b_k·W_k·cos(kπ x_l) + λ_β^(l−1)·δ_β0
//! ```
//!
//! The search dimension is `3K + 4` no matter how deep the circuit is.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// HFA parameters.
///
/// The flat layout is `(a[1..K], b[1..K], λ_γ, λ_β, δ_γ0, δ_β0, W[1..K])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HfaParams {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub lambda_gamma: f64,
    pub lambda_beta: f64,
    pub delta_gamma0: f64,
    pub delta_beta0: f64,
    pub weights: Vec<f64>,
}

impl HfaParams {
    /// All-zero spectrum and residuals, unit weights.
    pub fn zeros(k: usize) -> Self {
        Self {
            a: vec![0.0; k],
            b: vec![0.0; k],
            lambda_gamma: 0.0,
            lambda_beta: 0.0,
            delta_gamma0: 0.0,
            delta_beta0: 0.0,
            weights: vec![1.0; k],
        }
    }

    pub fn modes(&self) -> usize {
        self.a.len()
    }

    /// Flat dimension for `k` modes.
    pub const fn dimension(k: usize) -> usize {
        3 * k + 4
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::dimension(self.modes()));
        v.extend_from_slice(&self.a);
        v.extend_from_slice(&self.b);
        v.extend([self.lambda_gamma, self.lambda_beta, self.delta_gamma0, self.delta_beta0]);
        v.extend_from_slice(&self.weights);
        v
    }

    pub fn from_flat(v: &[f64], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("need at least one Fourier mode".into()));
        }
        if v.len() != Self::dimension(k) {
            return Err(Error::DimensionMismatch { expected: Self::dimension(k), got: v.len() });
        }
        Ok(Self {
            a: v[..k].to_vec(),
            b: v[k..2 * k].to_vec(),
            lambda_gamma: v[2 * k],
            lambda_beta: v[2 * k + 1],
            delta_gamma0: v[2 * k + 2],
            delta_beta0: v[2 * k + 3],
            weights: v[2 * k + 4..].to_vec(),
        })
    }

    /// Flat-vector indices of `λ_γ` and `λ_β`.
    pub fn lambda_indices(k: usize) -> [usize; 2] {
        [2 * k, 2 * k + 1]
    }

    fn validate(&self) -> Result<()> {
        let k = self.modes();
        if k == 0 {
            return Err(Error::InvalidParameter("need at least one Fourier mode".into()));
        }
        if self.b.len() != k || self.weights.len() != k {
            return Err(Error::InvalidParameter(format!(
                "mode counts disagree: a={}, b={}, weights={}",
                k,
                self.b.len(),
                self.weights.len()
            )));
        }
        if !self.to_flat().iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite HFA parameter".into()));
        }
        Ok(())
    }
}

/// Layer angles for a depth-`p` circuit.
///
/// `raw_*` are the values before reduction mod 2π; `gammas`/`betas` are the
/// reduced values in `[0, 2π)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    grid: Vec<f64>,
    gammas: Vec<f64>,
    betas: Vec<f64>,
    raw_gammas: Vec<f64>,
    raw_betas: Vec<f64>,
}

/// `x mod 2π` in `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid rounds tiny negatives up to exactly 2π
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `x_l = (l − ½)/p` for `l = 1..p`.
pub fn layer_grid(p: usize) -> Vec<f64> {
    (1..=p).map(|l| (l as f64 - 0.5) / p as f64).collect()
}

impl Schedule {
    pub fn from_raw(raw_gammas: Vec<f64>, raw_betas: Vec<f64>) -> Result<Self> {
        if raw_gammas.len() != raw_betas.len() {
            return Err(Error::DimensionMismatch { expected: raw_gammas.len(), got: raw_betas.len() });
        }
        if raw_gammas.is_empty() {
            return Err(Error::InvalidParameter("schedule needs at least one layer".into()));
        }
        Ok(Self {
            grid: layer_grid(raw_gammas.len()),
            gammas: raw_gammas.iter().copied().map(wrap_angle).collect(),
            betas: raw_betas.iter().copied().map(wrap_angle).collect(),
            raw_gammas,
            raw_betas,
        })
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn raw_gammas(&self) -> &[f64] {
        &self.raw_gammas
    }

    pub fn raw_betas(&self) -> &[f64] {
        &self.raw_betas
    }

    /// `(γ_1..γ_p, β_1..β_p)` from the raw angles.
    pub fn pack(&self) -> Vec<f64> {
        self.raw_gammas.iter().chain(&self.raw_betas).copied().collect()
    }

    pub fn unpack(v: &[f64]) -> Result<Self> {
        if v.is_empty() || !v.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("standard vector needs even nonzero length, got {}", v.len())));
        }
        let p = v.len() / 2;
        Self::from_raw(v[..p].to_vec(), v[p..].to_vec())
    }

    /// Writes `l,x_l,gamma,beta` rows (wrapped angles, 1-based `l`).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "l,x_l,gamma,beta")?;
        for (l, ((x, g), b)) in self.grid.iter().zip(&self.gammas).zip(&self.betas).enumerate() {
            writeln!(out, "{},{},{},{}", l + 1, x, g, b)?;
        }
        Ok(())
    }
}

/// Standard-parameterization dimension `2p`.
pub const fn standard_dimension(p: usize) -> usize {
    2 * p
}

/// Ratio of HFA search dimension to the standard `2p`.
///
/// Uses the `2K + 4` count (no frequency weights) when `with_weights` is false.
pub fn dimension_ratio(k: usize, p: usize, with_weights: bool) -> f64 {
    let d = if with_weights { HfaParams::dimension(k) } else { 2 * k + 4 };
    d as f64 / standard_dimension(p) as f64
}

/// Realizes an HFA parameter vector at depth `p`.
pub fn hfa_generate(params: &HfaParams, p: usize) -> Result<Schedule> {
    params.validate()?;
    if p == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    let grid = layer_grid(p);
    let mut raw_gammas = Vec::with_capacity(p);
    let mut raw_betas = Vec::with_capacity(p);
    let mut dg = params.delta_gamma0;
    let mut db = params.delta_beta0;
    for (l, &x) in grid.iter().enumerate() {
        if l > 0 {
            dg *= params.lambda_gamma;
            db *= params.lambda_beta;
        }
        let mut fg = 0.0;
        let mut fb = 0.0;
        for (k, ((a, b), w)) in params.a.iter().zip(&params.b).zip(&params.weights).enumerate() {
            let phase = (k + 1) as f64 * PI * x;
            fg += a * w * phase.sin();
            fb += b * w * phase.cos();
        }
        raw_gammas.push(fg + dg);
        raw_betas.push(fb + db);
    }
    Schedule::from_raw(raw_gammas, raw_betas)
}

/// How [`resample`] treats the AR decay when the depth changes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum ResampleMode {
    /// λ unchanged: the residual decays per layer.
    #[default]
    KeepLambda,
    /// λ → λ^(p_old/p_new): the residual envelope is fixed in normalized time.
    ArRescale { p_old: usize },
}

/// The AR decay rescaled for a depth change. Negative rates keep their sign.
pub fn rescale_lambda(lambda: f64, p_old: usize, p_new: usize) -> f64 {
    lambda.signum() * lambda.abs().powf(p_old as f64 / p_new as f64)
}

/// Evaluates the continuous schedule behind `params` on a depth-`p_new` grid.
pub fn resample(params: &HfaParams, p_new: usize, mode: ResampleMode) -> Result<Schedule> {
    match mode {
        ResampleMode::KeepLambda => hfa_generate(params, p_new),
        ResampleMode::ArRescale { p_old } => {
            if p_old == 0 {
                return Err(Error::InvalidParameter("source depth must be at least 1".into()));
            }
            let mut scaled = params.clone();
            scaled.lambda_gamma = rescale_lambda(params.lambda_gamma, p_old, p_new);
            scaled.lambda_beta = rescale_lambda(params.lambda_beta, p_old, p_new);
            hfa_generate(&scaled, p_new)
        }
    }
}

/// Bound on consecutive raw layer gaps for one angle family:
/// `|θ_{l+1} − θ_l| ≤ c_spec/p + c_ar·|λ|^(l−1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyBound {
    pub c_spec: f64,
    pub c_ar: f64,
    /// Largest `gap − bound` over all layers; `≤ 0` when the bound holds.
    pub max_violation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// Larger of the two families' spectral constants.
    pub c_spec: f64,
    /// Larger of the two families' AR constants.
    pub c_ar: f64,
    /// Larger of the two families' violations.
    pub max_violation: f64,
    pub gamma: FamilyBound,
    pub beta: FamilyBound,
}

impl LipschitzReport {
    /// Violations up to this size are floating-point noise.
    pub const SLACK: f64 = 1e-12;

    pub fn holds(&self) -> bool {
        self.max_violation <= Self::SLACK
    }
}

fn family_bound(coeffs: &[f64], weights: &[f64], lambda: f64, delta0: f64, raw: &[f64]) -> FamilyBound {
    let c_spec = PI * coeffs.iter().zip(weights).enumerate().map(|(k, (c, w))| (k + 1) as f64 * (c * w).abs()).sum::<f64>();
    let c_ar = delta0.abs() * (1.0 - lambda).abs();
    let p = raw.len() as f64;
    let mut max_violation = if raw.len() < 2 { 0.0 } else { f64::NEG_INFINITY };
    let mut envelope = 1.0;
    for pair in raw.windows(2) {
        let gap = (pair[1] - pair[0]).abs();
        max_violation = max_violation.max(gap - c_spec / p - c_ar * envelope);
        envelope *= lambda.abs();
    }
    FamilyBound { c_spec, c_ar, max_violation }
}

/// Checks the layer-gap bound of `params` against an arbitrary schedule of
/// the same depth (normally `hfa_generate(params, p)`).
pub fn certify_schedule(params: &HfaParams, sched: &Schedule) -> Result<LipschitzReport> {
    params.validate()?;
    for lambda in [params.lambda_gamma, params.lambda_beta] {
        if lambda.abs() >= 1.0 {
            return Err(Error::InvalidParameter(format!("AR decay must satisfy |λ| < 1, got {lambda}")));
        }
    }
    let gamma = family_bound(&params.a, &params.weights, params.lambda_gamma, params.delta_gamma0, sched.raw_gammas());
    let beta = family_bound(&params.b, &params.weights, params.lambda_beta, params.delta_beta0, sched.raw_betas());
    Ok(LipschitzReport {
        c_spec: gamma.c_spec.max(beta.c_spec),
        c_ar: gamma.c_ar.max(beta.c_ar),
        max_violation: gamma.max_violation.max(beta.max_violation),
        gamma,
        beta,
    })
}

/// Layer-gap certificate for the depth-`p` realization of `params`.
pub fn lipschitz_certificate(params: &HfaParams, p: usize) -> Result<LipschitzReport> {
    let sched = hfa_generate(params, p)?;
    certify_schedule(params, &sched)
}

/// Largest `|θ_{l+1} − θ_l|` over both raw angle families.
pub fn max_layer_gap(sched: &Schedule) -> f64 {
    [sched.raw_gammas(), sched.raw_betas()]
        .iter()
        .flat_map(|r| r.windows(2).map(|w| (w[1] - w[0]).abs()))
        .fold(0.0, f64::max)
}
