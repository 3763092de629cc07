//! Paired significance testing between optimizer arms.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

use super::record::{GroupKey, RunRecord};

/// Minimum paired samples for a matrix entry.
pub const MIN_PAIRS: usize = 5;

/// Largest sample size that uses the exact null distribution.
const EXACT_LIMIT: usize = 50;

/// Two-sided Wilcoxon signed-rank p-value for paired differences.
///
/// Zero differences are dropped and ties get midranks. Up to 50 nonzero pairs
/// the exact permutation null is used; beyond that the normal approximation
/// with tie correction. All-zero input gives `p = 1`.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<f64> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::Statistics("non-finite difference".into()));
    }
    let mut nz: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return Ok(1.0);
    }
    nz.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

    // average ranks over runs of equal |d|
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && nz[end].abs() == nz[start].abs() {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        ranks[start..end].iter_mut().for_each(|r| *r = avg);
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    let w_plus: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();

    let p = if n <= EXACT_LIMIT {
        // Exact null conditional on the observed ranks. Midranks are doubled so
        // every rank is an integer; counts[s] = sign patterns with 2·W+ = s.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0.0f64; max + 1];
        counts[0] = 1.0;
        for &r in &doubled {
            for s in (r..=max).rev() {
                counts[s] += counts[s - r];
            }
        }
        let total = 2f64.powi(n as i32);
        let w = (2.0 * w_plus).round() as usize;
        let lower: f64 = counts[..=w].iter().sum::<f64>() / total;
        let upper: f64 = counts[w..].iter().sum::<f64>() / total;
        2.0 * lower.min(upper)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        if var <= 0.0 {
            return Ok(1.0);
        }
        let z = (w_plus - mean) / var.sqrt();
        let normal = Normal::standard();
        2.0 * (1.0 - normal.cdf(z.abs()))
    };
    Ok(p.min(1.0))
}

/// Pairwise p-values between arms; `None` where fewer than [`MIN_PAIRS`]
/// shared cells exist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificanceMatrix {
    pub arms: Vec<String>,
    pub p_values: Vec<Vec<Option<f64>>>,
    pub alpha: f64,
}

impl SignificanceMatrix {
    pub fn significant(&self, i: usize, j: usize) -> Option<bool> {
        self.p_values[i][j].map(|p| p < self.alpha)
    }
}

/// Wilcoxon signed-rank test on per-cell verified expectations for every pair
/// of arms (see [`RunRecord::arm`]).
pub fn significance_matrix(records: &[RunRecord], alpha: f64) -> Result<SignificanceMatrix> {
    let mut by_arm: BTreeMap<String, BTreeMap<GroupKey, f64>> = BTreeMap::new();
    for r in records {
        by_arm.entry(r.arm()).or_default().insert(r.group_key(), r.expectation);
    }
    let arms: Vec<String> = by_arm.keys().cloned().collect();
    let mut p_values = vec![vec![None; arms.len()]; arms.len()];
    for i in 0..arms.len() {
        for j in i..arms.len() {
            let a = &by_arm[&arms[i]];
            let b = &by_arm[&arms[j]];
            let shared: BTreeSet<&GroupKey> = a.keys().filter(|k| b.contains_key(k)).collect();
            if shared.len() < MIN_PAIRS {
                continue;
            }
            let diffs: Vec<f64> = shared.iter().map(|k| a[*k] - b[*k]).collect();
            let p = wilcoxon_signed_rank(&diffs)?;
            p_values[i][j] = Some(p);
            p_values[j][i] = Some(p);
        }
    }
    Ok(SignificanceMatrix { arms, p_values, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_positive_ten() {
        // x vs x + 1: every |d| tied, only the all-negative pattern is as extreme
        let x: Vec<f64> = (0..10).map(|i| 0.37 * i as f64).collect();
        let diffs: Vec<f64> = x.iter().map(|v| v - (v + 1.0)).collect();
        assert!((wilcoxon_signed_rank(&diffs).unwrap() - 2.0 / 1024.0).abs() < 1e-15);

        let distinct: Vec<f64> = (1..=10).map(|i| i as f64 * 0.1).collect();
        assert!((wilcoxon_signed_rank(&distinct).unwrap() - 2.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn zero_differences() {
        assert_eq!(wilcoxon_signed_rank(&[0.0; 8]).unwrap(), 1.0);
        assert_eq!(wilcoxon_signed_rank(&[]).unwrap(), 1.0);
        assert!(wilcoxon_signed_rank(&[f64::NAN]).is_err());
    }

    #[test]
    fn symmetric_in_sign() {
        let d = [0.3, -1.2, 0.5, 2.2, -0.1, 0.9, 1.7];
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        assert_eq!(wilcoxon_signed_rank(&d).unwrap(), wilcoxon_signed_rank(&neg).unwrap());
    }

    #[test]
    fn known_exact_value() {
        // n = 6, W+ = 1 + 2 = 3: P(W+ <= 3) = 5/64
        let d = [1.0, 2.0, -3.0, -4.0, -5.0, -6.0];
        assert!((wilcoxon_signed_rank(&d).unwrap() - 10.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn exact_and_normal_agree_roughly() {
        let d: Vec<f64> = (1..=50).map(|i| if i % 4 == 0 { -(i as f64) } else { i as f64 + 0.5 }).collect();
        let exact = wilcoxon_signed_rank(&d).unwrap();
        let mut longer = d.clone();
        longer.push(60.0);
        let approx = wilcoxon_signed_rank(&longer).unwrap();
        assert!(exact < 1e-2 && approx < 1e-2, "{exact} {approx}");
        assert!((exact.ln() - approx.ln()).abs() < 1.0);
    }
}
