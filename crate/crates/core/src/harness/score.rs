//! Composite Score and improvement percentages.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::record::{GroupKey, RunRecord};

pub const DEFAULT_ALPHA: f64 = 0.7;

/// `score = alpha·e_norm + (1 − alpha)·i_norm`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub e_norm: f64,
    pub i_norm: f64,
    pub score: f64,
    pub alpha: f64,
}

fn min_max(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// `(v − min)/(max − min)`, or 1 when every member is equal.
fn normalize(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        1.0
    }
}

/// Scores one group of `(expectation, cost)` pairs. Higher expectation and
/// lower cost are better.
pub fn score_group(group: &[(f64, f64)], alpha: f64) -> Result<Vec<ScoreRecord>> {
    if group.is_empty() {
        return Err(Error::InvalidParameter("cannot score an empty group".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let (e_lo, e_hi) = min_max(group.iter().map(|g| g.0));
    let (i_lo, i_hi) = min_max(group.iter().map(|g| g.1));
    Ok(group
        .iter()
        .map(|&(e, i)| {
            let e_norm = normalize(e, e_lo, e_hi);
            let i_norm = if i_hi > i_lo { 1.0 - normalize(i, i_lo, i_hi) } else { 1.0 };
            // i + α(e − i) is exactly 1 when both norms are 1 and stays in [0, 1]
            ScoreRecord { e_norm, i_norm, score: i_norm + alpha * (e_norm - i_norm), alpha }
        })
        .collect())
}

/// Scores every record against the others on the same instance and depth,
/// using the verified expectation and the evaluation count. Output order
/// matches the input.
pub fn score_records(records: &[RunRecord], alpha: f64) -> Result<Vec<ScoreRecord>> {
    let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
    for (idx, r) in records.iter().enumerate() {
        groups.entry(r.group_key()).or_default().push(idx);
    }
    let mut out = vec![None; records.len()];
    for members in groups.values() {
        let pairs: Vec<(f64, f64)> = members.iter().map(|&i| (records[i].expectation, records[i].evaluations as f64)).collect();
        for (&i, s) in members.iter().zip(score_group(&pairs, alpha)?) {
            out[i] = Some(s);
        }
    }
    Ok(out.into_iter().map(|s| s.expect("every record belongs to a group")).collect())
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[m] } else { 0.5 * (values[m - 1] + values[m]) })
}

/// LOTUS versus one baseline, as medians over shared cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub baseline: String,
    /// Median of `(E_lotus − E_b)/|E_b|`, in percent.
    pub expectation_pct: f64,
    /// Median of `(I_b − I_lotus)/I_b` with `I` = evaluations, in percent.
    pub iteration_pct: f64,
    pub cells: usize,
}

/// Compares the LOTUS arm with `lotus_k` modes (the smallest K present when
/// `None`) against every baseline on the cells they share.
pub fn improvement_summary(records: &[RunRecord], lotus_k: Option<usize>) -> Result<Vec<Improvement>> {
    let k = match lotus_k {
        Some(k) => k,
        None => records
            .iter()
            .filter(|r| r.is_lotus())
            .map(|r| r.k)
            .min()
            .ok_or_else(|| Error::Statistics("no LOTUS records".into()))?,
    };
    let lotus: BTreeMap<GroupKey, &RunRecord> =
        records.iter().filter(|r| r.is_lotus() && r.k == k).map(|r| (r.group_key(), r)).collect();

    let mut baselines: BTreeMap<String, Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.is_lotus()) {
        baselines.entry(r.optimizer.clone()).or_default().push(r);
    }

    let mut out = Vec::new();
    for (name, runs) in baselines {
        let mut e = Vec::new();
        let mut i = Vec::new();
        for b in runs {
            if let Some(l) = lotus.get(&b.group_key()) {
                e.push(if b.expectation != 0.0 { (l.expectation - b.expectation) / b.expectation.abs() * 100.0 } else { 0.0 });
                let ib = b.evaluations as f64;
                i.push(if ib > 0.0 { (ib - l.evaluations as f64) / ib * 100.0 } else { 0.0 });
            }
        }
        if e.is_empty() {
            continue;
        }
        out.push(Improvement {
            baseline: name,
            cells: e.len(),
            expectation_pct: median(&mut e).unwrap_or(0.0),
            iteration_pct: median(&mut i).unwrap_or(0.0),
        });
    }
    if out.is_empty() {
        return Err(Error::Statistics(format!("no baseline shares a cell with lotus-k{k}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::CutResult;
    use proptest::prelude::*;

    pub(crate) fn record(optimizer: &str, k: usize, seed: u64, e: f64, evals: usize) -> RunRecord {
        RunRecord {
            cell: seed as usize,
            instance_seed: seed,
            seed,
            optimizer: optimizer.into(),
            method: "nelder-mead".into(),
            n_qubits: 8,
            depth: 8,
            p_graph: 0.75,
            k,
            shots: 0,
            expectation: e,
            expectation_stderr: 0.0,
            expectation_exact: e,
            iterations: evals,
            evaluations: evals,
            converged: true,
            best_cut: CutResult { n: 8, bits: 0, cut_value: 0.0 },
            approx_ratio: None,
            wall_time: 0.0,
        }
    }

    #[test]
    fn endpoint_example() {
        let s = score_group(&[(2.0, 50.0), (1.0, 100.0)], 0.7).unwrap();
        assert_eq!((s[0].e_norm, s[0].i_norm, s[0].score), (1.0, 1.0, 1.0));
        assert_eq!((s[1].e_norm, s[1].i_norm, s[1].score), (0.0, 0.0, 0.0));
    }

    #[test]
    fn degenerate_groups() {
        let s = score_group(&[(3.0, 10.0)], DEFAULT_ALPHA).unwrap();
        assert_eq!(s[0].score, 1.0);
        let s = score_group(&[(3.0, 10.0), (3.0, 20.0)], 0.7).unwrap();
        assert_eq!(s[0].e_norm, 1.0);
        assert_eq!(s[1].e_norm, 1.0);
        assert!((s[1].score - 0.7).abs() < 1e-15);
        assert!(score_group(&[], 0.7).is_err());
        assert!(score_group(&[(1.0, 1.0)], 1.5).is_err());
    }

    #[test]
    fn records_grouped_by_instance() {
        let recs = vec![
            record("lotus", 2, 1, 2.0, 50),
            record("powell", 0, 2, 5.0, 500),
            record("powell", 0, 1, 1.0, 100),
        ];
        let s = score_records(&recs, 0.7).unwrap();
        assert_eq!(s[0].score, 1.0);
        assert_eq!(s[1].score, 1.0);
        assert_eq!(s[2].score, 0.0);
    }

    #[test]
    fn improvement_formula() {
        let mut recs = Vec::new();
        for seed in 0..5 {
            let eb = 1.0 + seed as f64;
            recs.push(record("lotus", 2, seed, 1.272 * eb, 67));
            recs.push(record("powell", 0, seed, eb, 1000));
        }
        let s = improvement_summary(&recs, None).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0].expectation_pct - 27.2).abs() < 1e-9);
        assert!((s[0].iteration_pct - 93.3).abs() < 1e-9);
        assert_eq!(s[0].cells, 5);
    }

    #[test]
    fn improvement_against_identical_is_zero() {
        let mut recs = Vec::new();
        for seed in 0..4 {
            recs.push(record("lotus", 2, seed, 3.0 + seed as f64, 100 + seed as usize));
            recs.push(record("nelder-mead", 0, seed, 3.0 + seed as f64, 100 + seed as usize));
        }
        let s = improvement_summary(&recs, Some(2)).unwrap();
        assert_eq!(s[0].expectation_pct, 0.0);
        assert_eq!(s[0].iteration_pct, 0.0);
    }

    #[test]
    fn improvement_needs_shared_cells() {
        let recs = vec![record("lotus", 2, 1, 2.0, 50), record("powell", 0, 2, 5.0, 500)];
        assert!(improvement_summary(&recs, None).is_err());
        assert!(improvement_summary(&[record("powell", 0, 2, 5.0, 500)], None).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }

    proptest! {
        #[test]
        fn scores_in_unit_interval(group in proptest::collection::vec((-50.0f64..50.0, 1.0f64..5000.0), 1..12), alpha in 0.0f64..=1.0) {
            let s = score_group(&group, alpha).unwrap();
            for r in &s {
                prop_assert!((0.0..=1.0).contains(&r.score));
                prop_assert!((r.score - (alpha * r.e_norm + (1.0 - alpha) * r.i_norm)).abs() < 1e-12);
            }
        }
    }
}
