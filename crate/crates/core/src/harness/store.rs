//! Newline-delimited JSON result files and their CSV views.
//!
//! Floats are written in the shortest decimal form that parses back to the
//! same bits, so a reload reproduces every record exactly.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

use super::record::RunRecord;
use super::score::ScoreRecord;

/// Appends one JSON line per record and syncs the file.
pub fn append_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    let file = out.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    file.sync_data().map_err(|e| Error::io(path, e))
}

/// Reads every record of a result file. Blank lines are skipped; a malformed
/// line is an error naming its line number.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), no + 1)))?;
        out.push(record);
    }
    Ok(out)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    cell: usize,
    instance_seed: u64,
    seed: u64,
    arm: String,
    optimizer: &'a str,
    method: &'a str,
    n_qubits: usize,
    depth: usize,
    p_graph: f64,
    k: usize,
    shots: u32,
    expectation: f64,
    expectation_stderr: f64,
    expectation_exact: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
    best_cut: String,
    best_cut_value: f64,
    approx_ratio: Option<f64>,
    wall_time: f64,
}

impl<'a> From<&'a RunRecord> for CsvRow<'a> {
    fn from(r: &'a RunRecord) -> Self {
        Self {
            cell: r.cell,
            instance_seed: r.instance_seed,
            seed: r.seed,
            arm: r.arm(),
            optimizer: &r.optimizer,
            method: &r.method,
            n_qubits: r.n_qubits,
            depth: r.depth,
            p_graph: r.p_graph,
            k: r.k,
            shots: r.shots,
            expectation: r.expectation,
            expectation_stderr: r.expectation_stderr,
            expectation_exact: r.expectation_exact,
            iterations: r.iterations,
            evaluations: r.evaluations,
            converged: r.converged,
            best_cut: r.best_cut.to_string(),
            best_cut_value: r.best_cut.cut_value,
            approx_ratio: r.approx_ratio,
            wall_time: r.wall_time,
        }
    }
}

/// Tidy CSV, one row per record.
pub fn write_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRow::from(r)).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))
}

#[derive(Serialize)]
struct ScoreRow {
    cell: usize,
    instance_seed: u64,
    arm: String,
    n_qubits: usize,
    depth: usize,
    p_graph: f64,
    expectation: f64,
    evaluations: usize,
    e_norm: f64,
    i_norm: f64,
    score: f64,
    alpha: f64,
}

/// Records side by side with their scores.
pub fn write_score_csv<W: Write>(out: W, records: &[RunRecord], scores: &[ScoreRecord]) -> Result<()> {
    if records.len() != scores.len() {
        return Err(Error::LengthMismatch { expected: records.len(), got: scores.len() });
    }
    let mut w = csv::Writer::from_writer(out);
    for (r, s) in records.iter().zip(scores) {
        let row = ScoreRow {
            cell: r.cell,
            instance_seed: r.instance_seed,
            arm: r.arm(),
            n_qubits: r.n_qubits,
            depth: r.depth,
            p_graph: r.p_graph,
            expectation: r.expectation,
            evaluations: r.evaluations,
            e_norm: s.e_norm,
            i_norm: s.i_norm,
            score: s.score,
            alpha: s.alpha,
        };
        w.serialize(row).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::score::score_records;
    use crate::instance::CutResult;

    fn sample(i: u64) -> RunRecord {
        RunRecord {
            cell: i as usize,
            instance_seed: 0xdead_beef ^ i,
            seed: u64::MAX - i,
            optimizer: if i.is_multiple_of(2) { "lotus".into() } else { "powell".into() },
            method: "nelder-mead".into(),
            n_qubits: 8,
            depth: 8,
            p_graph: 0.75,
            k: if i.is_multiple_of(2) { 2 } else { 0 },
            shots: 1024,
            expectation: 0.1 + 1.0 / 3.0 * i as f64,
            expectation_stderr: 1e-17 * (i + 1) as f64,
            expectation_exact: std::f64::consts::PI * i as f64,
            iterations: 7,
            evaluations: 100 + i as usize,
            converged: i.is_multiple_of(3),
            best_cut: CutResult { n: 8, bits: 0b1010_1100, cut_value: 2.0 / 7.0 },
            approx_ratio: if i == 1 { None } else { Some(0.987_654_321_012_345_6) },
            wall_time: 0.25,
        }
    }

    #[test]
    fn ndjson_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.ndjson");
        let recs: Vec<RunRecord> = (0..6).map(sample).collect();
        append_records(&path, &recs[..2]).unwrap();
        append_records(&path, &recs[2..]).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(back, recs);
        for (a, b) in back.iter().zip(&recs) {
            assert_eq!(a.expectation.to_bits(), b.expectation.to_bits());
        }
        assert_eq!(score_records(&back, 0.7).unwrap(), score_records(&recs, 0.7).unwrap());
    }

    #[test]
    fn malformed_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ndjson");
        append_records(&path, &[sample(0)]).unwrap();
        std::fs::write(&path, std::fs::read_to_string(&path).unwrap() + "{not json\n").unwrap();
        let err = read_records(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let recs: Vec<RunRecord> = (0..3).map(sample).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("cell,instance_seed,seed,arm,"));
        assert!(lines[1].contains("lotus-k2"));

        let scores = score_records(&recs, 0.7).unwrap();
        let mut buf = Vec::new();
        write_score_csv(&mut buf, &recs, &scores).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().next().unwrap().ends_with("e_norm,i_norm,score,alpha"));
        assert!(write_score_csv(Vec::new(), &recs, &scores[..1]).is_err());
    }
}
