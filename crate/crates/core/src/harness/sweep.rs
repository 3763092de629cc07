//! Sweeps over (qubits, depth, density, seed) cells with a parallel worker
//! pool and an ordered, resumable result file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::DEFAULT_QUBIT_CAP;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::optim::{baseline_optimize, lotus_optimize, LotusInitConfig, Registry, RunSettings, DEFAULT_BUDGET};
use crate::seed::{derive_seed, stream};

use super::record::RunRecord;
use super::store::{append_records, read_records, write_csv};

/// Benchmark grid. Field names double as the JSON config keys; omitted keys
/// take the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub qubits: Vec<usize>,
    pub depths: Vec<usize>,
    pub densities: Vec<f64>,
    /// Fourier mode counts; one LOTUS run per entry and cell.
    pub modes: Vec<usize>,
    /// Instances per (qubits, density) pair.
    pub seeds: usize,
    pub base_seed: u64,
    /// Baseline method ids.
    pub optimizers: Vec<String>,
    /// Method driving the LOTUS restarts.
    pub lotus_method: String,
    /// Shots per evaluation; 0 = exact expectations.
    pub shots: u32,
    pub verify_shots: u32,
    pub budget: usize,
    pub tol: Option<f64>,
    pub lotus_init: LotusInitConfig,
    /// NDJSON result file. A CSV copy is written next to it on completion.
    pub output: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            qubits: vec![8, 12],
            depths: vec![4, 8, 16, 24],
            densities: vec![0.5, 0.75, 1.0],
            modes: vec![2, 3, 4],
            seeds: 5,
            base_seed: 0,
            optimizers: vec!["nelder-mead".into(), "powell".into(), "fd-lbfgs".into()],
            lotus_method: "nelder-mead".into(),
            shots: 1024,
            verify_shots: 8192,
            budget: DEFAULT_BUDGET,
            tol: None,
            lotus_init: LotusInitConfig::default(),
            output: None,
        }
    }
}

/// One grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub depth: usize,
    pub density: f64,
    pub seed_index: usize,
    pub instance_seed: u64,
    pub cell_seed: u64,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self, registry: &Registry) -> Result<()> {
        let empty = [
            ("qubits", self.qubits.is_empty()),
            ("depths", self.depths.is_empty()),
            ("densities", self.densities.is_empty()),
            ("modes", self.modes.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("{name} must not be empty")));
        }
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if let Some(n) = self.qubits.iter().find(|&&n| !(2..=DEFAULT_QUBIT_CAP).contains(&n)) {
            return Err(Error::Config(format!("qubit count {n} outside 2..={DEFAULT_QUBIT_CAP}")));
        }
        if self.depths.contains(&0) || self.modes.contains(&0) {
            return Err(Error::Config("depths and modes must be at least 1".into()));
        }
        if let Some(d) = self.densities.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return Err(Error::Config(format!("density {d} outside (0, 1]")));
        }
        for id in self.optimizers.iter().chain(std::iter::once(&self.lotus_method)) {
            registry.get(id)?;
        }
        if self.verify_shots == 0 {
            return Err(Error::Config("verify_shots must be at least 1".into()));
        }
        self.lotus_init.validate()
    }

    /// Runs per cell: one LOTUS run per mode count, then one per baseline.
    pub fn runs_per_cell(&self) -> usize {
        self.modes.len() + self.optimizers.len()
    }

    /// Seed of the instance shared by every depth and run at
    /// `(n, density, seed_index)`.
    pub fn instance_seed(&self, n: usize, density: f64, seed_index: usize) -> u64 {
        let s = derive_seed(self.base_seed, stream::INSTANCE + n as u64);
        derive_seed(derive_seed(s, density.to_bits()), seed_index as u64)
    }

    /// Cells in file order: qubits, then depth, then density, then seed.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n in &self.qubits {
            for &depth in &self.depths {
                for &density in &self.densities {
                    for seed_index in 0..self.seeds {
                        let instance_seed = self.instance_seed(n, density, seed_index);
                        out.push(Cell {
                            index: out.len(),
                            n,
                            depth,
                            density,
                            seed_index,
                            instance_seed,
                            cell_seed: derive_seed(instance_seed, depth as u64),
                        });
                    }
                }
            }
        }
        out
    }

    fn settings(&self, method: &str) -> RunSettings {
        RunSettings { method: method.into(), shots: self.shots, verify_shots: self.verify_shots, budget: self.budget, tol: self.tol }
    }

    /// Executes run `task` of `cell` (see [`SweepConfig::runs_per_cell`]).
    pub fn run_task(&self, cell: &Cell, task: usize, registry: &Registry) -> Result<RunRecord> {
        let instance = Instance::generate(cell.n, cell.density, cell.instance_seed)?;
        let seed = derive_seed(cell.cell_seed, stream::RUN + task as u64);
        let mut record = if let Some(&k) = self.modes.get(task) {
            let settings = self.settings(&self.lotus_method);
            lotus_optimize(&instance, cell.depth, k, &self.lotus_init, &settings, seed, registry)?.record
        } else {
            let method = &self.optimizers[task - self.modes.len()];
            baseline_optimize(&instance, cell.depth, &self.settings(method), seed, registry)?.record
        };
        record.cell = cell.index;
        Ok(record)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses one per available core.
    pub workers: Option<usize>,
    /// Continue from the resume marker next to the output file.
    pub resume: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Marker {
    completed_cells: usize,
    total_cells: usize,
}

fn marker_path(out: &Path) -> PathBuf {
    let mut s = OsString::from(out.as_os_str());
    s.push(".resume");
    PathBuf::from(s)
}

fn write_marker(path: &Path, completed: usize, total: usize) -> Result<()> {
    let tmp = path.with_extension("resume.tmp");
    let body = serde_json::to_vec(&Marker { completed_cells: completed, total_cells: total })?;
    fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Prepares the output file and returns the records already on disk together
/// with the first cell still to run.
fn open_output(out: &Path, total: usize, resume: bool) -> Result<(Vec<RunRecord>, usize)> {
    let marker = marker_path(out);
    if resume && !marker.exists() && out.exists() {
        return Err(Error::Config(format!("{} has no resume marker; the sweep already finished", out.display())));
    }
    if !resume || !marker.exists() {
        fs::write(out, b"").map_err(|e| Error::io(out, e))?;
        write_marker(&marker, 0, total)?;
        return Ok((Vec::new(), 0));
    }
    let text = fs::read_to_string(&marker).map_err(|e| Error::io(&marker, e))?;
    let m: Marker = serde_json::from_str(&text)?;
    if m.total_cells != total {
        return Err(Error::Config(format!("resume marker expects {} cells, config has {total}", m.total_cells)));
    }
    // Lines past the last completed cell are from an interrupted flush.
    let kept: Vec<RunRecord> = match read_records(out) {
        Ok(r) => r.into_iter().filter(|r| r.cell < m.completed_cells).collect(),
        Err(Error::Io { .. }) => Vec::new(),
        Err(_) => read_prefix(out, m.completed_cells)?,
    };
    fs::write(out, b"").map_err(|e| Error::io(out, e))?;
    append_records(out, &kept)?;
    Ok((kept, m.completed_cells))
}

/// Parses lines until the first malformed one.
fn read_prefix(out: &Path, completed: usize) -> Result<Vec<RunRecord>> {
    let text = fs::read_to_string(out).map_err(|e| Error::io(out, e))?;
    Ok(text
        .lines()
        .map_while(|l| serde_json::from_str::<RunRecord>(l).ok())
        .filter(|r| r.cell < completed)
        .collect())
}

/// [`run_sweep_with`] using every core and the built-in optimizers.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<RunRecord>> {
    run_sweep_with(cfg, &SweepOptions::default(), &Registry::default())
}

/// Runs every cell of `cfg` and returns the records in cell order, runs
/// within a cell ordered as LOTUS per mode count, then baselines.
///
/// With an output path, completed cells are appended in order as soon as all
/// earlier cells are done and a `<output>.resume` marker tracks progress. The
/// marker is removed on success; after a failure or interruption the sweep can
/// continue with `resume`. Results do not depend on the worker count.
pub fn run_sweep_with(cfg: &SweepConfig, opts: &SweepOptions, registry: &Registry) -> Result<Vec<RunRecord>> {
    cfg.validate(registry)?;
    let cells = cfg.cells();
    let total = cells.len();
    let per_cell = cfg.runs_per_cell();

    let (mut records, first) = match &cfg.output {
        Some(out) => open_output(out, total, opts.resume)?,
        None if opts.resume => return Err(Error::Config("resume needs an output path".into())),
        None => (Vec::new(), 0),
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = opts.workers {
        if w == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;

    let tasks: Vec<(usize, usize)> = (first..total).flat_map(|c| (0..per_cell).map(move |t| (c, t))).collect();
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, usize, Result<RunRecord>)>();

    let mut failure = None;
    std::thread::scope(|scope| {
        let cells = &cells;
        let abort = &abort;
        scope.spawn(move || {
            pool.install(|| {
                tasks.par_iter().for_each_with(tx, |tx, &(c, t)| {
                    if abort.load(Ordering::Relaxed) {
                        return;
                    }
                    let _ = tx.send((c, t, cfg.run_task(&cells[c], t, registry)));
                });
            });
        });

        let mut pending: BTreeMap<usize, Vec<Option<RunRecord>>> = BTreeMap::new();
        let mut next = first;
        for (c, t, result) in rx {
            match result {
                Ok(r) => pending.entry(c).or_insert_with(|| vec![None; per_cell])[t] = Some(r),
                Err(e) => {
                    abort.store(true, Ordering::Relaxed);
                    failure.get_or_insert(e);
                    continue;
                }
            }
            if failure.is_some() {
                continue;
            }
            while pending.get(&next).is_some_and(|v| v.iter().all(Option::is_some)) {
                let done: Vec<RunRecord> = pending.remove(&next).unwrap().into_iter().flatten().collect();
                if let Some(out) = &cfg.output {
                    let flushed = append_records(out, &done).and_then(|_| write_marker(&marker_path(out), next + 1, total));
                    if let Err(e) = flushed {
                        abort.store(true, Ordering::Relaxed);
                        failure = Some(e);
                        break;
                    }
                }
                records.extend(done);
                next += 1;
            }
        }
    });

    if let Some(e) = failure {
        return Err(e);
    }
    if let Some(out) = &cfg.output {
        let csv_path = out.with_extension("csv");
        let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        write_csv(std::io::BufWriter::new(file), &records)?;
        let marker = marker_path(out);
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    Ok(records)
}
