//! Benchmark protocol: sweeps, scoring, significance tests, result files,
//! depth transfer and the invariant suite.

mod record;
mod score;
mod stats;
mod store;
mod suite;
mod sweep;
mod transfer;

pub use record::{GroupKey, RunRecord};
pub use score::{improvement_summary, median, score_group, score_records, Improvement, ScoreRecord, DEFAULT_ALPHA};
pub use stats::{significance_matrix, wilcoxon_signed_rank, SignificanceMatrix, MIN_PAIRS};
pub use store::{append_records, read_records, write_csv, write_score_csv};
pub use suite::{invariant_suite, CheckResult, SuiteOptions, SuiteReport};
pub use sweep::{run_sweep, run_sweep_with, Cell, SweepConfig, SweepOptions};
pub use transfer::{depth_gaps, depth_transfer_experiment, depth_values, DepthGap, HotStart, TransferOptions, TransferReport};
