//! Displacement metrics, baselines, evaluation over mini-tracks, the
//! throughput benchmark and the loss-mode ablation harness.

pub mod ablation;
pub mod bench;
pub mod evaluate;
pub mod metrics;
pub mod predictor;

pub use ablation::{ablation_run, AblationCell, AblationTable, DEFAULT_HORIZONS};
pub use bench::{bench_windows, benchmark_tps, write_bench_csv, BenchReport, BENCH_HEADER, REFERENCE_TPS};
pub use evaluate::{evaluate, CrossValidationReport};
pub use metrics::{
    ade, displacements, fde, fde_at, write_metrics_csv, write_per_step_csv, MetricReport, METRICS_HEADER,
};
pub use predictor::{baseline_predict, Baseline, BaselineKind, Predictor};
