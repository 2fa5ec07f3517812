//! Closed-loop inference throughput in single precision.

use std::io::Write;
use std::sync::Barrier;
use std::time::{Duration, Instant};

use crate::data::{synth_tracks, SynthSpec};
use crate::error::{Error, Result};
use crate::model::{build_features, predict_window, FeatureWindow, ModelParams};

/// Reference throughput points (threads label, trajectories per second).
pub const REFERENCE_TPS: [(&str, f64); 4] = [("1", 38.91), ("2", 54.05), ("4", 65.87), (">4", 78.06)];

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub threads: usize,
    pub trajectories_per_second: f64,
    pub per_thread_tps: Vec<f64>,
    /// `trajectories_per_second * p`.
    pub equivalent_fps: f64,
    pub predictions: u64,
    pub seconds: f64,
    pub k: usize,
    pub p: usize,
    pub hidden: usize,
    pub latent: usize,
}

/// Feature windows of varied synthetic tracks, generated outside the timed
/// region.
pub fn bench_windows(k: usize, count: usize, seed: u64) -> Result<Vec<FeatureWindow>> {
    let spec = SynthSpec { length: k, start_jitter: 100.0, velocity_jitter: 2.0, noise_std: 1.0, seed, ..Default::default() };
    synth_tracks(&spec, count)?.iter().map(|t| build_features(&t.boxes, None)).collect()
}

/// Runs `predict` in a loop on `threads` threads over shared parameters until
/// `duration` elapses.
pub fn benchmark_tps(params: &ModelParams<f32>, threads: usize, duration: Duration, seed: u64) -> Result<BenchReport> {
    if threads == 0 || duration.is_zero() {
        return Err(Error::Config("benchmark needs at least one thread and a positive duration".into()));
    }
    let windows = bench_windows(params.dims.k, 64, seed)?;
    let barrier = Barrier::new(threads + 1);
    let (counts, seconds) = std::thread::scope(|s| -> Result<(Vec<(u64, f64)>, f64)> {
        let handles: Vec<_> = (0..threads)
            .map(|i| {
                let (windows, barrier) = (&windows, &barrier);
                s.spawn(move || -> Result<(u64, f64)> {
                    barrier.wait();
                    let start = Instant::now();
                    let mut n = 0u64;
                    let mut j = i;
                    while start.elapsed() < duration {
                        std::hint::black_box(predict_window(params, &windows[j % windows.len()])?);
                        n += 1;
                        j += threads;
                    }
                    Ok((n, start.elapsed().as_secs_f64()))
                })
            })
            .collect();
        barrier.wait();
        let start = Instant::now();
        let counts = handles
            .into_iter()
            .map(|h| h.join().expect("benchmark thread panicked"))
            .collect::<Result<Vec<_>>>()?;
        Ok((counts, start.elapsed().as_secs_f64()))
    })?;
    let predictions: u64 = counts.iter().map(|c| c.0).sum();
    let tps = predictions as f64 / seconds;
    Ok(BenchReport {
        threads,
        trajectories_per_second: tps,
        per_thread_tps: counts.iter().map(|(n, s)| *n as f64 / s).collect(),
        equivalent_fps: tps * params.dims.p as f64,
        predictions,
        seconds,
        k: params.dims.k,
        p: params.dims.p,
        hidden: params.dims.hidden,
        latent: params.dims.latent,
    })
}

pub const BENCH_HEADER: &str = "threads,tps,equivalent_fps,predictions,seconds,k,p,hidden,latent,per_thread_tps";

pub fn write_bench_csv<W: Write>(mut out: W, reports: &[BenchReport]) -> Result<()> {
    writeln!(out, "{BENCH_HEADER}")?;
    for r in reports {
        let per: Vec<String> = r.per_thread_tps.iter().map(|v| format!("{v:.2}")).collect();
        writeln!(
            out,
            "{},{:.3},{:.1},{},{:.3},{},{},{},{},{}",
            r.threads,
            r.trajectories_per_second,
            r.equivalent_fps,
            r.predictions,
            r.seconds,
            r.k,
            r.p,
            r.hidden,
            r.latent,
            per.join(";")
        )?;
    }
    Ok(())
}
