//! `trajcast` command-line tool.
//!
//! Every command resolves a flat `key = value` configuration (built-in
//! defaults, then `--config FILE`, then flags and `--set KEY=VALUE`) and
//! writes it next to its output so the run can be repeated from the echo.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trajcast_core::data::SynthSpec;
use trajcast_core::kv::KvMap;
use trajcast_core::training::TrainConfig;
use trajcast_core::Error;

use settings::{data_defaults, resolve, Overrides};

#[derive(Parser)]
#[command(name = "trajcast", version, about = "Bounding-box pedestrian trajectory forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic tracks as a track CSV.
    Synth(SynthArgs),
    /// Train a model (optionally with k-fold cross-validation).
    Train(TrainArgs),
    /// Predict future boxes for the last observed frames of each track.
    Predict(PredictArgs),
    /// Score a model or a baseline on mini-tracks.
    Eval(EvalArgs),
    /// Measure inference throughput in trajectories per second.
    Bench(BenchArgs),
    /// Train one model per loss mode and score several horizons.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override any configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct DataArgs {
    /// Track CSV files; repeatable.
    #[arg(long)]
    data: Vec<PathBuf>,
    /// Box columns: center (cx,cy,w,h) or corner (x1,y1,x2,y2).
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    frame_rate: Option<f64>,
    /// Keep every n-th frame.
    #[arg(long)]
    subsample: Option<usize>,
}

impl DataArgs {
    fn push(&self, o: &mut Overrides) {
        o.paths("data", &self.data)
            .opt("format", &self.format)
            .opt("frame_rate", &self.frame_rate)
            .opt("subsample", &self.subsample);
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Observed frames.
    #[arg(long)]
    k: Option<usize>,
    /// Predicted frames.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    latent: Option<usize>,
    /// full or hidden-only.
    #[arg(long)]
    decoder_init: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ModelArgs {
    fn push(&self, o: &mut Overrides) {
        o.opt("k", &self.k)
            .opt("p", &self.p)
            .opt("hidden", &self.hidden)
            .opt("latent", &self.latent)
            .opt("decoder_init", &self.decoder_init)
            .opt("seed", &self.seed);
    }
}

#[derive(Args)]
struct OptimArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    halve_every: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// traj-del, traj or traj+auto-enc.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    clip_norm: Option<f64>,
    /// Mini-track sliding-window stride.
    #[arg(long)]
    stride: Option<usize>,
}

impl OptimArgs {
    fn push(&self, o: &mut Overrides) {
        o.opt("epochs", &self.epochs)
            .opt("batch_size", &self.batch_size)
            .opt("lr", &self.lr)
            .opt("halve_every", &self.halve_every)
            .opt("alpha", &self.alpha)
            .opt("beta", &self.beta)
            .opt("mode", &self.mode)
            .opt("clip_norm", &self.clip_norm)
            .opt("stride", &self.stride);
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Output CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    count: Option<usize>,
    /// constant-velocity, constant-acceleration, sinusoidal or stop-and-go.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    length: Option<usize>,
    /// Gaussian pixel noise standard deviation.
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    optim: OptimArgs,
    /// Run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cross-validation folds; 0 trains a single model on all data.
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Output CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Score a baseline instead of a model: constant-velocity,
    /// constant-acceleration or stationary.
    #[arg(long)]
    baseline: Option<String>,
    /// Also score every baseline.
    #[arg(long)]
    baselines: bool,
    /// Observed frames for a baseline.
    #[arg(long)]
    k: Option<usize>,
    /// Horizon for a baseline.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    /// Extra truncated horizons, e.g. 15,30,45.
    #[arg(long)]
    horizons: Option<String>,
    /// Per-step mean displacement CSV.
    #[arg(long)]
    per_step: Option<PathBuf>,
    /// Metrics CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    /// Benchmark a trained model instead of a freshly initialized one.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Thread counts, e.g. 1,2,4.
    #[arg(long)]
    threads: Option<String>,
    /// Seconds per thread count.
    #[arg(long)]
    duration: Option<f64>,
    /// Benchmark CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    optim: OptimArgs,
    #[arg(long)]
    folds: Option<usize>,
    /// Fold held out for scoring.
    #[arg(long)]
    test_fold: Option<usize>,
    #[arg(long)]
    horizons: Option<String>,
    /// Loss modes, e.g. traj-del,traj.
    #[arg(long)]
    modes: Option<String>,
    /// Train a separate model per horizon instead of truncating.
    #[arg(long)]
    retrain_per_horizon: bool,
    /// Table CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn path_opt(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn train_defaults() -> KvMap {
    let mut kv = TrainConfig::default().to_kv();
    data_defaults(&mut kv);
    kv.set("stride", 30);
    kv
}

fn run(cli: Cli) -> trajcast_core::Result<()> {
    let mut o = Overrides::default();
    match cli.command {
        Command::Synth(a) => {
            o.pairs(&a.common.set)?
                .opt("out", &path_opt(&a.out))
                .opt("count", &a.count)
                .opt("kind", &a.kind)
                .opt("length", &a.length)
                .opt("noise_std", &a.noise_std)
                .opt("seed", &a.seed);
            let mut d = SynthSpec::default().to_kv();
            d.set("count", 20);
            let kv = resolve("synth", d, a.common.config.as_deref(), &o)?;
            commands::synth(&kv)
        }
        Command::Train(a) => {
            a.data.push(&mut o);
            a.model.push(&mut o);
            a.optim.push(&mut o);
            o.opt("out", &path_opt(&a.out)).opt("folds", &a.folds).pairs(&a.common.set)?;
            let mut d = train_defaults();
            d.set("folds", 0);
            let kv = resolve("train", d, a.common.config.as_deref(), &o)?;
            commands::train(&kv)
        }
        Command::Predict(a) => {
            a.data.push(&mut o);
            o.opt("weights", &path_opt(&a.weights)).opt("out", &path_opt(&a.out)).pairs(&a.common.set)?;
            let mut d = KvMap::new();
            data_defaults(&mut d);
            let kv = resolve("predict", d, a.common.config.as_deref(), &o)?;
            commands::predict_cmd(&kv)
        }
        Command::Eval(a) => {
            a.data.push(&mut o);
            o.opt("weights", &path_opt(&a.weights))
                .opt("baseline", &a.baseline)
                .flag("baselines", a.baselines)
                .opt("k", &a.k)
                .opt("p", &a.p)
                .opt("stride", &a.stride)
                .opt("horizons", &a.horizons)
                .opt("per_step", &path_opt(&a.per_step))
                .opt("out", &path_opt(&a.out))
                .pairs(&a.common.set)?;
            let mut d = KvMap::new();
            data_defaults(&mut d);
            d.set("stride", 30);
            d.set("baselines", false);
            let kv = resolve("eval", d, a.common.config.as_deref(), &o)?;
            commands::eval(&kv)
        }
        Command::Bench(a) => {
            a.model.push(&mut o);
            o.opt("weights", &path_opt(&a.weights))
                .opt("threads", &a.threads)
                .opt("duration", &a.duration)
                .opt("out", &path_opt(&a.out))
                .pairs(&a.common.set)?;
            let mut d = KvMap::new();
            let t = TrainConfig::default();
            for (key, v) in [("k", t.k), ("p", t.p), ("hidden", t.hidden), ("latent", t.latent)] {
                d.set(key, v);
            }
            d.set("decoder_init", t.decoder_init.as_str());
            d.set("seed", 0);
            d.set("threads", 1);
            d.set("duration", 5);
            let kv = resolve("bench", d, a.common.config.as_deref(), &o)?;
            commands::bench(&kv)
        }
        Command::Ablate(a) => {
            a.data.push(&mut o);
            a.model.push(&mut o);
            a.optim.push(&mut o);
            o.opt("folds", &a.folds)
                .opt("test_fold", &a.test_fold)
                .opt("horizons", &a.horizons)
                .opt("modes", &a.modes)
                .flag("retrain_per_horizon", a.retrain_per_horizon)
                .opt("out", &path_opt(&a.out))
                .pairs(&a.common.set)?;
            let mut d = train_defaults();
            d.set("folds", 3);
            d.set("test_fold", 0);
            d.set("horizons", "15,30,45,60");
            d.set("modes", "traj-del,traj,traj+auto-enc");
            d.set("retrain_per_horizon", false);
            let kv = resolve("ablate", d, a.common.config.as_deref(), &o)?;
            commands::ablate(&kv)
        }
    }
}

/// 2 configuration, 3 I/O and file format, 4 numeric failure, 1 anything else.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io(_) | Error::Parse { .. } | Error::Format { .. } | Error::Integrity { .. } => 3,
        Error::NonFinite(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
