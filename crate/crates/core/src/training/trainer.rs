use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adam::{AdamState, ParamSlot};
use crate::data::MiniTrack;
use crate::error::{Error, Result};
use crate::model::{loss_and_gradients, make_batch, ModelParams, Sample, TENSOR_NAMES};
use crate::training::config::{lr_schedule, TrainConfig};

/// Means over one epoch's samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub loss_auto_enc: f64,
    pub loss_traj: f64,
    pub lr: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

pub const HISTORY_HEADER: &str = "epoch,loss,loss_auto_enc,loss_traj,lr,seconds";

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }

    /// Equality of everything except wall-clock time.
    pub fn same_run(&self, other: &TrainHistory) -> bool {
        self.len() == other.len()
            && self.epochs.iter().zip(&other.epochs).all(|(a, b)| {
                a.epoch == b.epoch
                    && a.loss.to_bits() == b.loss.to_bits()
                    && a.loss_auto_enc.to_bits() == b.loss_auto_enc.to_bits()
                    && a.loss_traj.to_bits() == b.loss_traj.to_bits()
                    && a.lr.to_bits() == b.lr.to_bits()
            })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{HISTORY_HEADER}")?;
        for e in &self.epochs {
            writeln!(out, "{},{},{},{},{},{:.3}", e.epoch, e.loss, e.loss_auto_enc, e.loss_traj, e.lr, e.seconds)?;
        }
        Ok(())
    }
}

/// Builds supervised samples, checking every mini-track has `k + p` boxes.
pub fn samples_from_minitracks(minitracks: &[MiniTrack], k: usize, p: usize) -> Result<Vec<Sample>> {
    minitracks
        .iter()
        .map(|m| {
            if m.boxes.len() != k + p {
                return Err(Error::Input(format!(
                    "mini-track {}/{} at frame {} has {} boxes, expected {}",
                    m.video_id,
                    m.track_id,
                    m.start_frame,
                    m.boxes.len(),
                    k + p
                )));
            }
            m.to_sample(k)
        })
        .collect()
}

pub fn train(cfg: &TrainConfig, minitracks: &[MiniTrack]) -> Result<(ModelParams<f64>, TrainHistory)> {
    train_with(cfg, minitracks, |_, _| Ok(()))
}

/// Like [`train`], calling `on_epoch` after every completed epoch (used for
/// checkpoints).
pub fn train_with<F>(cfg: &TrainConfig, minitracks: &[MiniTrack], on_epoch: F) -> Result<(ModelParams<f64>, TrainHistory)>
where
    F: FnMut(&EpochStats, &ModelParams<f64>) -> Result<()>,
{
    cfg.validate()?;
    if minitracks.is_empty() {
        return Err(Error::Config("no mini-tracks to train on".into()));
    }
    let samples = samples_from_minitracks(minitracks, cfg.k, cfg.p)?;
    train_samples(cfg, &samples, on_epoch)
}

pub fn train_samples<F>(cfg: &TrainConfig, samples: &[Sample], mut on_epoch: F) -> Result<(ModelParams<f64>, TrainHistory)>
where
    F: FnMut(&EpochStats, &ModelParams<f64>) -> Result<()>,
{
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Config("no samples to train on".into()));
    }
    let weights = cfg.loss_weights()?;
    let mut params = ModelParams::<f64>::init(cfg.dims(), cfg.seed);
    let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let mut adam = AdamState::<f64>::new(cfg.adam, &shapes);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5348_5546_464c_4521);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let lr = lr_schedule(epoch, cfg);
        order.shuffle(&mut rng);
        let (mut total, mut auto_enc, mut traj) = (0.0, 0.0, 0.0);

        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            let (input, targets) = make_batch::<f64>(&batch)?;
            let (loss, mut grads) = loss_and_gradients(&params, &input, &targets, &weights)?;
            if !loss.total.is_finite() {
                return Err(Error::NonFinite(format!("loss is {} at epoch {epoch}, batch {bi}", loss.total)));
            }
            if let Some(max) = cfg.clip_norm {
                clip_global_norm(&mut grads, max);
            }
            let grad_views = grads.tensors();
            let mut slots: Vec<ParamSlot<'_, f64>> = params
                .tensors_mut()
                .into_iter()
                .zip(grad_views)
                .zip(TENSOR_NAMES)
                .map(|((value, grad), name)| ParamSlot { name, value, grad })
                .collect();
            adam.step(&mut slots, lr).map_err(|e| match e {
                Error::NonFinite(m) => Error::NonFinite(format!("{m} at epoch {epoch}, batch {bi}")),
                other => other,
            })?;

            let n = chunk.len() as f64;
            total += loss.total * n;
            auto_enc += loss.auto_enc * n;
            traj += loss.traj * n;
        }

        let n = samples.len() as f64;
        let stats = EpochStats {
            epoch,
            loss: total / n,
            loss_auto_enc: auto_enc / n,
            loss_traj: traj / n,
            lr,
            seconds: started.elapsed().as_secs_f64(),
        };
        history.epochs.push(stats);
        on_epoch(&stats, &params)?;
    }
    Ok((params, history))
}

/// Rescales all gradients so their joint L2 norm is at most `max`.
pub fn clip_global_norm(grads: &mut ModelParams<f64>, max: f64) -> f64 {
    let norm = grads.tensors().iter().flat_map(|t| t.iter()).map(|g| g * g).sum::<f64>().sqrt();
    if norm > max {
        let s = max / norm;
        for t in grads.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= s);
        }
    }
    norm
}
