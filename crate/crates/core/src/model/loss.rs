//! Composite L1 objective and the per-sample training examples it consumes.

use crate::error::{Error, Result};
use crate::model::features::{build_features, reconstruction_target, BBox, FeatureWindow};
use crate::model::network::{
    backward_batch, concat_backward, forward_batch, BatchInput, ForwardOutput, HeadGrads, ModelParams, INPUT_DIM,
    OUTPUT_DIM,
};
use crate::ops::sign0;
use crate::tensor::{Real, Tensor2};

/// Which heads receive supervision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossMode {
    /// Change vectors only; no auto-encoder, no supervision through the
    /// concatenation layer.
    TrajDel,
    /// Boxes after the concatenation layer; no auto-encoder.
    Traj,
    /// Boxes after the concatenation layer plus reconstruction.
    TrajAutoEnc,
}

impl LossMode {
    pub const ALL: [LossMode; 3] = [LossMode::TrajDel, LossMode::Traj, LossMode::TrajAutoEnc];

    pub fn as_str(self) -> &'static str {
        match self {
            LossMode::TrajDel => "traj-del",
            LossMode::Traj => "traj",
            LossMode::TrajAutoEnc => "traj+auto-enc",
        }
    }

    pub fn uses_reconstruction(self) -> bool {
        self == LossMode::TrajAutoEnc
    }
}

impl std::fmt::Display for LossMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "traj-del" => Ok(LossMode::TrajDel),
            "traj" => Ok(LossMode::Traj),
            "traj+auto-enc" | "full" => Ok(LossMode::TrajAutoEnc),
            _ => Err(Error::Config(format!("unknown loss mode `{s}` (traj-del, traj, traj+auto-enc)"))),
        }
    }
}

/// `alpha` scales the reconstruction term, `beta` the trajectory term (the
/// change-vector term in [`LossMode::TrajDel`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub mode: LossMode,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64, mode: LossMode) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Config(format!("loss weights must be non-negative, got alpha={alpha} beta={beta}")));
        }
        Ok(Self { alpha, beta, mode })
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 2.0, mode: LossMode::TrajAutoEnc }
    }
}

/// One supervised example: observed window plus ground-truth future.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub window: FeatureWindow,
    /// Ground-truth future boxes `(cx, cy, w, h)`, `p` rows.
    pub future: Vec<[f64; 4]>,
}

impl Sample {
    pub fn new(past: &[BBox], predecessor: Option<&BBox>, future: &[BBox]) -> Result<Self> {
        let window = build_features(past, predecessor)?;
        if future.is_empty() {
            return Err(Error::Empty("future boxes"));
        }
        for b in future {
            b.validate()?;
        }
        Ok(Self { window, future: future.iter().map(BBox::coords).collect() })
    }

    pub fn anchor(&self) -> [f64; 4] {
        self.window.anchor().expect("non-empty window")
    }

    /// Ground-truth change vectors, the first relative to the anchor.
    pub fn future_deltas(&self) -> Vec<[f64; 4]> {
        let mut prev = self.anchor();
        self.future
            .iter()
            .map(|o| {
                let d = [o[0] - prev[0], o[1] - prev[1], o[2] - prev[2], o[3] - prev[3]];
                prev = *o;
                d
            })
            .collect()
    }
}

/// Targets for a batch, time-major like the network outputs.
#[derive(Clone, Debug)]
pub struct BatchTargets<T> {
    /// `k` tensors of `B x 8`: reversed window with negated change terms.
    pub reconstruction: Vec<Tensor2<T>>,
    /// `p` tensors of `B x 4`.
    pub boxes: Vec<Tensor2<T>>,
    /// `p` tensors of `B x 4`.
    pub deltas: Vec<Tensor2<T>>,
}

fn time_major<T: Real, const N: usize>(per_sample: &[Vec<[f64; N]>]) -> Result<Vec<Tensor2<T>>> {
    let b = per_sample.len();
    let len = per_sample[0].len();
    (0..len)
        .map(|t| {
            let mut data = Vec::with_capacity(b * N);
            for s in per_sample {
                data.extend(s[t].iter().map(|v| T::from_f64(*v)));
            }
            Tensor2::from_vec(b, N, data)
        })
        .collect()
}

/// Stacks samples into batch tensors. All samples must share `k` and `p`.
pub fn make_batch<T: Real>(samples: &[&Sample]) -> Result<(BatchInput<T>, BatchTargets<T>)> {
    let first = samples.first().ok_or(Error::Empty("batch"))?;
    let (k, p) = (first.window.len(), first.future.len());
    for s in samples {
        if s.window.len() != k || s.future.len() != p {
            return Err(Error::dimension(
                "make_batch",
                format!("k={k} p={p}"),
                format!("k={} p={}", s.window.len(), s.future.len()),
            ));
        }
    }
    let windows: Vec<Vec<[f64; INPUT_DIM]>> = samples.iter().map(|s| s.window.rows().to_vec()).collect();
    let recon: Vec<Vec<[f64; INPUT_DIM]>> =
        samples.iter().map(|s| reconstruction_target(&s.window).rows().to_vec()).collect();
    let anchors: Vec<Vec<[f64; OUTPUT_DIM]>> = samples.iter().map(|s| vec![s.anchor()]).collect();
    let futures: Vec<Vec<[f64; OUTPUT_DIM]>> = samples.iter().map(|s| s.future.clone()).collect();
    let deltas: Vec<Vec<[f64; OUTPUT_DIM]>> = samples.iter().map(|s| s.future_deltas()).collect();
    let input = BatchInput { steps: time_major(&windows)?, anchors: time_major(&anchors)?.remove(0) };
    let targets = BatchTargets {
        reconstruction: time_major(&recon)?,
        boxes: time_major(&futures)?,
        deltas: time_major(&deltas)?,
    };
    Ok((input, targets))
}

/// Batch-mean loss values.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    /// Reconstruction term before weighting (0 when inactive).
    pub auto_enc: f64,
    /// Supervised trajectory term before weighting: boxes, or change vectors in
    /// `traj-del` mode.
    pub traj: f64,
}

/// Sum over all steps of `|pred - target|` and the per-element gradient
/// `scale * sign(pred - target)`.
fn l1_terms<T: Real>(pred: &[Tensor2<T>], target: &[Tensor2<T>], scale: T) -> Result<(f64, Vec<Tensor2<T>>)> {
    if pred.len() != target.len() {
        return Err(Error::dimension("l1", format!("{} steps", target.len()), format!("{} steps", pred.len())));
    }
    let mut sum = 0.0;
    let mut grads = Vec::with_capacity(pred.len());
    for (p, t) in pred.iter().zip(target) {
        if p.shape() != t.shape() {
            return Err(Error::dimension("l1", t.shape_str(), p.shape_str()));
        }
        let mut g = Tensor2::zeros(p.rows(), p.cols());
        for ((gv, pv), tv) in g.as_mut_slice().iter_mut().zip(p.as_slice()).zip(t.as_slice()) {
            let r = *pv - *tv;
            sum += r.abs().as_f64();
            *gv = scale * sign0(r);
        }
        grads.push(g);
    }
    Ok((sum, grads))
}

/// Weighted objective over a batch and its gradients on the network heads.
///
/// Each per-sample term is a mean absolute error (`k x 8` elements for the
/// reconstruction, `p x 4` for the trajectory); the batch value is the mean
/// of per-sample objectives.
pub fn composite_loss<T: Real>(
    output: &ForwardOutput<T>,
    targets: &BatchTargets<T>,
    weights: &LossWeights,
) -> Result<(LossBreakdown, HeadGrads<T>)> {
    let b = output.latent.rows() as f64;
    let p = output.deltas.len() as f64;
    let k = targets.reconstruction.len() as f64;
    let traj_norm = b * p * OUTPUT_DIM as f64;

    let (traj_sum, delta_grads) = match weights.mode {
        LossMode::TrajDel => {
            l1_terms(&output.deltas, &targets.deltas, T::from_f64(weights.beta / traj_norm))?
        }
        LossMode::Traj | LossMode::TrajAutoEnc => {
            let (s, box_grads) = l1_terms(&output.boxes, &targets.boxes, T::from_f64(weights.beta / traj_norm))?;
            (s, concat_backward(&box_grads))
        }
    };
    let traj = traj_sum / traj_norm;

    let (auto_enc, recon_grads) = if weights.mode.uses_reconstruction() {
        let recon = output
            .reconstruction
            .as_ref()
            .ok_or_else(|| Error::Config("traj+auto-enc mode needs the reconstruction head".into()))?;
        let norm = b * k * INPUT_DIM as f64;
        let (s, g) = l1_terms(recon, &targets.reconstruction, T::from_f64(weights.alpha / norm))?;
        (s / norm, Some(g))
    } else {
        (0.0, None)
    };

    let total = weights.alpha * auto_enc + weights.beta * traj;
    Ok((LossBreakdown { total, auto_enc, traj }, HeadGrads { reconstruction: recon_grads, deltas: delta_grads }))
}

/// Forward, loss and full backward for one batch.
pub fn loss_and_gradients<T: Real>(
    params: &ModelParams<T>,
    input: &BatchInput<T>,
    targets: &BatchTargets<T>,
    weights: &LossWeights,
) -> Result<(LossBreakdown, ModelParams<T>)> {
    let (out, trace) = forward_batch(params, input, weights.mode.uses_reconstruction())?;
    let (loss, heads) = composite_loss(&out, targets, weights)?;
    let grads = backward_batch(params, input, &out, &trace, &heads)?;
    Ok((loss, grads))
}

/// Loss value only, skipping the backward pass.
pub fn loss_value<T: Real>(
    params: &ModelParams<T>,
    input: &BatchInput<T>,
    targets: &BatchTargets<T>,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    let (out, _) = forward_batch(params, input, weights.mode.uses_reconstruction())?;
    Ok(composite_loss(&out, targets, weights)?.0)
}
