//! The three-block forecaster.
//!
//! * encoder block: `encoder` LSTM over the feature window, ReLU on its final
//!   hidden state, `latent_fc` to the latent vector; `auto_decoder` LSTM runs
//!   `k` steps on the latent and `reconstruction_fc` maps each hidden state
//!   back to 8 features (training only).
//! * decoder block: `future_decoder` LSTM starts from the encoder's final
//!   state, runs `p` steps on the latent and `delta_fc` maps each hidden state
//!   to a 4-d change vector.
//! * trajectory concatenation: cumulative sum of the changes on top of the
//!   last observed box.
//!
//! All batched routines keep one sample per row.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lstm::{BatchState, LstmCellParams, LstmCellState, StepCache};
use crate::model::features::{build_features, BBox, BoxSequence, DeltaSequence, FeatureWindow};
use crate::ops::{relu, relu_backward};
use crate::tensor::{matmul_nn_into, matmul_nt_into, matmul_tn_acc, Real, Tensor1, Tensor2};

pub const INPUT_DIM: usize = 8;
pub const OUTPUT_DIM: usize = 4;

/// How the future decoder is seeded from the encoder's final state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderInit {
    /// Copy hidden and cell state.
    Full,
    /// Copy the hidden state, start the cell state at zero.
    HiddenOnly,
}

impl DecoderInit {
    pub fn as_str(self) -> &'static str {
        match self {
            DecoderInit::Full => "full",
            DecoderInit::HiddenOnly => "hidden-only",
        }
    }
}

impl std::str::FromStr for DecoderInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(DecoderInit::Full),
            "hidden-only" | "hidden" => Ok(DecoderInit::HiddenOnly),
            _ => Err(Error::Config(format!("unknown decoder init `{s}` (expected full or hidden-only)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    /// Observed frames.
    pub k: usize,
    /// Predicted frames.
    pub p: usize,
    pub hidden: usize,
    pub latent: usize,
    pub decoder_init: DecoderInit,
}

impl ModelDims {
    /// 30 observed, 60 predicted, 512 hidden units, 256-d latent.
    pub const fn full_size() -> Self {
        Self { k: 30, p: 60, hidden: 512, latent: 256, decoder_init: DecoderInit::Full }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.p == 0 || self.hidden == 0 || self.latent == 0 {
            return Err(Error::Config(format!("model dimensions must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        let lstm = |d: usize| 4 * self.hidden * (d + self.hidden) + 8 * self.hidden;
        let fc = |i: usize, o: usize| i * o + o;
        lstm(INPUT_DIM)
            + fc(self.hidden, self.latent)
            + lstm(self.latent)
            + fc(self.hidden, INPUT_DIM)
            + lstm(self.latent)
            + fc(self.hidden, OUTPUT_DIM)
    }
}

impl Default for ModelDims {
    fn default() -> Self {
        Self::full_size()
    }
}

/// Fully connected layer `y = W x + b`, `W: out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear<T> {
    pub weight: Tensor2<T>,
    pub bias: Tensor1<T>,
}

impl<T: Real> Linear<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { weight: Tensor2::zeros(outputs, inputs), bias: Tensor1::zeros(outputs) }
    }

    /// Weights uniform on `+-1/sqrt(fan_in)`, bias zero.
    pub fn init_uniform<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut l = Self::zeros(inputs, outputs);
        for v in l.weight.as_mut_slice() {
            *v = T::from_f64(rng.gen_range(-bound..=bound));
        }
        l
    }

    pub fn forward_batch(&self, x: &Tensor2<T>) -> Result<Tensor2<T>> {
        let mut out = Tensor2::zeros(x.rows(), self.weight.rows());
        matmul_nt_into(x, &self.weight, &mut out, false)?;
        out.add_row_vector(self.bias.as_slice());
        Ok(out)
    }

    /// Accumulates parameter gradients and returns `dx`.
    pub fn backward(&self, x: &Tensor2<T>, dy: &Tensor2<T>, grads: &mut Linear<T>) -> Result<Tensor2<T>> {
        matmul_tn_acc(dy, x, &mut grads.weight)?;
        dy.col_sums_into(grads.bias.as_mut_slice());
        let mut dx = Tensor2::zeros(x.rows(), x.cols());
        matmul_nn_into(dy, &self.weight, &mut dx, false)?;
        Ok(dx)
    }

    pub fn cast<U: Real>(&self) -> Linear<U> {
        Linear { weight: self.weight.cast(), bias: self.bias.cast() }
    }
}

/// Every learnable tensor of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub dims: ModelDims,
    pub encoder: LstmCellParams<T>,
    pub latent_fc: Linear<T>,
    pub auto_decoder: LstmCellParams<T>,
    pub reconstruction_fc: Linear<T>,
    pub future_decoder: LstmCellParams<T>,
    pub delta_fc: Linear<T>,
}

/// Tensor names in serialization order.
pub const TENSOR_NAMES: [&str; 18] = [
    "encoder.input_weights",
    "encoder.recurrent_weights",
    "encoder.input_bias",
    "encoder.recurrent_bias",
    "latent_fc.weight",
    "latent_fc.bias",
    "auto_decoder.input_weights",
    "auto_decoder.recurrent_weights",
    "auto_decoder.input_bias",
    "auto_decoder.recurrent_bias",
    "reconstruction_fc.weight",
    "reconstruction_fc.bias",
    "future_decoder.input_weights",
    "future_decoder.recurrent_weights",
    "future_decoder.input_bias",
    "future_decoder.recurrent_bias",
    "delta_fc.weight",
    "delta_fc.bias",
];

impl<T: Real> ModelParams<T> {
    pub fn zeros(dims: ModelDims) -> Self {
        Self {
            dims,
            encoder: LstmCellParams::zeros(INPUT_DIM, dims.hidden),
            latent_fc: Linear::zeros(dims.hidden, dims.latent),
            auto_decoder: LstmCellParams::zeros(dims.latent, dims.hidden),
            reconstruction_fc: Linear::zeros(dims.hidden, INPUT_DIM),
            future_decoder: LstmCellParams::zeros(dims.latent, dims.hidden),
            delta_fc: Linear::zeros(dims.hidden, OUTPUT_DIM),
        }
    }

    /// Seeded initialization.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            dims,
            encoder: LstmCellParams::init_uniform(INPUT_DIM, dims.hidden, &mut rng),
            latent_fc: Linear::init_uniform(dims.hidden, dims.latent, &mut rng),
            auto_decoder: LstmCellParams::init_uniform(dims.latent, dims.hidden, &mut rng),
            reconstruction_fc: Linear::init_uniform(dims.hidden, INPUT_DIM, &mut rng),
            future_decoder: LstmCellParams::init_uniform(dims.latent, dims.hidden, &mut rng),
            delta_fc: Linear::init_uniform(dims.hidden, OUTPUT_DIM, &mut rng),
        }
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Flat views in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(18);
        for (lstm, fc) in [
            (&self.encoder, &self.latent_fc),
            (&self.auto_decoder, &self.reconstruction_fc),
            (&self.future_decoder, &self.delta_fc),
        ] {
            out.push(lstm.input_weights.as_slice());
            out.push(lstm.recurrent_weights.as_slice());
            out.push(lstm.input_bias.as_slice());
            out.push(lstm.recurrent_bias.as_slice());
            out.push(fc.weight.as_slice());
            out.push(fc.bias.as_slice());
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(18);
        for (lstm, fc) in [
            (&mut self.encoder, &mut self.latent_fc),
            (&mut self.auto_decoder, &mut self.reconstruction_fc),
            (&mut self.future_decoder, &mut self.delta_fc),
        ] {
            out.push(lstm.input_weights.as_mut_slice());
            out.push(lstm.recurrent_weights.as_mut_slice());
            out.push(lstm.input_bias.as_mut_slice());
            out.push(lstm.recurrent_bias.as_mut_slice());
            out.push(fc.weight.as_mut_slice());
            out.push(fc.bias.as_mut_slice());
        }
        out
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.tensors().concat()
    }

    pub fn set_flat(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::dimension(
                "ModelParams::set_flat",
                format!("{} values", self.param_count()),
                format!("{}", values.len()),
            ));
        }
        let mut off = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&values[off..off + n]);
            off += n;
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            dims: self.dims,
            encoder: self.encoder.cast(),
            latent_fc: self.latent_fc.cast(),
            auto_decoder: self.auto_decoder.cast(),
            reconstruction_fc: self.reconstruction_fc.cast(),
            future_decoder: self.future_decoder.cast(),
            delta_fc: self.delta_fc.cast(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// A batch of encoder inputs: `k` tensors of `B x 8` plus the `B x 4` anchors.
#[derive(Clone, Debug)]
pub struct BatchInput<T> {
    pub steps: Vec<Tensor2<T>>,
    pub anchors: Tensor2<T>,
}

impl<T: Real> BatchInput<T> {
    pub fn batch_size(&self) -> usize {
        self.anchors.rows()
    }

    /// Single-sample batch from a feature window.
    pub fn from_window(window: &FeatureWindow) -> Result<Self> {
        let anchor = window.anchor().ok_or(Error::Empty("feature window"))?;
        let steps = window
            .rows()
            .iter()
            .map(|r| Tensor2::from_vec(1, INPUT_DIM, r.iter().map(|v| T::from_f64(*v)).collect()))
            .collect::<Result<Vec<_>>>()?;
        let anchors = Tensor2::from_vec(1, OUTPUT_DIM, anchor.iter().map(|v| T::from_f64(*v)).collect())?;
        Ok(Self { steps, anchors })
    }
}

/// Intermediate values kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace<T> {
    pub encoder_steps: Vec<StepCache<T>>,
    pub encoder_final: BatchState<T>,
    pub auto_steps: Vec<StepCache<T>>,
    pub auto_hidden: Vec<Tensor2<T>>,
    pub future_steps: Vec<StepCache<T>>,
    pub future_hidden: Vec<Tensor2<T>>,
}

#[derive(Clone, Debug)]
pub struct ForwardOutput<T> {
    /// `B x Z`
    pub latent: Tensor2<T>,
    /// `k` tensors of `B x 8`, present when the auto-decoder ran.
    pub reconstruction: Option<Vec<Tensor2<T>>>,
    /// `p` tensors of `B x 4`
    pub deltas: Vec<Tensor2<T>>,
    /// `p` tensors of `B x 4`
    pub boxes: Vec<Tensor2<T>>,
}

struct Encoded<T> {
    latent: Tensor2<T>,
    final_state: BatchState<T>,
    caches: Vec<StepCache<T>>,
}

fn encode_batch<T: Real>(params: &ModelParams<T>, steps: &[Tensor2<T>]) -> Result<Encoded<T>> {
    let dims = params.dims;
    if steps.len() != dims.k {
        return Err(Error::dimension("encode", format!("k = {} frames", dims.k), format!("{} frames", steps.len())));
    }
    let b = steps[0].rows();
    let mut state = BatchState::zeros(b, dims.hidden);
    let mut caches = Vec::with_capacity(dims.k);
    for x in steps {
        let (next, cache) = params.encoder.forward_batch(x, &state)?;
        caches.push(cache);
        state = next;
    }
    let activated = Tensor2::from_vec(b, dims.hidden, relu(state.h.as_slice()))?;
    let latent = params.latent_fc.forward_batch(&activated)?;
    Ok(Encoded { latent, final_state: state, caches })
}

fn run_decoder<T: Real>(
    lstm: &LstmCellParams<T>,
    fc: &Linear<T>,
    latent: &Tensor2<T>,
    init: BatchState<T>,
    steps: usize,
) -> Result<(Vec<Tensor2<T>>, Vec<StepCache<T>>, Vec<Tensor2<T>>)> {
    // The input is the same latent vector at every step, so project it once.
    let projection = lstm.input_projection(latent)?;
    let mut state = init;
    let mut outputs = Vec::with_capacity(steps);
    let mut caches = Vec::with_capacity(steps);
    let mut hidden = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (next, cache) = lstm.step(&projection, &state)?;
        outputs.push(fc.forward_batch(&next.h)?);
        caches.push(cache);
        hidden.push(next.h.clone());
        state = next;
    }
    Ok((outputs, caches, hidden))
}

fn decoder_init_state<T: Real>(dims: &ModelDims, enc_final: &BatchState<T>) -> BatchState<T> {
    match dims.decoder_init {
        DecoderInit::Full => enc_final.clone(),
        DecoderInit::HiddenOnly => BatchState {
            h: enc_final.h.clone(),
            c: Tensor2::zeros(enc_final.c.rows(), enc_final.c.cols()),
        },
    }
}

/// Cumulative sum of `deltas` on top of `anchors`, batched.
pub fn concat_trajectory_batch<T: Real>(deltas: &[Tensor2<T>], anchors: &Tensor2<T>) -> Vec<Tensor2<T>> {
    let mut cur = anchors.clone();
    deltas
        .iter()
        .map(|d| {
            cur.add_assign(d);
            cur.clone()
        })
        .collect()
}

/// Full batched forward pass. The auto-decoder branch runs only when
/// `with_reconstruction` is set.
pub fn forward_batch<T: Real>(
    params: &ModelParams<T>,
    input: &BatchInput<T>,
    with_reconstruction: bool,
) -> Result<(ForwardOutput<T>, ForwardTrace<T>)> {
    let dims = params.dims;
    let enc = encode_batch(params, &input.steps)?;
    let b = input.batch_size();

    let (reconstruction, auto_steps, auto_hidden) = if with_reconstruction {
        let (out, caches, hidden) = run_decoder(
            &params.auto_decoder,
            &params.reconstruction_fc,
            &enc.latent,
            BatchState::zeros(b, dims.hidden),
            dims.k,
        )?;
        (Some(out), caches, hidden)
    } else {
        (None, Vec::new(), Vec::new())
    };

    let (deltas, future_steps, future_hidden) = run_decoder(
        &params.future_decoder,
        &params.delta_fc,
        &enc.latent,
        decoder_init_state(&dims, &enc.final_state),
        dims.p,
    )?;
    let boxes = concat_trajectory_batch(&deltas, &input.anchors);
    let trace = ForwardTrace {
        encoder_steps: enc.caches,
        encoder_final: enc.final_state,
        auto_steps,
        auto_hidden,
        future_steps,
        future_hidden,
    };
    Ok((ForwardOutput { latent: enc.latent, reconstruction, deltas, boxes }, trace))
}

/// Upstream gradients on the network heads.
#[derive(Clone, Debug)]
pub struct HeadGrads<T> {
    /// Gradient on each reconstruction step, when that branch is supervised.
    pub reconstruction: Option<Vec<Tensor2<T>>>,
    /// Gradient on each predicted change vector (after folding in the
    /// concatenation layer when positions are supervised).
    pub deltas: Vec<Tensor2<T>>,
}

/// Gradient on the change vectors given gradients on the concatenated boxes:
/// each change feeds every later position, so it receives the suffix sum.
pub fn concat_backward<T: Real>(box_grads: &[Tensor2<T>]) -> Vec<Tensor2<T>> {
    let mut out: Vec<Tensor2<T>> = Vec::with_capacity(box_grads.len());
    let mut acc: Option<Tensor2<T>> = None;
    for g in box_grads.iter().rev() {
        let next = match acc {
            Some(mut a) => {
                a.add_assign(g);
                a
            }
            None => g.clone(),
        };
        out.push(next.clone());
        acc = Some(next);
    }
    out.reverse();
    out
}

fn decoder_backward<T: Real>(
    lstm: &LstmCellParams<T>,
    fc: &Linear<T>,
    caches: &[StepCache<T>],
    hidden: &[Tensor2<T>],
    out_grads: &[Tensor2<T>],
    latent: &Tensor2<T>,
    lstm_grads: &mut LstmCellParams<T>,
    fc_grads: &mut Linear<T>,
) -> Result<(Tensor2<T>, BatchState<T>)> {
    let b = latent.rows();
    let h = lstm.hidden();
    let mut d_state = BatchState::zeros(b, h);
    let mut d_pre_sum = Tensor2::zeros(b, 4 * h);
    for t in (0..caches.len()).rev() {
        let mut dh = fc.backward(&hidden[t], &out_grads[t], fc_grads)?;
        dh.add_assign(&d_state.h);
        let (d_pre, prev) = lstm.step_backward(&caches[t], &dh, &d_state.c, lstm_grads)?;
        d_pre_sum.add_assign(&d_pre);
        d_state = prev;
    }
    let d_latent = lstm.input_backward(latent, &d_pre_sum, lstm_grads)?;
    Ok((d_latent, d_state))
}

/// Backpropagates head gradients through the whole network.
pub fn backward_batch<T: Real>(
    params: &ModelParams<T>,
    input: &BatchInput<T>,
    output: &ForwardOutput<T>,
    trace: &ForwardTrace<T>,
    heads: &HeadGrads<T>,
) -> Result<ModelParams<T>> {
    let dims = params.dims;
    let b = input.batch_size();
    let mut grads = ModelParams::zeros(dims);
    if heads.deltas.len() != dims.p {
        return Err(Error::dimension("backward", format!("{} delta grads", dims.p), format!("{}", heads.deltas.len())));
    }

    let (mut d_latent, d_init) = decoder_backward(
        &params.future_decoder,
        &params.delta_fc,
        &trace.future_steps,
        &trace.future_hidden,
        &heads.deltas,
        &output.latent,
        &mut grads.future_decoder,
        &mut grads.delta_fc,
    )?;

    if let Some(recon_grads) = &heads.reconstruction {
        if trace.auto_steps.len() != dims.k || recon_grads.len() != dims.k {
            return Err(Error::Config("reconstruction gradient without a traced auto-decoder pass".into()));
        }
        let (d_lat_auto, _) = decoder_backward(
            &params.auto_decoder,
            &params.reconstruction_fc,
            &trace.auto_steps,
            &trace.auto_hidden,
            recon_grads,
            &output.latent,
            &mut grads.auto_decoder,
            &mut grads.reconstruction_fc,
        )?;
        d_latent.add_assign(&d_lat_auto);
    }

    // latent_fc on ReLU(h_k)
    let h_final = &trace.encoder_final.h;
    let activated = Tensor2::from_vec(b, dims.hidden, relu(h_final.as_slice()))?;
    let d_act = params.latent_fc.backward(&activated, &d_latent, &mut grads.latent_fc)?;
    let mut dh = Tensor2::from_vec(b, dims.hidden, relu_backward(h_final.as_slice(), d_act.as_slice()))?;
    dh.add_assign(&d_init.h);
    let mut dc = match dims.decoder_init {
        DecoderInit::Full => d_init.c,
        DecoderInit::HiddenOnly => Tensor2::zeros(b, dims.hidden),
    };

    for t in (0..dims.k).rev() {
        let (d_pre, prev) = params.encoder.step_backward(&trace.encoder_steps[t], &dh, &dc, &mut grads.encoder)?;
        params.encoder.input_backward(&input.steps[t], &d_pre, &mut grads.encoder)?;
        dh = prev.h;
        dc = prev.c;
    }
    Ok(grads)
}

fn row_vec<T: Real>(t: &Tensor2<T>) -> Result<Tensor1<T>> {
    if t.rows() != 1 {
        return Err(Error::dimension("single-sample view", "1 row", t.shape_str()));
    }
    Ok(Tensor1::from_vec(t.as_slice().to_vec()))
}

fn to_rows4<T: Real>(steps: &[Tensor2<T>]) -> Vec<[f64; 4]> {
    steps
        .iter()
        .map(|t| {
            let r = t.row(0);
            [r[0].as_f64(), r[1].as_f64(), r[2].as_f64(), r[3].as_f64()]
        })
        .collect()
}

/// Runs the encoder over one window. Returns the latent vector and the raw
/// (pre-ReLU) final state used to seed the future decoder.
pub fn encode<T: Real>(params: &ModelParams<T>, window: &FeatureWindow) -> Result<(Tensor1<T>, LstmCellState<T>)> {
    let input = BatchInput::from_window(window)?;
    let enc = encode_batch(params, &input.steps)?;
    Ok((
        row_vec(&enc.latent)?,
        LstmCellState { h: row_vec(&enc.final_state.h)?, c: row_vec(&enc.final_state.c)? },
    ))
}

fn latent_batch<T: Real>(params: &ModelParams<T>, latent: &Tensor1<T>) -> Result<Tensor2<T>> {
    if latent.len() != params.dims.latent {
        return Err(Error::dimension("latent", format!("{}", params.dims.latent), format!("{}", latent.len())));
    }
    Tensor2::from_vec(1, latent.len(), latent.as_slice().to_vec())
}

/// Auto-decoder output `k x 8` for one latent vector.
pub fn reconstruct<T: Real>(params: &ModelParams<T>, latent: &Tensor1<T>) -> Result<Tensor2<T>> {
    let z = latent_batch(params, latent)?;
    let (out, _, _) = run_decoder(
        &params.auto_decoder,
        &params.reconstruction_fc,
        &z,
        BatchState::zeros(1, params.dims.hidden),
        params.dims.k,
    )?;
    let mut data = Vec::with_capacity(params.dims.k * INPUT_DIM);
    for t in &out {
        data.extend_from_slice(t.as_slice());
    }
    Tensor2::from_vec(params.dims.k, INPUT_DIM, data)
}

/// Future change vectors for one latent vector and encoder final state.
pub fn decode_future<T: Real>(
    params: &ModelParams<T>,
    latent: &Tensor1<T>,
    enc_final: &LstmCellState<T>,
) -> Result<DeltaSequence> {
    let z = latent_batch(params, latent)?;
    let h = params.dims.hidden;
    if enc_final.h.len() != h || enc_final.c.len() != h {
        return Err(Error::dimension("decode_future", format!("state {h}"), format!("{}", enc_final.h.len())));
    }
    let state = BatchState {
        h: Tensor2::from_vec(1, h, enc_final.h.as_slice().to_vec())?,
        c: Tensor2::from_vec(1, h, enc_final.c.as_slice().to_vec())?,
    };
    let (out, _, _) = run_decoder(
        &params.future_decoder,
        &params.delta_fc,
        &z,
        decoder_init_state(&params.dims, &state),
        params.dims.p,
    )?;
    Ok(DeltaSequence { rows: to_rows4(&out) })
}

/// Training-mode forward for one window: reconstruction head `k x 8` and the
/// predicted boxes.
pub fn forward_train<T: Real>(params: &ModelParams<T>, window: &FeatureWindow) -> Result<(Tensor2<T>, BoxSequence)> {
    let input = BatchInput::from_window(window)?;
    let (out, _) = forward_batch(params, &input, true)?;
    let recon = out.reconstruction.expect("reconstruction requested");
    let mut data = Vec::with_capacity(params.dims.k * INPUT_DIM);
    for t in &recon {
        data.extend_from_slice(t.as_slice());
    }
    Ok((Tensor2::from_vec(params.dims.k, INPUT_DIM, data)?, BoxSequence { rows: to_rows4(&out.boxes) }))
}

/// Inference on a feature window. The auto-decoder is never run.
pub fn predict_window<T: Real>(params: &ModelParams<T>, window: &FeatureWindow) -> Result<BoxSequence> {
    let input = BatchInput::from_window(window)?;
    let (out, _) = forward_batch(params, &input, false)?;
    Ok(BoxSequence { rows: to_rows4(&out.boxes) })
}

/// Predicts `p` future boxes from exactly `k` consecutive past boxes.
pub fn predict<T: Real>(params: &ModelParams<T>, boxes: &[BBox], predecessor: Option<&BBox>) -> Result<BoxSequence> {
    if boxes.len() != params.dims.k {
        return Err(Error::Input(format!("need exactly {} past boxes, got {}", params.dims.k, boxes.len())));
    }
    predict_window(params, &build_features(boxes, predecessor)?)
}
