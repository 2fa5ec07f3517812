//! LSTM cell with hand-derived backward pass.
//!
//! Packed `4H` tensors hold the gates in the fixed order input, forget,
//! cell candidate, output (`IFGO`). The order is part of the weight file format.
//! Every cell carries two bias vectors, one on the input side and one on the
//! recurrent side.
//!
//! All batched routines take `B x D` inputs and `B x H` states, one sample per
//! row. The single-sample [`lstm_cell_forward`] / [`lstm_cell_backward`] pair
//! runs the same code with `B = 1`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{matmul_nn_into, matmul_nt_into, matmul_tn_acc, Real, Tensor1, Tensor2};

pub const GATE_ORDER: [u8; 4] = *b"IFGO";

#[derive(Clone, Debug, PartialEq)]
pub struct LstmCellParams<T> {
    /// `4H x D`
    pub input_weights: Tensor2<T>,
    /// `4H x H`
    pub recurrent_weights: Tensor2<T>,
    pub input_bias: Tensor1<T>,
    pub recurrent_bias: Tensor1<T>,
}

impl<T: Real> LstmCellParams<T> {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_weights: Tensor2::zeros(4 * hidden, input_dim),
            recurrent_weights: Tensor2::zeros(4 * hidden, hidden),
            input_bias: Tensor1::zeros(4 * hidden),
            recurrent_bias: Tensor1::zeros(4 * hidden),
        }
    }

    /// Weights uniform on `+-1/sqrt(H)`, biases zero.
    pub fn init_uniform<R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut p = Self::zeros(input_dim, hidden);
        for v in p.input_weights.as_mut_slice().iter_mut().chain(p.recurrent_weights.as_mut_slice()) {
            *v = T::from_f64(rng.gen_range(-bound..=bound));
        }
        p
    }

    pub fn hidden(&self) -> usize {
        self.recurrent_weights.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.cols()
    }

    pub fn param_count(&self) -> usize {
        let h4 = 4 * self.hidden();
        h4 * self.input_dim() + h4 * self.hidden() + 2 * h4
    }

    pub fn cast<U: Real>(&self) -> LstmCellParams<U> {
        LstmCellParams {
            input_weights: self.input_weights.cast(),
            recurrent_weights: self.recurrent_weights.cast(),
            input_bias: self.input_bias.cast(),
            recurrent_bias: self.recurrent_bias.cast(),
        }
    }

    pub fn check_shapes(&self) -> Result<()> {
        let h = self.hidden();
        let d = self.input_dim();
        let ok = self.input_weights.rows() == 4 * h
            && self.recurrent_weights.rows() == 4 * h
            && self.input_bias.len() == 4 * h
            && self.recurrent_bias.len() == 4 * h;
        if !ok {
            return Err(Error::dimension(
                "LstmCellParams",
                format!("4H={} rows for H={h}, D={d}", 4 * h),
                format!(
                    "input {} recurrent {} biases {}/{}",
                    self.input_weights.shape_str(),
                    self.recurrent_weights.shape_str(),
                    self.input_bias.len(),
                    self.recurrent_bias.len()
                ),
            ));
        }
        Ok(())
    }

    /// `x W_ih^T + b_ih` for a batch of inputs.
    pub fn input_projection(&self, x: &Tensor2<T>) -> Result<Tensor2<T>> {
        let mut out = Tensor2::zeros(x.rows(), 4 * self.hidden());
        matmul_nt_into(x, &self.input_weights, &mut out, false)?;
        out.add_row_vector(self.input_bias.as_slice());
        Ok(out)
    }

    /// One recurrence step given the precomputed input projection.
    pub fn step(&self, projection: &Tensor2<T>, state: &BatchState<T>) -> Result<(BatchState<T>, StepCache<T>)> {
        let h = self.hidden();
        let b = state.h.rows();
        if projection.shape() != (b, 4 * h) || state.h.cols() != h || state.c.shape() != (b, h) {
            return Err(Error::dimension(
                "lstm step",
                format!("projection {b}x{} and state {b}x{h}", 4 * h),
                format!(
                    "projection {} state h {} c {}",
                    projection.shape_str(),
                    state.h.shape_str(),
                    state.c.shape_str()
                ),
            ));
        }
        let mut gates = projection.clone();
        matmul_nt_into(&state.h, &self.recurrent_weights, &mut gates, true)?;
        gates.add_row_vector(self.recurrent_bias.as_slice());

        let mut c = Tensor2::zeros(b, h);
        let mut tanh_c = Tensor2::zeros(b, h);
        let mut h_new = Tensor2::zeros(b, h);
        for r in 0..b {
            let g = gates.row_mut(r);
            for v in &mut g[..2 * h] {
                *v = sigmoid(*v);
            }
            for v in &mut g[2 * h..3 * h] {
                *v = v.tanh();
            }
            for v in &mut g[3 * h..] {
                *v = sigmoid(*v);
            }
            let c_prev = state.c.row(r);
            let (cr, tr, hr) = (c.row_mut(r), tanh_c.row_mut(r), h_new.row_mut(r));
            for j in 0..h {
                let (i_g, f_g, g_g, o_g) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                cr[j] = f_g * c_prev[j] + i_g * g_g;
                tr[j] = cr[j].tanh();
                hr[j] = o_g * tr[j];
            }
        }
        let cache = StepCache { h_prev: state.h.clone(), c_prev: state.c.clone(), gates, tanh_c };
        Ok((BatchState { h: h_new, c }, cache))
    }

    /// Convenience: projection plus step.
    pub fn forward_batch(&self, x: &Tensor2<T>, state: &BatchState<T>) -> Result<(BatchState<T>, StepCache<T>)> {
        if x.cols() != self.input_dim() {
            return Err(Error::dimension(
                "lstm forward",
                format!("input width {}", self.input_dim()),
                format!("{}", x.cols()),
            ));
        }
        let proj = self.input_projection(x)?;
        self.step(&proj, state)
    }

    /// Backward through one step. Accumulates recurrent-side gradients into
    /// `grads` and returns the pre-activation gate gradients together with the
    /// gradients w.r.t. the incoming state.
    pub fn step_backward(
        &self,
        cache: &StepCache<T>,
        dh: &Tensor2<T>,
        dc: &Tensor2<T>,
        grads: &mut LstmCellParams<T>,
    ) -> Result<(Tensor2<T>, BatchState<T>)> {
        let h = self.hidden();
        let b = cache.h_prev.rows();
        if dh.shape() != (b, h) || dc.shape() != (b, h) || cache.gates.shape() != (b, 4 * h) {
            return Err(Error::dimension(
                "lstm step_backward",
                format!("upstream {b}x{h}"),
                format!("dh {} dc {}", dh.shape_str(), dc.shape_str()),
            ));
        }
        let one = T::one();
        let mut d_pre = Tensor2::zeros(b, 4 * h);
        let mut dc_prev = Tensor2::zeros(b, h);
        for r in 0..b {
            let g = cache.gates.row(r);
            let t = cache.tanh_c.row(r);
            let c_prev = cache.c_prev.row(r);
            let (dhr, dcr) = (dh.row(r), dc.row(r));
            let dcp = dc_prev.row_mut(r);
            let da = d_pre.row_mut(r);
            for j in 0..h {
                let (i_g, f_g, g_g, o_g) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let d_o = dhr[j] * t[j];
                let dc_tot = dcr[j] + dhr[j] * o_g * (one - t[j] * t[j]);
                dcp[j] = dc_tot * f_g;
                let d_i = dc_tot * g_g;
                let d_f = dc_tot * c_prev[j];
                let d_g = dc_tot * i_g;
                da[j] = d_i * i_g * (one - i_g);
                da[h + j] = d_f * f_g * (one - f_g);
                da[2 * h + j] = d_g * (one - g_g * g_g);
                da[3 * h + j] = d_o * o_g * (one - o_g);
            }
        }
        matmul_tn_acc(&d_pre, &cache.h_prev, &mut grads.recurrent_weights)?;
        d_pre.col_sums_into(grads.recurrent_bias.as_mut_slice());
        let mut dh_prev = Tensor2::zeros(b, h);
        matmul_nn_into(&d_pre, &self.recurrent_weights, &mut dh_prev, false)?;
        Ok((d_pre, BatchState { h: dh_prev, c: dc_prev }))
    }

    /// Input-side backward: accumulates `W_ih`, `b_ih` gradients for the
    /// pre-activation gradient `d_pre` and returns `dx`.
    pub fn input_backward(
        &self,
        x: &Tensor2<T>,
        d_pre: &Tensor2<T>,
        grads: &mut LstmCellParams<T>,
    ) -> Result<Tensor2<T>> {
        matmul_tn_acc(d_pre, x, &mut grads.input_weights)?;
        d_pre.col_sums_into(grads.input_bias.as_mut_slice());
        let mut dx = Tensor2::zeros(x.rows(), x.cols());
        matmul_nn_into(d_pre, &self.input_weights, &mut dx, false)?;
        Ok(dx)
    }
}

#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Recurrent state of a batch, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchState<T> {
    pub h: Tensor2<T>,
    pub c: Tensor2<T>,
}

impl<T: Real> BatchState<T> {
    pub fn zeros(batch: usize, hidden: usize) -> Self {
        Self { h: Tensor2::zeros(batch, hidden), c: Tensor2::zeros(batch, hidden) }
    }
}

/// Everything `step_backward` needs from the forward step.
#[derive(Clone, Debug)]
pub struct StepCache<T> {
    pub h_prev: Tensor2<T>,
    pub c_prev: Tensor2<T>,
    /// Post-activation gates `[i | f | g | o]`.
    pub gates: Tensor2<T>,
    pub tanh_c: Tensor2<T>,
}

/// Hidden and cell state of a single sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCellState<T> {
    pub h: Tensor1<T>,
    pub c: Tensor1<T>,
}

impl<T: Real> LstmCellState<T> {
    pub fn zeros(hidden: usize) -> Self {
        Self { h: Tensor1::zeros(hidden), c: Tensor1::zeros(hidden) }
    }

    fn to_batch(&self) -> Result<BatchState<T>> {
        Ok(BatchState {
            h: Tensor2::from_vec(1, self.h.len(), self.h.as_slice().to_vec())?,
            c: Tensor2::from_vec(1, self.c.len(), self.c.as_slice().to_vec())?,
        })
    }

    fn from_batch(b: BatchState<T>) -> Self {
        Self {
            h: Tensor1::from_vec(b.h.as_slice().to_vec()),
            c: Tensor1::from_vec(b.c.as_slice().to_vec()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    pub x: Tensor2<T>,
    pub step: StepCache<T>,
}

pub fn lstm_cell_forward<T: Real>(
    p: &LstmCellParams<T>,
    x: &Tensor1<T>,
    s: &LstmCellState<T>,
) -> Result<(LstmCellState<T>, ForwardCache<T>)> {
    p.check_shapes()?;
    if x.len() != p.input_dim() || s.h.len() != p.hidden() || s.c.len() != p.hidden() {
        return Err(Error::dimension(
            "lstm_cell_forward",
            format!("x {} and state {}", p.input_dim(), p.hidden()),
            format!("x {} h {} c {}", x.len(), s.h.len(), s.c.len()),
        ));
    }
    let xb = Tensor2::from_vec(1, x.len(), x.as_slice().to_vec())?;
    let (next, step) = p.forward_batch(&xb, &s.to_batch()?)?;
    Ok((LstmCellState::from_batch(next), ForwardCache { x: xb, step }))
}

/// Gradients of a scalar w.r.t. everything feeding one cell step, given the
/// upstream gradients on the outgoing `h` and `c`.
pub fn lstm_cell_backward<T: Real>(
    p: &LstmCellParams<T>,
    cache: &ForwardCache<T>,
    dh: &Tensor1<T>,
    dc: &Tensor1<T>,
) -> Result<(LstmCellParams<T>, Tensor1<T>, LstmCellState<T>)> {
    if cache.x.rows() != 1 || cache.x.cols() != p.input_dim() || cache.step.h_prev.cols() != p.hidden() {
        return Err(Error::dimension(
            "lstm_cell_backward",
            format!("cache for D={} H={}", p.input_dim(), p.hidden()),
            format!("x {} h {}", cache.x.shape_str(), cache.step.h_prev.shape_str()),
        ));
    }
    let h = p.hidden();
    let dhb = Tensor2::from_vec(1, h, dh.as_slice().to_vec())?;
    let dcb = Tensor2::from_vec(1, h, dc.as_slice().to_vec())?;
    let mut grads = LstmCellParams::zeros(p.input_dim(), h);
    let (d_pre, d_state) = p.step_backward(&cache.step, &dhb, &dcb, &mut grads)?;
    let dx = p.input_backward(&cache.x, &d_pre, &mut grads)?;
    Ok((grads, Tensor1::from_vec(dx.as_slice().to_vec()), LstmCellState::from_batch(d_state)))
}
