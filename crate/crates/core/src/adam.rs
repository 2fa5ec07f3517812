//! Bias-corrected Adam without weight decay.

use crate::error::{Error, Result};
use crate::tensor::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment accumulators for a fixed list of parameter tensors.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub first: Vec<Vec<T>>,
    pub second: Vec<Vec<T>>,
    pub t: u64,
}

/// A parameter tensor handed to the optimizer.
pub struct ParamSlot<'a, T> {
    pub name: &'static str,
    pub value: &'a mut [T],
    pub grad: &'a [T],
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        Self {
            config,
            first: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            second: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            t: 0,
        }
    }

    /// One update over all slots. Gradients are validated up front so a
    /// non-finite value leaves every parameter untouched.
    ///
    /// A tensor whose gradient is identically zero is skipped entirely
    /// (moments and values), so a zero gradient never moves a parameter.
    pub fn step(&mut self, slots: &mut [ParamSlot<'_, T>], lr: f64) -> Result<()> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        if slots.len() != self.first.len() {
            return Err(Error::dimension(
                "adam_step",
                format!("{} tensors", self.first.len()),
                format!("{} tensors", slots.len()),
            ));
        }
        for (i, s) in slots.iter().enumerate() {
            if s.value.len() != self.first[i].len() || s.grad.len() != s.value.len() {
                return Err(Error::dimension(
                    "adam_step",
                    format!("{} has {} values", s.name, self.first[i].len()),
                    format!("value {} grad {}", s.value.len(), s.grad.len()),
                ));
            }
            if let Some(j) = s.grad.iter().position(|g| !g.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of {} at index {j}", s.name)));
            }
        }

        self.t += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let t = self.t as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        let (b1, b2) = (T::from_f64(beta1), T::from_f64(beta2));
        let (one, eps, lr) = (T::one(), T::from_f64(eps), T::from_f64(lr));
        let (bc1, bc2) = (T::from_f64(bc1), T::from_f64(bc2));

        for (i, s) in slots.iter_mut().enumerate() {
            if s.grad.iter().all(|g| *g == T::zero()) {
                continue;
            }
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for j in 0..s.value.len() {
                let g = s.grad[j];
                m[j] = b1 * m[j] + (one - b1) * g;
                v[j] = b2 * v[j] + (one - b2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                s.value[j] = s.value[j] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
