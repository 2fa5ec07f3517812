//! Elementwise activation and the L1 objective.

use crate::error::{Error, Result};
use crate::tensor::Real;

pub fn relu<T: Real>(x: &[T]) -> Vec<T> {
    x.iter().map(|v| v.max(T::zero())).collect()
}

/// Gradient of `relu` at `x` applied to upstream `dy`.
pub fn relu_backward<T: Real>(x: &[T], dy: &[T]) -> Vec<T> {
    x.iter()
        .zip(dy)
        .map(|(x, d)| if *x > T::zero() { *d } else { T::zero() })
        .collect()
}

/// Sign with `sign(0) = 0`.
#[inline]
pub fn sign0<T: Real>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Mean absolute error over all elements and its subgradient.
pub fn l1_loss<T: Real>(pred: &[T], target: &[T]) -> Result<(T, Vec<T>)> {
    if pred.len() != target.len() {
        return Err(Error::dimension("l1_loss", format!("{} values", pred.len()), format!("{} values", target.len())));
    }
    if pred.is_empty() {
        return Err(Error::Empty("l1_loss"));
    }
    let n = T::from_f64(pred.len() as f64);
    let mut sum = T::zero();
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let r = *p - *t;
            sum = sum + r.abs();
            sign0(r) / n
        })
        .collect();
    Ok((sum / n, grad))
}
