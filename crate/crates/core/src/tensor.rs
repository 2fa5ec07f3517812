//! Dense row-major tensors and the handful of matrix products the network needs.
//!
//! Everything here is generic over [`Real`] so the same kernels serve double
//! precision training and single precision inference.

use std::fmt::Debug;

use num_traits::Float;

use crate::error::{Error, Result};

/// Floating point element type supported by the kernels.
pub trait Real: Float + Debug + Default + Send + Sync + 'static {
    /// Bytes per element in serialized form.
    const WIDTH: usize;

    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;

    /// `c = alpha * a * b + beta * c` over strided views.
    ///
    /// # Safety
    /// Pointers and strides must describe valid, non-overlapping (for `c`) views
    /// of `m x k`, `k x n` and `m x n` matrices.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Real for f64 {
    const WIDTH: usize = 8;

    fn from_f64(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

impl Real for f32 {
    const WIDTH: usize = 4;

    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

/// Dense vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor1<T> {
    data: Vec<T>,
}

impl<T: Real> Tensor1<T> {
    pub fn zeros(len: usize) -> Self {
        Self { data: vec![T::zero(); len] }
    }

    pub fn from_vec(data: Vec<T>) -> Self {
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Tensor1<U> {
        Tensor1 { data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect() }
    }
}

impl<T> std::ops::Index<usize> for Tensor1<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> std::ops::IndexMut<usize> for Tensor1<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor2<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor2<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dimension(
                "Tensor2::from_vec",
                format!("{rows}x{cols}"),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::dimension(
                    "Tensor2::from_rows",
                    format!("row 0 has {cols} columns"),
                    format!("row {i} has {}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        t
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Tensor2<U> {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + *b;
        }
    }

    /// Adds `v` to every row.
    pub fn add_row_vector(&mut self, v: &[T]) {
        debug_assert_eq!(v.len(), self.cols);
        for r in self.data.chunks_exact_mut(self.cols) {
            for (a, b) in r.iter_mut().zip(v) {
                *a = *a + *b;
            }
        }
    }

    /// Accumulates column sums into `out`.
    pub fn col_sums_into(&self, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.cols);
        for r in self.data.chunks_exact(self.cols) {
            for (o, v) in out.iter_mut().zip(r) {
                *o = *o + *v;
            }
        }
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] = acc[l] + x[l] * y[l];
        }
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail = tail + *x * *y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

// Batches up to this size use row dot products instead of gemm packing.
const SMALL_BATCH: usize = 4;

/// `x * w^T` for `x: B x D`, `w: N x D`, giving `B x N`.
pub fn matmul_nt<T: Real>(x: &Tensor2<T>, w: &Tensor2<T>) -> Result<Tensor2<T>> {
    let mut out = Tensor2::zeros(x.rows, w.rows);
    matmul_nt_into(x, w, &mut out, false)?;
    Ok(out)
}

/// `out (+)= x * w^T`. Results depend only on the shapes involved, never on
/// thread count or call history.
pub fn matmul_nt_into<T: Real>(
    x: &Tensor2<T>,
    w: &Tensor2<T>,
    out: &mut Tensor2<T>,
    accumulate: bool,
) -> Result<()> {
    if x.cols != w.cols || out.rows != x.rows || out.cols != w.rows {
        return Err(Error::dimension(
            "matmul_nt",
            format!("{} * ({})^T", x.shape_str(), w.shape_str()),
            out.shape_str(),
        ));
    }
    if x.rows <= SMALL_BATCH {
        for b in 0..x.rows {
            let xr = &x.data[b * x.cols..(b + 1) * x.cols];
            let orow = &mut out.data[b * out.cols..(b + 1) * out.cols];
            for (j, o) in orow.iter_mut().enumerate() {
                let d = dot(xr, &w.data[j * w.cols..(j + 1) * w.cols]);
                *o = if accumulate { *o + d } else { d };
            }
        }
        return Ok(());
    }
    let beta = if accumulate { T::one() } else { T::zero() };
    // SAFETY: shapes checked above; w is viewed transposed through its strides.
    unsafe {
        T::gemm_raw(
            x.rows,
            x.cols,
            w.rows,
            T::one(),
            x.data.as_ptr(),
            x.cols as isize,
            1,
            w.data.as_ptr(),
            1,
            w.cols as isize,
            beta,
            out.data.as_mut_ptr(),
            out.cols as isize,
            1,
        );
    }
    Ok(())
}

/// `out (+)= a * b` for `a: B x N`, `b: N x D`.
pub fn matmul_nn_into<T: Real>(
    a: &Tensor2<T>,
    b: &Tensor2<T>,
    out: &mut Tensor2<T>,
    accumulate: bool,
) -> Result<()> {
    if a.cols != b.rows || out.rows != a.rows || out.cols != b.cols {
        return Err(Error::dimension(
            "matmul_nn",
            format!("{} * {}", a.shape_str(), b.shape_str()),
            out.shape_str(),
        ));
    }
    let beta = if accumulate { T::one() } else { T::zero() };
    // SAFETY: shapes checked above.
    unsafe {
        T::gemm_raw(
            a.rows,
            a.cols,
            b.cols,
            T::one(),
            a.data.as_ptr(),
            a.cols as isize,
            1,
            b.data.as_ptr(),
            b.cols as isize,
            1,
            beta,
            out.data.as_mut_ptr(),
            out.cols as isize,
            1,
        );
    }
    Ok(())
}

/// `out += a^T * b` for `a: B x N`, `b: B x D`, giving `N x D`.
pub fn matmul_tn_acc<T: Real>(a: &Tensor2<T>, b: &Tensor2<T>, out: &mut Tensor2<T>) -> Result<()> {
    if a.rows != b.rows || out.rows != a.cols || out.cols != b.cols {
        return Err(Error::dimension(
            "matmul_tn",
            format!("({})^T * {}", a.shape_str(), b.shape_str()),
            out.shape_str(),
        ));
    }
    // SAFETY: shapes checked above; a is viewed transposed through its strides.
    unsafe {
        T::gemm_raw(
            a.cols,
            a.rows,
            b.cols,
            T::one(),
            a.data.as_ptr(),
            1,
            a.cols as isize,
            b.data.as_ptr(),
            b.cols as isize,
            1,
            T::one(),
            out.data.as_mut_ptr(),
            out.cols as isize,
            1,
        );
    }
    Ok(())
}

/// Fully connected map `W x + b`.
pub fn linear_forward<T: Real>(w: &Tensor2<T>, b: &Tensor1<T>, x: &Tensor1<T>) -> Result<Tensor1<T>> {
    if w.cols != x.len() || w.rows != b.len() {
        return Err(Error::dimension(
            "linear_forward",
            format!("W {} with b {}", w.shape_str(), b.len()),
            format!("x {}", x.len()),
        ));
    }
    let out = (0..w.rows)
        .map(|j| dot(w.row(j), x.as_slice()) + b[j])
        .collect();
    Ok(Tensor1::from_vec(out))
}
