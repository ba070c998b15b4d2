//! Row-major dense arrays and the scalar trait shared by every backend.

use std::fmt::Debug;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Storage precision for likelihood values. Accumulation is always `f64`.
pub trait Real: Float + Into<f64> + Debug + Default + Send + Sync + 'static {
    /// Size of one stored value in bytes.
    const BYTES: usize;

    fn from_f64(v: f64) -> Self;
}

impl Real for f32 {
    const BYTES: usize = 4;

    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Real for f64 {
    const BYTES: usize = 8;

    fn from_f64(v: f64) -> Self {
        v
    }
}

/// Dense row-major array with a dynamic number of axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor<T = f64> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Copy + Default> DenseTensor<T> {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![T::default(); len],
        }
    }

    pub fn from_vec(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} holds {len} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.shape)
    }

    /// Flat offset of a multi-index, or `None` if any coordinate is out of range.
    pub fn offset(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.shape.len() {
            return None;
        }
        let mut off = 0;
        for (&i, &n) in index.iter().zip(&self.shape) {
            if i >= n {
                return None;
            }
            off = off * n + i;
        }
        Some(off)
    }

    pub fn get(&self, index: &[usize]) -> Option<T> {
        self.offset(index).map(|o| self.data[o])
    }

    /// Slice at position `index` along axis 0, as a tensor of one fewer axis.
    pub fn slice_axis0(&self, index: usize) -> Result<Self> {
        let extent = *self
            .shape
            .first()
            .ok_or_else(|| Error::ShapeMismatch("cannot slice a 0-d tensor".into()))?;
        if index >= extent {
            return Err(Error::IndexOutOfRange { index, extent });
        }
        let inner: usize = self.shape[1..].iter().product();
        Ok(Self {
            shape: self.shape[1..].to_vec(),
            data: self.data[index * inner..(index + 1) * inner].to_vec(),
        })
    }

    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> DenseTensor<U> {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

pub fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// Advance a row-major multi-index by one. Returns `false` after the last index.
pub(crate) fn next_index(index: &mut [usize], shape: &[usize]) -> bool {
    for axis in (0..shape.len()).rev() {
        index[axis] += 1;
        if index[axis] < shape[axis] {
            return true;
        }
        index[axis] = 0;
    }
    false
}

/// Relative deviation `|a - b| / max(|a|, |b|)`, with equal infinities at 0.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a.is_nan() || b.is_nan() || a.is_infinite() || b.is_infinite() {
        return f64::INFINITY;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
