//! Coordinate-format sparse tensors.
//!
//! Coordinates are kept column-wise (one `u32` vector per axis) in
//! lexicographic order with no duplicates, and exact zeros are never stored.
//! Because entries are sorted by axis 0 first, fixing the leading coordinate
//! selects a contiguous run of entries; [`CooView::gather_axis0`] exploits that
//! to slice without copying.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::tensor::{next_index, DenseTensor, Real};

/// Bytes per stored coordinate.
pub const INDEX_BYTES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CooTensor<T = f64> {
    shape: Vec<usize>,
    columns: Vec<Vec<u32>>,
    values: Vec<T>,
}

impl<T: Real> CooTensor<T> {
    /// Empty tensor of the given shape.
    pub fn empty(shape: Vec<usize>) -> Self {
        let columns = vec![Vec::new(); shape.len()];
        Self {
            shape,
            columns,
            values: Vec::new(),
        }
    }

    /// Builds a tensor from unordered `(coordinate, value)` pairs.
    ///
    /// Zero values are dropped. Out-of-range or repeated coordinates are errors.
    pub fn from_entries(shape: Vec<usize>, mut entries: Vec<(Vec<u32>, T)>) -> Result<Self> {
        for (c, _) in &entries {
            if c.len() != shape.len() {
                return Err(Error::ShapeMismatch(format!(
                    "coordinate {c:?} for a {}-d tensor",
                    shape.len()
                )));
            }
            for (&i, &n) in c.iter().zip(&shape) {
                if i as usize >= n {
                    return Err(Error::IndexOutOfRange {
                        index: i as usize,
                        extent: n,
                    });
                }
            }
        }
        entries.retain(|(_, v)| *v != T::zero());
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateCoordinate(w[0].0.clone()));
        }
        let mut out = Self::empty(shape);
        for (c, v) in entries {
            for (col, i) in out.columns.iter_mut().zip(c) {
                col.push(i);
            }
            out.values.push(v);
        }
        Ok(out)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Coordinates of every stored entry along `axis`.
    pub fn column(&self, axis: usize) -> &[u32] {
        &self.columns[axis]
    }

    pub fn coord(&self, entry: usize) -> Vec<u32> {
        self.columns.iter().map(|c| c[entry]).collect()
    }

    /// Coordinate matrix, one row per stored entry.
    pub fn coords(&self) -> Vec<Vec<u32>> {
        (0..self.nnz()).map(|i| self.coord(i)).collect()
    }

    pub fn view(&self) -> CooView<'_, T> {
        CooView {
            shape: &self.shape,
            columns: &self.columns,
            values: &self.values,
            range: 0..self.values.len(),
        }
    }

    /// The `(ndim - 1)`-dimensional slice at position `index` of axis 0.
    pub fn gather_axis0(&self, index: usize) -> Result<Self> {
        Ok(self.view().gather_axis0(index)?.to_owned())
    }

    pub fn to_dense(&self) -> DenseTensor<T> {
        self.view().to_dense()
    }

    /// `sum_entries value * prod_i weights[i][coord_i]`, accumulated in `f64`.
    pub fn contract_factorized<W: AsRef<[f64]>>(&self, weights: &[W]) -> Result<f64> {
        self.view().contract_factorized(weights)
    }

    pub fn cast<U: Real>(&self) -> CooTensor<U> {
        CooTensor {
            shape: self.shape.clone(),
            columns: self.columns.clone(),
            values: self.values.iter().map(|&v| U::from_f64(v.into())).collect(),
        }
    }

    /// Checks ordering, uniqueness, bounds and the no-stored-zero rule.
    pub fn check_invariants(&self) -> Result<()> {
        if self.columns.len() != self.shape.len()
            || self.columns.iter().any(|c| c.len() != self.values.len())
        {
            return Err(Error::ShapeMismatch(
                "coordinate columns out of step".into(),
            ));
        }
        for i in 0..self.nnz() {
            let c = self.coord(i);
            if let Some((&x, &n)) = c.iter().zip(&self.shape).find(|(&x, &n)| x as usize >= n) {
                return Err(Error::IndexOutOfRange {
                    index: x as usize,
                    extent: n,
                });
            }
            if self.values[i] == T::zero() {
                return Err(Error::ShapeMismatch(format!("stored zero at {c:?}")));
            }
            if i > 0 && self.coord(i - 1) >= c {
                return Err(Error::DuplicateCoordinate(c));
            }
        }
        Ok(())
    }
}

/// Stores exactly the entries with `|v| > threshold`, in row-major order.
///
/// # Panics
///
/// If an extent does not fit a 32-bit coordinate.
pub fn to_coo<T: Real>(dense: &DenseTensor<T>, threshold: f64) -> CooTensor<T> {
    let shape = dense.shape().to_vec();
    assert!(
        shape.iter().all(|&n| n <= u32::MAX as usize + 1),
        "extent exceeds 32-bit coordinates: {shape:?}"
    );
    let threshold = threshold.max(0.0);
    let mut out = CooTensor::empty(shape.clone());
    if dense.is_empty() {
        return out;
    }
    let mut index = vec![0usize; shape.len()];
    for &v in dense.data() {
        let x: f64 = v.into();
        if x.abs() > threshold {
            for (col, &i) in out.columns.iter_mut().zip(&index) {
                col.push(i as u32);
            }
            out.values.push(v);
        }
        next_index(&mut index, &shape);
    }
    out
}

pub fn to_dense<T: Real>(t: &CooTensor<T>) -> DenseTensor<T> {
    t.to_dense()
}

/// Values plus 32-bit coordinates: `nnz * (value_bytes + 4 * ndim)`.
pub fn coo_bytes<T: Real>(t: &CooTensor<T>, value_bytes: usize) -> usize {
    t.nnz() * (value_bytes + INDEX_BYTES * t.ndim())
}

/// Borrowed contiguous run of entries of a [`CooTensor`], over its trailing axes.
#[derive(Debug, Clone)]
pub struct CooView<'a, T> {
    shape: &'a [usize],
    columns: &'a [Vec<u32>],
    values: &'a [T],
    range: Range<usize>,
}

impl<'a, T: Real> CooView<'a, T> {
    pub fn shape(&self) -> &'a [usize] {
        self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn nnz(&self) -> usize {
        self.range.len()
    }

    /// Positions of the viewed entries in the parent tensor.
    pub fn entry_range(&self) -> Range<usize> {
        self.range.clone()
    }

    pub fn values(&self) -> &'a [T] {
        &self.values[self.range.clone()]
    }

    pub fn column(&self, axis: usize) -> &'a [u32] {
        &self.columns[axis][self.range.clone()]
    }

    pub fn gather_axis0(&self, index: usize) -> Result<CooView<'a, T>> {
        let extent = *self
            .shape
            .first()
            .ok_or_else(|| Error::ShapeMismatch("cannot gather from a 0-d tensor".into()))?;
        if index >= extent {
            return Err(Error::IndexOutOfRange { index, extent });
        }
        let lead = self.column(0);
        let idx = index as u32;
        let lo = lead.partition_point(|&c| c < idx);
        let hi = lo + lead[lo..].partition_point(|&c| c <= idx);
        Ok(CooView {
            shape: &self.shape[1..],
            columns: &self.columns[1..],
            values: self.values,
            range: self.range.start + lo..self.range.start + hi,
        })
    }

    pub fn to_owned(&self) -> CooTensor<T> {
        CooTensor {
            shape: self.shape.to_vec(),
            columns: (0..self.ndim()).map(|a| self.column(a).to_vec()).collect(),
            values: self.values().to_vec(),
        }
    }

    pub fn to_dense(&self) -> DenseTensor<T> {
        let mut out = DenseTensor::zeros(self.shape.to_vec());
        let strides = out.strides();
        let vals = self.values();
        let data = out.data_mut();
        for (e, &v) in vals.iter().enumerate() {
            let off: usize = (0..strides.len())
                .map(|a| self.column(a)[e] as usize * strides[a])
                .sum();
            data[off] = v;
        }
        out
    }

    pub fn contract_factorized<W: AsRef<[f64]>>(&self, weights: &[W]) -> Result<f64> {
        if weights.len() != self.ndim() {
            return Err(Error::ShapeMismatch(format!(
                "{} weight vectors for a {}-d tensor",
                weights.len(),
                self.ndim()
            )));
        }
        for (a, (w, &n)) in weights.iter().zip(self.shape).enumerate() {
            if w.as_ref().len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "weight {a} has length {} but axis extent is {n}",
                    w.as_ref().len()
                )));
            }
        }
        let cols: Vec<&[u32]> = (0..self.ndim()).map(|a| self.column(a)).collect();
        let mut acc = 0.0;
        for (e, &v) in self.values().iter().enumerate() {
            let mut term: f64 = v.into();
            for (w, col) in weights.iter().zip(&cols) {
                term *= w.as_ref()[col[e] as usize];
            }
            acc += term;
        }
        Ok(acc)
    }
}
