//! Dense third-order tensors.
//!
//! A [`Tensor3`] of dimensions `(n1, n2, n3)` stores its entries frontal-slice
//! major: slice `k` is an `n1 x n2` column-major matrix and slices are laid out
//! one after another. Entry `(i, j, k)` (0-based) lives at
//! `k * n1 * n2 + j * n1 + i`. Mathematical texts usually index from 1; every
//! index in this crate is 0-based.
//!
//! With this layout the whole buffer, read as a column-major `(n1 n2) x n3`
//! matrix, is the transpose of the mode-3 unfolding. Transforms along the
//! third mode therefore reduce to one dense matrix product.

use std::ops::{Add, Index, IndexMut, Sub};

use nalgebra::{ComplexField, DMatrix, DMatrixView, DMatrixViewMut, Scalar};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

pub use nalgebra::Complex;

/// Tensor dimensions: rows, columns, frontal slices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl Dims {
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(Error::InvalidArgument(format!(
                "tensor dimensions must be positive, got ({n1}, {n2}, {n3})"
            )));
        }
        Ok(Self { n1, n2, n3 })
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of entries in one frontal slice.
    pub fn slice_len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn as_tuple(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n3)
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.n1, self.n2, self.n3)
    }
}

/// Dense third-order tensor with frontal-slice-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T = f64> {
    dims: Dims,
    data: Vec<T>,
}

/// Complex-valued tensor, the transform domain of the DFT.
pub type ComplexTensor3 = Tensor3<Complex<f64>>;

impl<T: Scalar> Tensor3<T> {
    pub fn from_vec(dims: Dims, data: Vec<T>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(shape_err(format!(
                "data length {} does not match dims {dims} ({} entries)",
                data.len(),
                dims.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dims.len());
        for k in 0..dims.n3 {
            for j in 0..dims.n2 {
                for i in 0..dims.n1 {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { dims, data }
    }

    /// Builds a tensor from its frontal slices, which must share one shape.
    pub fn from_slices(slices: &[DMatrix<T>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidArgument("no frontal slices given".into()))?;
        let dims = Dims::new(first.nrows(), first.ncols(), slices.len())?;
        let mut data = Vec::with_capacity(dims.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != first.shape() {
                return Err(shape_err(format!(
                    "slice {k} has shape {:?}, expected {:?}",
                    s.shape(),
                    first.shape()
                )));
            }
            data.extend_from_slice(s.as_slice());
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> Dims {
        self.dims
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

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        k * self.dims.slice_len() + j * self.dims.n1 + i
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Option<&T> {
        let d = self.dims;
        (i < d.n1 && j < d.n2 && k < d.n3).then(|| &self.data[self.offset(i, j, k)])
    }

    fn check_slice(&self, k: usize) -> Result<()> {
        if k >= self.dims.n3 {
            return Err(Error::Index {
                index: k,
                len: self.dims.n3,
            });
        }
        Ok(())
    }

    fn slice_range(&self, k: usize) -> std::ops::Range<usize> {
        let len = self.dims.slice_len();
        k * len..(k + 1) * len
    }

    /// View of frontal slice `k` as an `n1 x n2` matrix.
    pub fn frontal_slice(&self, k: usize) -> Result<DMatrixView<'_, T>> {
        self.check_slice(k)?;
        let r = self.slice_range(k);
        Ok(DMatrixView::from_slice(
            &self.data[r],
            self.dims.n1,
            self.dims.n2,
        ))
    }

    pub fn frontal_slice_mut(&mut self, k: usize) -> Result<DMatrixViewMut<'_, T>> {
        self.check_slice(k)?;
        let r = self.slice_range(k);
        let (n1, n2) = (self.dims.n1, self.dims.n2);
        Ok(DMatrixViewMut::from_slice(&mut self.data[r], n1, n2))
    }

    /// Iterates over all frontal slices in order.
    pub fn slices(&self) -> impl Iterator<Item = DMatrixView<'_, T>> + '_ {
        let (n1, n2) = (self.dims.n1, self.dims.n2);
        self.data
            .chunks_exact(self.dims.slice_len())
            .map(move |c| DMatrixView::from_slice(c, n1, n2))
    }

    /// Owned copies of all frontal slices.
    pub fn to_slices(&self) -> Vec<DMatrix<T>> {
        self.slices().map(|s| s.into_owned()).collect()
    }

    /// Sub-tensor made of frontal slices `start..end`.
    pub fn slice_range_owned(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.dims.n3 {
            return Err(Error::InvalidArgument(format!(
                "slice range {start}..{end} invalid for {} slices",
                self.dims.n3
            )));
        }
        let len = self.dims.slice_len();
        Ok(Self {
            dims: Dims {
                n3: end - start,
                ..self.dims
            },
            data: self.data[start * len..end * len].to_vec(),
        })
    }

    /// Concatenates tensors along the third mode.
    pub fn concat3(parts: &[&Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
        let (n1, n2) = (first.dims.n1, first.dims.n2);
        let mut n3 = 0;
        for p in parts {
            if p.dims.n1 != n1 || p.dims.n2 != n2 {
                return Err(shape_err(format!(
                    "cannot concatenate {} with {} along mode 3",
                    first.dims, p.dims
                )));
            }
            n3 += p.dims.n3;
        }
        let mut data = Vec::with_capacity(n1 * n2 * n3);
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Ok(Self {
            dims: Dims { n1, n2, n3 },
            data,
        })
    }

    /// Mode-3 unfolding: an `n3 x (n1 n2)` matrix whose column `j * n1 + i`
    /// is the fiber `x(i, j, :)`.
    pub fn unfold3(&self) -> DMatrix<T> {
        self.as_fiber_matrix().transpose()
    }

    /// Inverse of [`Tensor3::unfold3`].
    pub fn fold3(m: &DMatrix<T>, dims: Dims) -> Result<Self> {
        if m.nrows() != dims.n3 || m.ncols() != dims.slice_len() {
            return Err(shape_err(format!(
                "cannot fold a {}x{} matrix into {dims}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self {
            dims,
            data: m.transpose().as_slice().to_vec(),
        })
    }

    /// The storage read as a column-major `(n1 n2) x n3` matrix, i.e. the
    /// transposed mode-3 unfolding, without copying.
    pub(crate) fn as_fiber_matrix(&self) -> DMatrixView<'_, T> {
        DMatrixView::from_slice(&self.data, self.dims.slice_len(), self.dims.n3)
    }

    pub fn map<U: Scalar>(&self, f: impl FnMut(&T) -> U) -> Tensor3<U> {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Element-wise combination of two same-shaped tensors.
    pub fn zip_map<U: Scalar, V: Scalar>(
        &self,
        other: &Tensor3<U>,
        mut f: impl FnMut(&T, &U) -> V,
    ) -> Result<Tensor3<V>> {
        same_dims(self.dims, other.dims)?;
        Ok(Tensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }
}

impl<T: Scalar + ComplexField> Tensor3<T> {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            data: vec![T::zero(); dims.len()],
        }
    }

    /// Tensor whose every frontal slice is the `n x n` identity. This is not
    /// the identity of a transformed product in general; see
    /// [`crate::transform::TransformSpec::identity`].
    pub fn identity_slices(n: usize, n3: usize) -> Self {
        Self::from_fn(Dims { n1: n, n2: n, n3 }, |i, j, _| {
            if i == j {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Tensor with the `n x n` identity in slice 0 and zeros elsewhere: the
    /// identity of the classical t-product.
    pub fn tproduct_identity(n: usize, n3: usize) -> Self {
        Self::from_fn(Dims { n1: n, n2: n, n3 }, |i, j, k| {
            if i == j && k == 0 {
                T::one()
            } else {
                T::zero()
            }
        })
    }
}

impl Tensor3<f64> {
    pub fn to_complex(&self) -> ComplexTensor3 {
        self.map(|&v| Complex::new(v, 0.0))
    }

    /// Number of entries that are not exactly zero.
    pub fn l0_norm(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    /// Number of entries with magnitude above `eps`.
    pub fn l0_norm_eps(&self, eps: f64) -> usize {
        self.data.iter().filter(|v| v.abs() > eps).count()
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn inf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `<x, y> = sum_k <X^(k), Y^(k)>`.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        same_dims(self.dims, other.dims)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `max |x - y|`, or an error when shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        same_dims(self.dims, other.dims)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

impl ComplexTensor3 {
    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn re(&self) -> Tensor3<f64> {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> Tensor3<f64> {
        self.map(|v| v.im)
    }
}

impl<T: Scalar> Index<(usize, usize, usize)> for Tensor3<T> {
    type Output = T;

    fn index(&self, (i, j, k): (usize, usize, usize)) -> &T {
        let d = self.dims;
        assert!(
            i < d.n1 && j < d.n2 && k < d.n3,
            "index ({i}, {j}, {k}) out of bounds for {d}"
        );
        &self.data[self.offset(i, j, k)]
    }
}

impl<T: Scalar> IndexMut<(usize, usize, usize)> for Tensor3<T> {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut T {
        let d = self.dims;
        assert!(
            i < d.n1 && j < d.n2 && k < d.n3,
            "index ({i}, {j}, {k}) out of bounds for {d}"
        );
        let o = self.offset(i, j, k);
        &mut self.data[o]
    }
}

impl Add for &Tensor3<f64> {
    type Output = Tensor3<f64>;

    /// Panics on a shape mismatch, like matrix addition in nalgebra.
    fn add(self, rhs: Self) -> Tensor3<f64> {
        self.zip_map(rhs, |a, b| a + b)
            .expect("tensor addition requires equal dims")
    }
}

impl Sub for &Tensor3<f64> {
    type Output = Tensor3<f64>;

    fn sub(self, rhs: Self) -> Tensor3<f64> {
        self.zip_map(rhs, |a, b| a - b)
            .expect("tensor subtraction requires equal dims")
    }
}

pub(crate) fn same_dims(a: Dims, b: Dims) -> Result<()> {
    if a != b {
        return Err(shape_err(format!("dims {a} and {b} differ")));
    }
    Ok(())
}

/// Mode-3 product `x ×₃ m`: every mode-3 fiber `x(i, j, :)` is replaced by
/// `m · x(i, j, :)`.
pub fn mode3_product<T: Scalar + ComplexField>(
    x: &Tensor3<T>,
    m: &DMatrix<T>,
) -> Result<Tensor3<T>> {
    let n3 = x.dims.n3;
    if m.nrows() != n3 || m.ncols() != n3 {
        return Err(shape_err(format!(
            "mode-3 product needs a {n3}x{n3} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let out = x.as_fiber_matrix() * m.transpose();
    Ok(Tensor3 {
        dims: x.dims,
        data: out.data.into(),
    })
}

/// Block-circulant reference constructions. These build
/// `(n1 n3) x (n2 n3)` matrices and exist to check the fast transform-domain
/// code paths; nothing in the solver calls them.
pub mod reference {
    use super::*;

    /// `bcirc(x)`: block `(r, c)` is frontal slice `(r - c) mod n3`.
    pub fn bcirc(x: &Tensor3<f64>) -> DMatrix<f64> {
        let Dims { n1, n2, n3 } = x.dims();
        let mut out = DMatrix::zeros(n1 * n3, n2 * n3);
        for r in 0..n3 {
            for c in 0..n3 {
                let k = (r + n3 - c) % n3;
                let s = x.frontal_slice(k).expect("slice index in range");
                out.view_mut((r * n1, c * n2), (n1, n2)).copy_from(&s);
            }
        }
        out
    }

    /// Stacks the frontal slices vertically into an `(n1 n3) x n2` matrix.
    pub fn unfold_blocks(x: &Tensor3<f64>) -> DMatrix<f64> {
        let Dims { n1, n2, n3 } = x.dims();
        let mut out = DMatrix::zeros(n1 * n3, n2);
        for (k, s) in x.slices().enumerate() {
            out.view_mut((k * n1, 0), (n1, n2)).copy_from(&s);
        }
        out
    }

    /// Inverse of [`unfold_blocks`].
    pub fn fold_blocks(m: &DMatrix<f64>, n3: usize) -> Result<Tensor3<f64>> {
        if n3 == 0 || !m.nrows().is_multiple_of(n3) {
            return Err(shape_err(format!(
                "{} rows cannot be split into {n3} blocks",
                m.nrows()
            )));
        }
        let n1 = m.nrows() / n3;
        let slices: Vec<DMatrix<f64>> = (0..n3)
            .map(|k| m.view((k * n1, 0), (n1, m.ncols())).into_owned())
            .collect();
        Tensor3::from_slices(&slices)
    }

    /// t-product `x * y = fold(bcirc(x) · unfold(y))`, computed literally.
    pub fn tproduct_oracle(x: &Tensor3<f64>, y: &Tensor3<f64>) -> Result<Tensor3<f64>> {
        let (a, b) = (x.dims(), y.dims());
        if a.n2 != b.n1 || a.n3 != b.n3 {
            return Err(shape_err(format!("cannot t-multiply {a} by {b}")));
        }
        fold_blocks(&(bcirc(x) * unfold_blocks(y)), a.n3)
    }
}
