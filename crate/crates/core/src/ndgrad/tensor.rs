use crate::scalar::Scalar;

use super::GradError;

/// Dense row-major array.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn from_vec(shape: Vec<usize>, data: Vec<T>) -> Result<Self, GradError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(GradError::Length {
                shape,
                len: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    /// Builds a `rows x cols` matrix from nested rows. Ragged input is rejected.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, GradError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(GradError::Shape {
                    op: "from_rows",
                    left: vec![rows.len(), cols],
                    right: vec![1, row.len()],
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(vec![rows.len(), cols], data)
    }

    pub fn full(shape: Vec<usize>, value: T) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![value; n],
        }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn ones(shape: Vec<usize>) -> Self {
        Self::full(shape, T::one())
    }

    pub fn scalar(value: T) -> Self {
        Self {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn eye(n: usize) -> Self {
        let mut t = Self::zeros(vec![n, n]);
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `(rows, cols)` of a rank-2 tensor.
    pub fn dims2(&self) -> Result<(usize, usize), GradError> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            _ => Err(GradError::Rank {
                expected: 2,
                shape: self.shape.clone(),
            }),
        }
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self, GradError> {
        Self::from_vec(shape, self.data)
    }

    /// Largest absolute element; zero for an empty tensor.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, v| if v.abs() > acc { v.abs() } else { acc })
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two equally shaped tensors.
    pub fn zip_with(
        &self,
        other: &Self,
        op: &'static str,
        f: impl Fn(T, T) -> T,
    ) -> Result<Self, GradError> {
        if self.shape != other.shape {
            return Err(GradError::Shape {
                op,
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, GradError> {
        let (p, q) = self.dims2()?;
        let (q2, r) = other.dims2()?;
        if q != q2 {
            return Err(GradError::Shape {
                op: "matmul",
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        Ok(Self {
            shape: vec![p, r],
            data: matmul_nn(&self.data, &other.data, p, q, r),
        })
    }
}

/// `C[p,r] = A[p,q] * B[q,r]`. Each output sums over `k` in ascending order,
/// so a row's result does not depend on how many other rows are present.
pub(crate) fn matmul_nn<T: Scalar>(a: &[T], b: &[T], p: usize, q: usize, r: usize) -> Vec<T> {
    let mut c = vec![T::zero(); p * r];
    for i in 0..p {
        let a_row = &a[i * q..(i + 1) * q];
        let c_row = &mut c[i * r..(i + 1) * r];
        for (k, &aik) in a_row.iter().enumerate() {
            let b_row = &b[k * r..(k + 1) * r];
            for (cij, &bkj) in c_row.iter_mut().zip(b_row) {
                *cij = *cij + aik * bkj;
            }
        }
    }
    c
}

/// `dA[p,q] += dC[p,r] * B[q,r]^T`.
pub(crate) fn matmul_nt_acc<T: Scalar>(
    dc: &[T],
    b: &[T],
    da: &mut [T],
    p: usize,
    q: usize,
    r: usize,
) {
    for i in 0..p {
        let dc_row = &dc[i * r..(i + 1) * r];
        for k in 0..q {
            let b_row = &b[k * r..(k + 1) * r];
            let dot = dc_row
                .iter()
                .zip(b_row)
                .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
            da[i * q + k] = da[i * q + k] + dot;
        }
    }
}

/// `dB[q,r] += A[p,q]^T * dC[p,r]`.
pub(crate) fn matmul_tn_acc<T: Scalar>(
    a: &[T],
    dc: &[T],
    db: &mut [T],
    p: usize,
    q: usize,
    r: usize,
) {
    for i in 0..p {
        let a_row = &a[i * q..(i + 1) * q];
        let dc_row = &dc[i * r..(i + 1) * r];
        for (k, &aik) in a_row.iter().enumerate() {
            let db_row = &mut db[k * r..(k + 1) * r];
            for (d, &g) in db_row.iter_mut().zip(dc_row) {
                *d = *d + aik * g;
            }
        }
    }
}
