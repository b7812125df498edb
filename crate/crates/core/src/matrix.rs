//! Dense column-major storage and the two structured wrappers used throughout
//! the crate: lower-triangular Cholesky factors and signed diagonal weights.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// General dense matrix, column-major, double precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for DenseMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        DenseMatrix::from_col_major(raw.rows, raw.cols, raw.data)
    }
}

impl From<DenseMatrix> for RawMatrix {
    fn from(m: DenseMatrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Build from row slices; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(Error::dims(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    ncols
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[i + j * rows] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Plain triple-loop product; used by oracles and tests, not hot paths.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::dims(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for p in 0..self.cols {
                let s = rhs[(p, j)];
                if s == 0.0 {
                    continue;
                }
                let src = self.col(p);
                for (o, &x) in out.col_mut(j).iter_mut().zip(src) {
                    *o += x * s;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(rhs)?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Copy of the `rows × cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, src: &DenseMatrix) {
        for j in 0..src.cols {
            for i in 0..src.rows {
                self[(r0 + i, c0 + j)] = src[(i, j)];
            }
        }
    }

    /// Overwrite the strict upper triangle with the strict lower one.
    pub fn symmetrize_from_lower(&mut self) {
        let n = self.rows.min(self.cols);
        for j in 0..n {
            for i in (j + 1)..n {
                self.data[j + i * self.rows] = self.data[i + j * self.rows];
            }
        }
    }

    pub(crate) fn check_same_shape(&self, rhs: &DenseMatrix) -> Result<()> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::dims(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i + j * self.rows]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i + j * self.rows]
    }
}

/// Square lower-triangular Cholesky factor with a positive diagonal.
///
/// Stored as a full `n × n` column-major square; the strict upper triangle is
/// dead storage and is never read by the kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DenseMatrix", into = "DenseMatrix")]
pub struct TriFactor(DenseMatrix);

impl TryFrom<DenseMatrix> for TriFactor {
    type Error = Error;

    fn try_from(m: DenseMatrix) -> Result<Self> {
        TriFactor::from_lower(m)
    }
}

impl From<TriFactor> for DenseMatrix {
    fn from(l: TriFactor) -> Self {
        l.0
    }
}

impl TriFactor {
    pub fn identity(n: usize) -> Self {
        TriFactor(DenseMatrix::identity(n))
    }

    /// Wrap a square matrix; only its lower triangle is significant.
    pub fn from_lower(m: DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims(format!(
                "triangular factor must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        Ok(TriFactor(m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::from_lower(DenseMatrix::from_rows(rows)?)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.0.rows
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < j {
            0.0
        } else {
            self.0[(i, j)]
        }
    }

    #[inline]
    pub fn as_dense(&self) -> &DenseMatrix {
        &self.0
    }

    #[inline]
    pub(crate) fn as_dense_mut(&mut self) -> &mut DenseMatrix {
        &mut self.0
    }

    /// Dense copy with the dead upper triangle zeroed.
    pub fn to_lower_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n(), self.n(), |i, j| self.get(i, j))
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.0[(i, i)]).collect()
    }

    pub fn has_positive_diagonal(&self) -> bool {
        (0..self.n()).all(|i| self.0[(i, i)] > 0.0)
    }

    /// `L Lᵀ`, fully symmetric.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.n();
        let mut out = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let mut s = 0.0;
                for p in 0..=j {
                    s += self.0[(i, p)] * self.0[(j, p)];
                }
                out[(i, j)] = s;
            }
        }
        out.symmetrize_from_lower();
        out
    }

    /// Largest elementwise difference over the lower triangles, relative to the
    /// largest entry of `other`.
    pub fn rel_max_diff(&self, other: &TriFactor) -> f64 {
        let n = self.n().min(other.n());
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..n {
            for i in j..n {
                diff = diff.max((self.0[(i, j)] - other.0[(i, j)]).abs());
                scale = scale.max(other.0[(i, j)].abs());
            }
        }
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }

    /// True when the lower triangles agree bit for bit.
    pub fn lower_bits_eq(&self, other: &TriFactor) -> bool {
        self.n() == other.n()
            && (0..self.n())
                .all(|j| (j..self.n()).all(|i| self.0[(i, j)].to_bits() == other.0[(i, j)].to_bits()))
    }
}

/// Diagonal weight matrix Σ stored as its entries; any sign, zeros allowed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignedDiagonal(Vec<f64>);

impl SignedDiagonal {
    pub fn new(entries: Vec<f64>) -> Self {
        SignedDiagonal(entries)
    }

    pub fn ones(m: usize) -> Self {
        SignedDiagonal(vec![1.0; m])
    }

    pub fn zeros(m: usize) -> Self {
        SignedDiagonal(vec![0.0; m])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn negated(&self) -> SignedDiagonal {
        SignedDiagonal(self.0.iter().map(|s| -s).collect())
    }

    pub fn fro_norm(&self) -> f64 {
        self.0.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    /// `diag(I_n, Σ)`, the weight of the augmented row space `(L | A)`.
    pub fn augmented(&self, n: usize) -> SignedDiagonal {
        let mut e = vec![1.0; n];
        e.extend_from_slice(&self.0);
        SignedDiagonal(e)
    }

    pub(crate) fn check_cols(&self, a: &DenseMatrix) -> Result<()> {
        if self.len() != a.cols() {
            return Err(Error::dims(format!(
                "Σ has {} entries but the update matrix has {} columns",
                self.len(),
                a.cols()
            )));
        }
        Ok(())
    }
}

impl From<Vec<f64>> for SignedDiagonal {
    fn from(v: Vec<f64>) -> Self {
        SignedDiagonal(v)
    }
}
