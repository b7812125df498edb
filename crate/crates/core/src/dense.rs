//! Column-oriented dense kernels on raw column-major storage.
//!
//! These back the Riccati recursion and the "full refactorization" baseline.
//! Matrices are passed as `(data, ld)` with column `j` starting at `j * ld`.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SignedDiagonal, TriFactor};
use wide::f64x4;

/// `a * b + c`, fused when the target has FMA instructions.
#[inline(always)]
pub(crate) fn fmadd(a: f64, b: f64, c: f64) -> f64 {
    if cfg!(target_feature = "fma") {
        a.mul_add(b, c)
    } else {
        a * b + c
    }
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = fmadd(alpha, xi, *yi);
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    let (x, y) = (&x[..n], &y[..n]);
    let mut acc = f64x4::ZERO;
    let xc = x.chunks_exact(4);
    let yc = y.chunks_exact(4);
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        let a = f64x4::from(<[f64; 4]>::try_from(a).unwrap());
        let b = f64x4::from(<[f64; 4]>::try_from(b).unwrap());
        acc = a.mul_add(b, acc);
    }
    let acc = acc.to_array();
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (a, b) in xr.iter().zip(yr) {
        s = fmadd(*a, *b, s);
    }
    s
}

/// In-place lower Cholesky of the leading `n × n` block of `(data, ld)`.
///
/// Right-looking, one column at a time. Only the lower triangle is read or
/// written. On failure returns the index of the first non-positive pivot.
pub(crate) fn cholesky_lower(data: &mut [f64], ld: usize, n: usize) -> std::result::Result<(), usize> {
    for j in 0..n {
        let (left, right) = data.split_at_mut((j + 1) * ld);
        let col = &mut left[j * ld..j * ld + n];
        let pivot = col[j];
        if !(pivot > 0.0) {
            return Err(j);
        }
        let d = pivot.sqrt();
        col[j] = d;
        let inv = 1.0 / d;
        for x in &mut col[j + 1..] {
            *x *= inv;
        }
        let col = &col[..];
        for k in (j + 1)..n {
            let c = -col[k];
            let off = (k - j - 1) * ld;
            axpy(c, &col[k..n], &mut right[off + k..off + n]);
        }
    }
    Ok(())
}

/// Lower triangle of `H += A Σ Aᵀ` (`H` is `n × n`, `A` is `n × m`).
pub(crate) fn syrk_lower_signed(h: &mut [f64], ldh: usize, n: usize, a: &[f64], lda: usize, sigma: &[f64]) {
    for (p, &s) in sigma.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        let ap = &a[p * lda..p * lda + n];
        for k in 0..n {
            let c = s * ap[k];
            if c != 0.0 {
                axpy(c, &ap[k..n], &mut h[k * ldh + k..k * ldh + n]);
            }
        }
    }
}

/// Fresh factorization of `H + A Σ Aᵀ` written into `out`; `H` is the
/// previously factored matrix. This is the baseline the update kernels are
/// benchmarked against.
pub fn refactor_into(
    h: &DenseMatrix,
    a: &DenseMatrix,
    sigma: &SignedDiagonal,
    out: &mut TriFactor,
) -> Result<()> {
    let n = h.rows();
    if !h.is_square() || a.rows() != n || out.n() != n {
        return Err(Error::dims("refactorization operands disagree in size"));
    }
    sigma.check_cols(a)?;
    let dst = out.as_dense_mut().as_mut_slice();
    dst.copy_from_slice(h.as_slice());
    syrk_lower_signed(dst, n, n, a.as_slice(), n, sigma.entries());
    cholesky_lower(dst, n, n).map_err(|index| Error::NotPositiveDefinite { index })
}

/// Fast Cholesky of a symmetric matrix (lower triangle read).
pub fn cholesky(h: &DenseMatrix) -> Result<TriFactor> {
    if !h.is_square() {
        return Err(Error::dims("Cholesky needs a square matrix"));
    }
    let n = h.rows();
    let mut l = h.clone();
    cholesky_lower(l.as_mut_slice(), n, n).map_err(|index| Error::NotPositiveDefinite { index })?;
    TriFactor::from_lower(l)
}

/// `y = L x` for lower-triangular `(l, ld)` of order `n`.
pub(crate) fn trmv_lower(l: &[f64], ld: usize, n: usize, x: &[f64], y: &mut [f64]) {
    y[..n].fill(0.0);
    for j in 0..n {
        axpy(x[j], &l[j * ld + j..j * ld + n], &mut y[j..n]);
    }
}

/// `y = Lᵀ x` for lower-triangular `(l, ld)` of order `n`.
pub(crate) fn trmv_lower_t(l: &[f64], ld: usize, n: usize, x: &[f64], y: &mut [f64]) {
    for j in 0..n {
        y[j] = dot(&l[j * ld + j..j * ld + n], &x[j..n]);
    }
}

/// `x ← L⁻¹ x`.
pub(crate) fn trsv_lower(l: &[f64], ld: usize, n: usize, x: &mut [f64]) {
    for j in 0..n {
        let xj = x[j] / l[j * ld + j];
        x[j] = xj;
        axpy(-xj, &l[j * ld + j + 1..j * ld + n], &mut x[j + 1..n]);
    }
}

/// `x ← L⁻ᵀ x`.
pub(crate) fn trsv_lower_t(l: &[f64], ld: usize, n: usize, x: &mut [f64]) {
    for j in (0..n).rev() {
        let s = dot(&l[j * ld + j + 1..j * ld + n], &x[j + 1..n]);
        x[j] = (x[j] - s) / l[j * ld + j];
    }
}

/// `y += M x` for a general `rows × cols` matrix.
pub(crate) fn gemv_acc(m: &DenseMatrix, x: &[f64], y: &mut [f64]) {
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            axpy(xj, m.col(j), y);
        }
    }
}

/// `y += Mᵀ x`.
pub(crate) fn gemv_t_acc(m: &DenseMatrix, x: &[f64], y: &mut [f64]) {
    for (j, yj) in y.iter_mut().enumerate() {
        *yj += dot(m.col(j), x);
    }
}

/// `Y = Mᵀ X` for `X` with `k` columns of length `M.rows()`, written to the
/// first `k · M.cols()` entries of `y`. Goes through the row-major copy `mt`
/// so that the products run down contiguous rows, 16 outputs by 2 columns at
/// a time in registers.
pub(crate) fn gemm_tn(m: &DenseMatrix, x: &[f64], k: usize, y: &mut [f64], mt: &mut Vec<f64>) {
    const H: usize = 16;
    let (r, c) = (m.rows(), m.cols());
    if mt.len() < r * c {
        mt.resize(r * c, 0.0);
    }
    for j in 0..c {
        for (i, &v) in m.col(j).iter().enumerate() {
            mt[i * c + j] = v;
        }
    }
    let mt = &mt[..r * c];
    let load = |v: &[f64]| f64x4::from(<[f64; 4]>::try_from(v).unwrap());
    let full = c - c % H;
    for t in (0..k).step_by(2) {
        let two = t + 1 < k;
        let x0 = &x[t * r..(t + 1) * r];
        let x1 = if two { &x[(t + 1) * r..(t + 2) * r] } else { x0 };
        for q0 in (0..full).step_by(H) {
            let mut acc0 = [f64x4::ZERO; H / 4];
            let mut acc1 = [f64x4::ZERO; H / 4];
            for (i, row) in mt.chunks_exact(c).enumerate() {
                let row = &row[q0..q0 + H];
                let (a0, a1) = (f64x4::splat(x0[i]), f64x4::splat(x1[i]));
                for v in 0..H / 4 {
                    let w = load(&row[4 * v..4 * v + 4]);
                    acc0[v] = a0.mul_add(w, acc0[v]);
                    acc1[v] = a1.mul_add(w, acc1[v]);
                }
            }
            for v in 0..H / 4 {
                let s = t * c + q0 + 4 * v;
                y[s..s + 4].copy_from_slice(acc0[v].as_array_ref());
                if two {
                    y[s + c..s + c + 4].copy_from_slice(acc1[v].as_array_ref());
                }
            }
        }
        for tt in t..t + 1 + two as usize {
            let xt = &x[tt * r..(tt + 1) * r];
            for q in full..c {
                y[tt * c + q] = xt.iter().zip(mt[q..].iter().step_by(c)).fold(0.0, |s, (&a, &b)| fmadd(a, b, s));
            }
        }
    }
}
