//! Straightforward reference routines. These are the referees the fast kernels
//! are checked against, so they stay scalar and share no code with `dense` or
//! `hyh`.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SignedDiagonal, TriFactor};

const SYMMETRY_TOL: f64 = 1e-12;

/// Textbook right-looking Cholesky of a symmetric positive definite matrix.
///
/// Any pivot `<= 0` (or NaN) is reported with its index; there is no epsilon
/// floor.
pub fn reference_cholesky(h: &DenseMatrix) -> Result<TriFactor> {
    if !h.is_square() {
        return Err(Error::dims(format!(
            "Cholesky needs a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let n = h.rows();
    let scale = h.max_abs();
    for j in 0..n {
        for i in (j + 1)..n {
            if (h[(i, j)] - h[(j, i)]).abs() > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::dims(format!(
                    "matrix is not symmetric at ({}, {})",
                    i, j
                )));
            }
        }
    }

    let mut a = h.clone();
    for k in 0..n {
        let pivot = a[(k, k)];
        if !(pivot > 0.0) {
            return Err(Error::NotPositiveDefinite { index: k });
        }
        let d = pivot.sqrt();
        a[(k, k)] = d;
        for i in (k + 1)..n {
            a[(i, k)] /= d;
        }
        for j in (k + 1)..n {
            let ajk = a[(j, k)];
            for i in j..n {
                a[(i, j)] -= a[(i, k)] * ajk;
            }
        }
    }
    for j in 1..n {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    TriFactor::from_lower(a)
}

/// Dense `L Lᵀ + A Σ Aᵀ`, symmetric by construction.
pub fn sym_low_rank_form(
    l: &TriFactor,
    a: &DenseMatrix,
    sigma: &SignedDiagonal,
) -> Result<DenseMatrix> {
    let n = l.n();
    if a.rows() != n {
        return Err(Error::dims(format!(
            "update matrix has {} rows, factor is {}x{}",
            a.rows(),
            n,
            n
        )));
    }
    sigma.check_cols(a)?;
    let mut h = l.gram();
    for j in 0..n {
        for i in j..n {
            let mut s = 0.0;
            for (p, &sp) in sigma.entries().iter().enumerate() {
                s += a[(i, p)] * sp * a[(j, p)];
            }
            h[(i, j)] += s;
        }
    }
    h.symmetrize_from_lower();
    Ok(h)
}

/// Solve `W T = X` for `W` with `T` upper triangular, by substitution.
pub fn solve_right_upper(x: &DenseMatrix, t: &DenseMatrix) -> Result<DenseMatrix> {
    if !t.is_square() || t.rows() != x.cols() {
        return Err(Error::dims(format!(
            "cannot solve W·T = X with T {}x{} and X {}x{}",
            t.rows(),
            t.cols(),
            x.rows(),
            x.cols()
        )));
    }
    let k = t.rows();
    if let Some(index) = (0..k).find(|&i| t[(i, i)] == 0.0) {
        return Err(Error::SingularTriangular { index });
    }
    let mut w = DenseMatrix::zeros(x.rows(), k);
    for r in 0..x.rows() {
        for j in 0..k {
            let mut s = x[(r, j)];
            for i in 0..j {
                s -= w[(r, i)] * t[(i, j)];
            }
            w[(r, j)] = s / t[(j, j)];
        }
    }
    Ok(w)
}

/// `‖L̂ L̂ᵀ − H‖_F / ‖H‖_F`.
pub fn residual_fro(lhat: &TriFactor, h: &DenseMatrix) -> Result<f64> {
    if !h.is_square() || h.rows() != lhat.n() {
        return Err(Error::dims(format!(
            "factor is {}x{}, target is {}x{}",
            lhat.n(),
            lhat.n(),
            h.rows(),
            h.cols()
        )));
    }
    let denom = h.fro_norm();
    let num = lhat.gram().sub(h)?.fro_norm();
    Ok(num / denom)
}
