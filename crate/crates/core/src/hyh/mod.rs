//! Hyperbolic Householder factorization updates.
//!
//! Given a Cholesky factor `L` of `H`, an update matrix `A` and a diagonal
//! `Σ` of any sign, compute the factor `L̃` of `H + A Σ Aᵀ` by triangularizing
//! `(L | A)` with a `diag(I, Σ)`-orthogonal transformation `Q`:
//! `(L | A) Q = (L̃ | 0)`.
//!
//! The transformation is built from one reflector per column of `L`, grouped
//! in blocks of `r` columns whose product is kept in compact WY form so it can
//! be pushed to the rows below with matrix-matrix style loops.

mod counted;
mod kernel;
mod reflector;
mod wy;

pub use counted::{hyh_update_counted, FlopCounter};
pub use kernel::HyhWorkspace;
pub use reflector::{make_reflector, ReflectorScalars};
pub use wy::{reconstruct_q, reconstruct_q_embedded, CompactWY};

pub(crate) use kernel::update_columns;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SignedDiagonal, TriFactor};

/// Block size used when callers have no preference.
pub const DEFAULT_BLOCK_SIZE: usize = 4;

fn check_update_dims(l: &TriFactor, a: &DenseMatrix, sigma: &SignedDiagonal) -> Result<()> {
    if a.rows() != l.n() {
        return Err(Error::dims(format!(
            "update matrix has {} rows, factor has order {}",
            a.rows(),
            l.n()
        )));
    }
    sigma.check_cols(a)
}

/// Triangularize the diagonal block `(L11 | A1)` in place.
///
/// On return `l11` holds `L̃11` and `a1` holds `B` (row `i` is `b_(i)ᵀ`); the
/// returned [`CompactWY`] carries a copy of `B` and the triangular factor `T`.
/// On error both operands are left in an unspecified state.
pub fn hyh_update_block(
    l11: &mut TriFactor,
    a1: &mut DenseMatrix,
    sigma: &SignedDiagonal,
) -> Result<CompactWY> {
    check_update_dims(l11, a1, sigma)?;
    let n = l11.n();
    let m = a1.cols();
    let mut t = DenseMatrix::zeros(n, n);
    let mut tau_inv = vec![0.0; n];
    let mut sb = vec![0.0; m + n];
    kernel::update_diag_block(
        l11.as_dense_mut().as_mut_slice(),
        n,
        0,
        n,
        a1.as_mut_slice(),
        n,
        sigma.entries(),
        t.as_mut_slice(),
        &mut tau_inv,
        &mut sb,
    )?;
    Ok(CompactWY::from_parts(a1.clone(), t, tau_inv))
}

/// Apply a block transformation to the rows `(L21 | A2)` in place, giving
/// `(L̃21 | Ã2) = (L21 | A2) Q`.
pub fn hyh_apply_block(
    l21: &mut DenseMatrix,
    a2: &mut DenseMatrix,
    sigma: &SignedDiagonal,
    w: &CompactWY,
) -> Result<()> {
    let k = w.k();
    let rows = l21.rows();
    if l21.cols() != k || a2.rows() != rows || a2.cols() != w.b().cols() {
        return Err(Error::dims(format!(
            "cannot apply {} reflectors with {} update columns to L21 {}x{} and A2 {}x{}",
            k,
            w.b().cols(),
            l21.rows(),
            l21.cols(),
            a2.rows(),
            a2.cols()
        )));
    }
    sigma.check_cols(a2)?;
    if let Some(index) = (0..k).find(|&i| w.t()[(i, i)] == 0.0) {
        return Err(Error::SingularTriangular { index });
    }
    if rows == 0 || k == 0 {
        return Ok(());
    }
    let m = a2.cols();
    // The raw kernel expects B stacked above the tail rows in one buffer.
    let ld = k + rows;
    let mut stacked_l = vec![0.0; ld * k];
    let mut stacked_a = vec![0.0; ld * m];
    for c in 0..k {
        stacked_l[c * ld + k..(c + 1) * ld].copy_from_slice(l21.col(c));
    }
    for p in 0..m {
        stacked_a[p * ld..p * ld + k].copy_from_slice(w.b().col(p));
        stacked_a[p * ld + k..(p + 1) * ld].copy_from_slice(a2.col(p));
    }
    let mut scratch = kernel::TailScratch::default();
    kernel::apply_tail(
        &mut stacked_l,
        ld,
        0,
        k,
        k..ld,
        &mut stacked_a,
        ld,
        sigma.entries(),
        w.t().as_slice(),
        w.tau_inv(),
        &mut scratch,
    );
    for c in 0..k {
        l21.col_mut(c).copy_from_slice(&stacked_l[c * ld + k..(c + 1) * ld]);
    }
    for p in 0..m {
        a2.col_mut(p).copy_from_slice(&stacked_a[p * ld + k..(p + 1) * ld]);
    }
    Ok(())
}

/// Cholesky factor of `L Lᵀ + A Σ Aᵀ` by the blocked update with block size
/// `r`. The inputs are left untouched.
pub fn hyh_update(
    l: &TriFactor,
    a: &DenseMatrix,
    sigma: &SignedDiagonal,
    r: usize,
) -> Result<TriFactor> {
    let mut out = l.clone();
    let mut a = a.clone();
    hyh_update_in_place(&mut out, &mut a, sigma, r, &mut HyhWorkspace::new())?;
    Ok(out)
}

/// In-place form of [`hyh_update`]. `a` is consumed as scratch: on return it
/// holds the reflector tails of the last column block and transformed
/// garbage elsewhere.
pub fn hyh_update_in_place(
    l: &mut TriFactor,
    a: &mut DenseMatrix,
    sigma: &SignedDiagonal,
    r: usize,
    ws: &mut HyhWorkspace,
) -> Result<()> {
    if r == 0 {
        return Err(Error::dims("block size must be at least 1"));
    }
    check_update_dims(l, a, sigma)?;
    let n = l.n();
    if a.cols() == 0 || n == 0 {
        return Ok(());
    }
    update_columns(
        l.as_dense_mut().as_mut_slice(),
        n,
        n,
        a.as_mut_slice(),
        n,
        sigma.entries(),
        r,
        0..n,
        ws,
    )
}
