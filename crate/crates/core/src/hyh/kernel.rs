//! Raw blocked kernels on column-major storage.
//!
//! `L` is addressed as `(l, ldl)` and the update matrix as `(a, lda)` with
//! `m` columns. A diagonal block covers rows and columns `off..off + rb` of
//! `L` and rows `off..off + rb` of `A`; after the block update those rows of
//! `A` hold the reflector tails `B`.

use std::ops::Range;

use wide::f64x4;

use crate::dense::fmadd;
use crate::error::Result;

use super::reflector::pivot;

/// Scratch buffers for the blocked update, reusable across calls.
#[derive(Debug, Default, Clone)]
pub struct HyhWorkspace {
    pub(crate) t: Vec<f64>,
    pub(crate) tau_inv: Vec<f64>,
    pub(crate) sb: Vec<f64>,
    pub(crate) tail: TailScratch,
}

impl HyhWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Workspace sized for block size `r` and `m` update columns.
    pub fn with_capacity(r: usize, m: usize) -> Self {
        let mut ws = Self::default();
        ws.reserve(r, m);
        ws
    }

    pub(crate) fn reserve(&mut self, r: usize, m: usize) {
        let r = r.max(1);
        grow(&mut self.t, r * r);
        grow(&mut self.tau_inv, r);
        grow(&mut self.sb, m + r);
        grow(&mut self.tail.coef, r * m);
        grow(&mut self.tail.bt, r * m);
        grow(&mut self.tail.y, r * CHUNK);
    }
}

fn grow(v: &mut Vec<f64>, len: usize) {
    if v.len() < len {
        v.resize(len, 0.0);
    }
}

/// Reflectors for the diagonal block (unblocked, one column at a time).
///
/// Writes `L̃11` over `L11`, `B` over `A1`, the compact-WY factor `T` into
/// `t` (leading dimension `rb`, diagonal `τ`) and `τ⁻¹` into `tau_inv`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn update_diag_block(
    l: &mut [f64],
    ldl: usize,
    off: usize,
    rb: usize,
    a: &mut [f64],
    lda: usize,
    sigma: &[f64],
    t: &mut [f64],
    tau_inv: &mut [f64],
    sb: &mut [f64],
) -> Result<()> {
    match rb {
        2 => return diag_block_fixed::<2>(l, ldl, off, a, lda, sigma, t, tau_inv, sb),
        4 => return diag_block_simd::<1>(l, ldl, off, a, lda, sigma, t, tau_inv),
        8 => return diag_block_simd::<2>(l, ldl, off, a, lda, sigma, t, tau_inv),
        16 => return diag_block_simd::<4>(l, ldl, off, a, lda, sigma, t, tau_inv),
        _ => {}
    }
    let m = sigma.len();
    let (sb, acc) = sb.split_at_mut(m);
    for k in 0..rb {
        let row = off + k;
        let lambda = l[row + row * ldl];
        let mut alpha2 = 0.0;
        for (p, &s) in sigma.iter().enumerate() {
            let x = a[row + p * lda];
            alpha2 = fmadd(s * x, x, alpha2);
        }
        let pv = pivot(lambda, alpha2, k)?;
        l[row + row * ldl] = pv.lambda_new;
        t[k + k * rb] = pv.tau;
        tau_inv[k] = pv.tau_inv;
        for p in 0..m {
            let b = a[row + p * lda] * pv.inv_beta;
            a[row + p * lda] = b;
            sb[p] = sigma[p] * b;
        }

        // T[0..k, k] = B1[0..k] Σ b and s = ℓ + A'Σb for the rows below.
        let below = row + 1..off + rb;
        let lcol = &mut l[row * ldl + below.start..row * ldl + below.end];
        let s = &mut acc[..below.len()];
        s.copy_from_slice(lcol);
        t[k * rb..k * rb + k].fill(0.0);
        for (p, &sbp) in sb.iter().enumerate() {
            if sbp == 0.0 {
                continue;
            }
            let ap = &a[p * lda..(p + 1) * lda];
            for i in 0..k {
                t[i + k * rb] = fmadd(ap[off + i], sbp, t[i + k * rb]);
            }
            for (x, &y) in s.iter_mut().zip(&ap[below.clone()]) {
                *x = fmadd(y, sbp, *x);
            }
        }
        // w = τ⁻¹ s, ℓ̃ = w − ℓ, A' −= w bᵀ
        for (x, ell) in s.iter_mut().zip(lcol.iter_mut()) {
            *x *= pv.tau_inv;
            *ell = *x - *ell;
        }
        for p in 0..m {
            let b = a[row + p * lda];
            if b == 0.0 {
                continue;
            }
            let col = &mut a[p * lda + below.start..p * lda + below.end];
            for (x, &w) in col.iter_mut().zip(s.iter()) {
                *x = fmadd(-w, b, *x);
            }
        }
    }
    Ok(())
}

/// [`update_diag_block`] for a full block of `R` columns. Every column step
/// works on whole length-`R` block columns: `d = A1 Σ b` gives both the new
/// column of `T` (rows above the pivot) and `A'Σb` (rows below).
#[allow(clippy::too_many_arguments)]
fn diag_block_fixed<const R: usize>(
    l: &mut [f64],
    ldl: usize,
    off: usize,
    a: &mut [f64],
    lda: usize,
    sigma: &[f64],
    t: &mut [f64],
    tau_inv: &mut [f64],
    sb: &mut [f64],
) -> Result<()> {
    let m = sigma.len();
    let sb = &mut sb[..m];
    for k in 0..R {
        let row = off + k;
        let lambda = l[row + row * ldl];
        let mut alpha2 = 0.0;
        for (p, &s) in sigma.iter().enumerate() {
            let x = a[row + p * lda];
            alpha2 = fmadd(s * x, x, alpha2);
        }
        let pv = pivot(lambda, alpha2, k)?;
        l[row + row * ldl] = pv.lambda_new;
        tau_inv[k] = pv.tau_inv;

        let mut d = [0.0f64; R];
        for (p, sbp) in sb.iter_mut().enumerate() {
            let b = a[row + p * lda] * pv.inv_beta;
            a[row + p * lda] = b;
            *sbp = sigma[p] * b;
            let ap: &[f64; R] = a[p * lda + off..p * lda + off + R].try_into().unwrap();
            for i in 0..R {
                d[i] = fmadd(ap[i], *sbp, d[i]);
            }
        }
        let tk: &mut [f64; R] = (&mut t[k * R..(k + 1) * R]).try_into().unwrap();
        tk[..k].copy_from_slice(&d[..k]);
        tk[k] = pv.tau;

        // w = τ⁻¹ (ℓ + A'Σb) below the pivot, zero elsewhere.
        let lc = row * ldl + off;
        let lcol: &mut [f64; R] = (&mut l[lc..lc + R]).try_into().unwrap();
        let mut w = [0.0f64; R];
        for i in 0..R {
            let below = i > k;
            let wi = pv.tau_inv * (lcol[i] + d[i]);
            w[i] = if below { wi } else { 0.0 };
            lcol[i] = if below { wi - lcol[i] } else { lcol[i] };
        }
        for p in 0..m {
            let b = a[row + p * lda];
            let ap: &mut [f64; R] = (&mut a[p * lda + off..p * lda + off + R]).try_into().unwrap();
            for i in 0..R {
                ap[i] = fmadd(-w[i], b, ap[i]);
            }
        }
    }
    Ok(())
}

/// [`update_diag_block`] for `R = 4V` columns in vector registers, one pass
/// over the update columns per reflector. The pass that applies reflector `k`
/// also accumulates `α²` and `A'Σx` for reflector `k + 1` from the freshly
/// updated entries; scaling by `1/β` afterwards turns `x` into `b`.
#[allow(clippy::too_many_arguments)]
fn diag_block_simd<const V: usize>(
    l: &mut [f64],
    ldl: usize,
    off: usize,
    a: &mut [f64],
    lda: usize,
    sigma: &[f64],
    t: &mut [f64],
    tau_inv: &mut [f64],
) -> Result<()> {
    let r = 4 * V;
    let m = sigma.len();
    if m == 0 {
        return diag_block_fixed_empty(l, ldl, off, r, t, tau_inv);
    }
    let a = &mut a[..(m - 1) * lda + off + r];

    // Sums for the first reflector.
    let mut alpha2 = 0.0;
    let mut acc = [f64x4::ZERO; V];
    for (col, &sp) in a.chunks_mut(lda).zip(sigma) {
        let col = &col[off..off + r];
        let x = col[0];
        alpha2 = fmadd(sp * x, x, alpha2);
        let sx = f64x4::splat(sp * x);
        for v in 0..V {
            acc[v] = to_f64x4(&col[4 * v..4 * v + 4]).mul_add(sx, acc[v]);
        }
    }

    for k in 0..r {
        let row = off + k;
        let pv = pivot(l[row + row * ldl], alpha2, k)?;
        l[row + row * ldl] = pv.lambda_new;
        tau_inv[k] = pv.tau_inv;

        // d = A1 Σ b: rows above the pivot are the new column of T.
        let mut d = [0.0f64; 16];
        for (dv, av) in d.chunks_exact_mut(4).zip(&acc) {
            dv.copy_from_slice((*av * f64x4::splat(pv.inv_beta)).as_array_ref());
        }
        let tk = &mut t[k * r..(k + 1) * r];
        tk[..k].copy_from_slice(&d[..k]);
        tk[k] = pv.tau;

        // w = τ⁻¹ (ℓ + A'Σb) below the pivot, zero elsewhere.
        let lc = row * ldl + off;
        let lcol = &mut l[lc..lc + r];
        let mut wa = [0.0f64; 16];
        for i in k + 1..r {
            let wi = pv.tau_inv * (lcol[i] + d[i]);
            wa[i] = wi;
            lcol[i] = wi - lcol[i];
        }
        let mut w = [f64x4::ZERO; V];
        for (wv, c4) in w.iter_mut().zip(wa.chunks_exact(4)) {
            *wv = to_f64x4(c4);
        }

        let next = k + 1;
        alpha2 = 0.0;
        acc = [f64x4::ZERO; V];
        for (col, &sp) in a.chunks_mut(lda).zip(sigma) {
            let col = &mut col[off..off + r];
            let b = col[k] * pv.inv_beta;
            col[k] = b;
            let nb = f64x4::splat(-b);
            let mut fresh = [f64x4::ZERO; V];
            for v in 0..V {
                let c4 = &mut col[4 * v..4 * v + 4];
                let x = w[v].mul_add(nb, to_f64x4(c4));
                c4.copy_from_slice(x.as_array_ref());
                fresh[v] = x;
            }
            if next < r {
                let x = col[next];
                alpha2 = fmadd(sp * x, x, alpha2);
                let sx = f64x4::splat(sp * x);
                for v in 0..V {
                    acc[v] = fresh[v].mul_add(sx, acc[v]);
                }
            }
        }
    }
    Ok(())
}

/// No update columns: every reflector is the identity.
fn diag_block_fixed_empty(l: &mut [f64], ldl: usize, off: usize, r: usize, t: &mut [f64], tau_inv: &mut [f64]) -> Result<()> {
    for k in 0..r {
        let row = off + k;
        let pv = pivot(l[row + row * ldl], 0.0, k)?;
        l[row + row * ldl] = pv.lambda_new;
        tau_inv[k] = pv.tau_inv;
        t[k * r..k * r + k].fill(0.0);
        t[k * r + k] = pv.tau;
    }
    Ok(())
}

#[inline(always)]
fn to_f64x4(v: &[f64]) -> f64x4 {
    f64x4::from(<[f64; 4]>::try_from(v).unwrap())
}

/// Apply the block reflector of columns `off..off + rb` to `rows` of
/// `(L | A)`: `W = (L21 + A2 Σ Bᵀ) T⁻¹`, `Ã2 = A2 − W B`, `L̃21 = W − L21`.
///
/// Rows are processed in chunks of `CHUNK` so that every product is a short
/// fixed-width loop over a chunk held in cache.
#[allow(clippy::too_many_arguments)]
pub(crate) fn apply_tail(
    l: &mut [f64],
    ldl: usize,
    off: usize,
    rb: usize,
    rows: Range<usize>,
    a: &mut [f64],
    lda: usize,
    sigma: &[f64],
    t: &[f64],
    tau_inv: &[f64],
    scratch: &mut TailScratch,
) {
    let nr = rows.len();
    if nr == 0 || rb == 0 {
        return;
    }
    let m = sigma.len();
    // coef[p*rb + c] = σ_p B[c, p], bt[p*rb + c] = B[c, p]
    grow(&mut scratch.coef, rb * m);
    grow(&mut scratch.bt, rb * m);
    grow(&mut scratch.y, rb * CHUNK);
    let coef = scratch.coef[..rb * m].chunks_exact_mut(rb);
    let bt = scratch.bt[..rb * m].chunks_exact_mut(rb);
    for (((col, &sp), k), b) in a.chunks(lda).zip(sigma).zip(coef).zip(bt) {
        let src = &col[off..off + rb];
        b.copy_from_slice(src);
        for (x, &y) in k.iter_mut().zip(src) {
            *x = sp * y;
        }
    }
    let mut i0 = rows.start;
    match rb {
        4 => {
            while i0 + FIXED_CHUNK <= rows.end {
                apply_chunk_fixed::<4>(l, ldl, off, i0, a, lda, m, t, tau_inv, scratch);
                i0 += FIXED_CHUNK;
            }
        }
        8 => {
            while i0 + FIXED_CHUNK <= rows.end {
                apply_chunk_fixed::<8>(l, ldl, off, i0, a, lda, m, t, tau_inv, scratch);
                i0 += FIXED_CHUNK;
            }
        }
        _ => {
            while i0 + CHUNK <= rows.end {
                apply_chunk::<CHUNK>(l, ldl, off, rb, i0, a, lda, m, t, tau_inv, scratch);
                i0 += CHUNK;
            }
        }
    }
    while i0 < rows.end {
        apply_chunk::<1>(l, ldl, off, rb, i0, a, lda, m, t, tau_inv, scratch);
        i0 += 1;
    }
}

const CHUNK: usize = 8;
const FIXED_CHUNK: usize = 4;

/// Per-call buffers of [`apply_tail`].
#[derive(Debug, Default, Clone)]
pub(crate) struct TailScratch {
    coef: Vec<f64>,
    bt: Vec<f64>,
    y: Vec<f64>,
}

/// [`apply_chunk`] for a full block of `RB` columns and four rows, with the
/// whole `4 × RB` tile of `W` held in vector registers.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn apply_chunk_fixed<const RB: usize>(
    l: &mut [f64],
    ldl: usize,
    off: usize,
    i0: usize,
    a: &mut [f64],
    lda: usize,
    m: usize,
    t: &[f64],
    tau_inv: &[f64],
    scratch: &TailScratch,
) {
    let coef = &scratch.coef[..m * RB];
    let bt = &scratch.bt[..m * RB];
    let t: &[f64] = &t[..RB * RB];
    let rows = i0..i0 + 4;
    let mut y = [f64x4::ZERO; RB];
    for (c, yc) in y.iter_mut().enumerate() {
        let s = (off + c) * ldl + i0;
        *yc = to_f64x4(&l[s..s + 4]);
    }
    for (col, kp) in a.chunks(lda).zip(coef.chunks_exact(RB)) {
        let kp: &[f64; RB] = kp.try_into().unwrap();
        let ap = to_f64x4(&col[rows.clone()]);
        for c in 0..RB {
            y[c] = f64x4::splat(kp[c]).mul_add(ap, y[c]);
        }
    }
    for c in 0..RB {
        let tc = &t[c * RB..c * RB + c];
        let mut yc = y[c];
        for (i, &tic) in tc.iter().enumerate() {
            yc = f64x4::splat(-tic).mul_add(y[i], yc);
        }
        yc *= f64x4::splat(tau_inv[c]);
        y[c] = yc;
        let s = (off + c) * ldl + i0;
        let lc = &mut l[s..s + 4];
        let lt = yc - to_f64x4(lc);
        lc.copy_from_slice(lt.as_array_ref());
    }
    // Two columns per step keeps two independent accumulation chains.
    let mut pairs = a.chunks_mut(2 * lda).zip(bt.chunks_exact(2 * RB));
    for (cols, kk) in pairs.by_ref() {
        let (k0, k1) = kk.split_at(RB);
        let (c0, c1) = cols.split_at_mut(lda);
        let (d0, d1) = (&mut c0[rows.clone()], &mut c1[rows.clone()]);
        let mut acc0 = to_f64x4(d0);
        let mut acc1 = to_f64x4(d1);
        for c in 0..RB {
            acc0 = f64x4::splat(-k0[c]).mul_add(y[c], acc0);
            acc1 = f64x4::splat(-k1[c]).mul_add(y[c], acc1);
        }
        d0.copy_from_slice(acc0.as_array_ref());
        d1.copy_from_slice(acc1.as_array_ref());
    }
    if m % 2 == 1 {
        let k0 = &bt[(m - 1) * RB..m * RB];
        let d0 = &mut a[(m - 1) * lda + i0..(m - 1) * lda + i0 + 4];
        let mut acc0 = to_f64x4(d0);
        for c in 0..RB {
            acc0 = f64x4::splat(-k0[c]).mul_add(y[c], acc0);
        }
        d0.copy_from_slice(acc0.as_array_ref());
    }
}

#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn apply_chunk<const W: usize>(
    l: &mut [f64],
    ldl: usize,
    off: usize,
    rb: usize,
    i0: usize,
    a: &mut [f64],
    lda: usize,
    m: usize,
    t: &[f64],
    tau_inv: &[f64],
    scratch: &mut TailScratch,
) {
    let TailScratch { coef, bt, y } = scratch;
    let y = &mut y[..rb * W];
    // Y = L21 + A2 Σ Bᵀ
    let mut c = 0;
    while c + NR <= rb {
        y_panel::<W, NR>(y, l, ldl, off, c, i0, a, lda, m, rb, coef);
        c += NR;
    }
    while c < rb {
        y_panel::<W, 1>(y, l, ldl, off, c, i0, a, lda, m, rb, coef);
        c += 1;
    }
    // W = Y T⁻¹ column by column; L̃21 = W − L21.
    for c in 0..rb {
        let (done, rest) = y.split_at_mut(c * W);
        let yc: &mut [f64; W] = (&mut rest[..W]).try_into().unwrap();
        for i in 0..c {
            let tic = t[i + c * rb];
            let wi: &[f64; W] = done[i * W..(i + 1) * W].try_into().unwrap();
            for q in 0..W {
                yc[q] = fmadd(-tic, wi[q], yc[q]);
            }
        }
        let ti = tau_inv[c];
        let lc = (off + c) * ldl + i0;
        let lcol: &mut [f64; W] = (&mut l[lc..lc + W]).try_into().unwrap();
        for q in 0..W {
            yc[q] *= ti;
            lcol[q] = yc[q] - lcol[q];
        }
    }
    // Ã2 = A2 − W B
    let mut p = 0;
    while p + NR <= m {
        a_panel::<W, NR>(a, lda, p, i0, y, rb, bt);
        p += NR;
    }
    while p < m {
        a_panel::<W, 1>(a, lda, p, i0, y, rb, bt);
        p += 1;
    }
}

/// Panel width of the register-blocked products.
const NR: usize = 4;

/// Columns `c0..c0 + K` of `Y` for one row chunk.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn y_panel<const W: usize, const K: usize>(
    y: &mut [f64],
    l: &[f64],
    ldl: usize,
    off: usize,
    c0: usize,
    i0: usize,
    a: &[f64],
    lda: usize,
    m: usize,
    rb: usize,
    coef: &[f64],
) {
    let mut acc = [[0.0f64; W]; K];
    for (j, accj) in acc.iter_mut().enumerate() {
        let lc = (off + c0 + j) * ldl + i0;
        accj.copy_from_slice(&l[lc..lc + W]);
    }
    for p in 0..m {
        let ap: &[f64; W] = a[p * lda + i0..p * lda + i0 + W].try_into().unwrap();
        let kp: &[f64; K] = coef[p * rb + c0..p * rb + c0 + K].try_into().unwrap();
        for j in 0..K {
            for q in 0..W {
                acc[j][q] = fmadd(kp[j], ap[q], acc[j][q]);
            }
        }
    }
    for (j, accj) in acc.iter().enumerate() {
        y[(c0 + j) * W..(c0 + j + 1) * W].copy_from_slice(accj);
    }
}

/// Columns `p0..p0 + K` of `A2 − W B` for one row chunk.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn a_panel<const W: usize, const K: usize>(
    a: &mut [f64],
    lda: usize,
    p0: usize,
    i0: usize,
    y: &[f64],
    rb: usize,
    bt: &[f64],
) {
    let mut acc = [[0.0f64; W]; K];
    for (j, accj) in acc.iter_mut().enumerate() {
        let s = (p0 + j) * lda + i0;
        accj.copy_from_slice(&a[s..s + W]);
    }
    for c in 0..rb {
        let wc: &[f64; W] = y[c * W..(c + 1) * W].try_into().unwrap();
        for j in 0..K {
            let k = bt[(p0 + j) * rb + c];
            for q in 0..W {
                acc[j][q] = fmadd(-k, wc[q], acc[j][q]);
            }
        }
    }
    for (j, accj) in acc.iter().enumerate() {
        let s = (p0 + j) * lda + i0;
        a[s..s + W].copy_from_slice(accj);
    }
}

/// Blocked update of the columns `cols` of an `n × n` factor: each block is
/// triangularized by [`update_diag_block`] and its transformation pushed down
/// to the rows below it by [`apply_tail`].
#[allow(clippy::too_many_arguments)]
pub(crate) fn update_columns(
    l: &mut [f64],
    ldl: usize,
    n: usize,
    a: &mut [f64],
    lda: usize,
    sigma: &[f64],
    r: usize,
    cols: Range<usize>,
    ws: &mut HyhWorkspace,
) -> Result<()> {
    let r = r.max(1);
    ws.reserve(r, sigma.len());
    let HyhWorkspace { t, tau_inv, sb, tail } = ws;
    let mut c0 = cols.start;
    while c0 < cols.end {
        let rb = r.min(cols.end - c0);
        update_diag_block(l, ldl, c0, rb, a, lda, sigma, t, tau_inv, sb)
            .map_err(|e| e.offset_column(c0))?;
        apply_tail(l, ldl, c0, rb, c0 + rb..n, a, lda, sigma, t, tau_inv, tail);
        c0 += rb;
    }
    Ok(())
}
